#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mapreplay/key_traits.hpp"
#include "mapreplay/map_config.hpp"

namespace mapreplay {

/// Deterministic work counters accumulated by RefMap in counting mode.
struct OpCounters {
  std::uint64_t resizes = 0;
  std::uint64_t collision_probes = 0;
  std::uint64_t buckets_scanned = 0;
  std::uint64_t entries_moved = 0;

  OpCounters& operator+=(const OpCounters& o) noexcept {
    resizes += o.resizes;
    collision_probes += o.collision_probes;
    buckets_scanned += o.buckets_scanned;
    entries_moved += o.entries_moved;
    return *this;
  }
  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

/// Which view an iterator was obtained from. The reference map walks all three
/// identically; other implementations may not.
enum class View : std::uint8_t { Keys = 0, Values = 1, Entries = 2 };

// Iterator misuse. These are the exceptional operations the tracer never
// records.
class IteratorExhausted : public std::logic_error {
 public:
  IteratorExhausted() : std::logic_error("iterator exhausted") {}
};
class ConcurrentModification : public std::logic_error {
 public:
  ConcurrentModification() : std::logic_error("map modified during iteration") {}
};
class IllegalIteratorState : public std::logic_error {
 public:
  IllegalIteratorState() : std::logic_error("no current element to remove") {}
};

/// 64-bit FNV-1a over little-endian words.
class Fnv1a64 {
 public:
  void add(std::uint64_t word) noexcept {
    for (int i = 0; i < 8; ++i) {
      state_ ^= (word >> (8 * i)) & 0xffu;
      state_ *= 1099511628211ull;
    }
  }
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 14695981039346656037ull;
};

/// Reference chained hash map: power-of-two table allocated on first insert,
/// doubling when size exceeds capacity * load factor, tail insertion, and a
/// table that never shrinks (clear() keeps the capacity).
///
/// When constructed with an OpCounters sink the map tallies resizes,
/// non-matching key comparisons, bucket slots visited by iteration and
/// entries rehashed. Copies share the sink of their source.
template <class K, class Traits = KeyTraits<K>>
class RefMap {
 public:
  using key_type = K;

  struct Node {
    K key;
    std::int32_t hash;
    ValueToken value;
    Node* next;
  };

  class Iterator;

  explicit RefMap(const MapConfig& config = {}, OpCounters* counters = nullptr)
      : config_(config), counters_(counters) {
    config_.validate();
    config_.initial_capacity = normalize_capacity(config_.initial_capacity);
  }

  /// Copy construction builds a new map pre-sized to hold the source without
  /// resizing: capacity = normalize(ceil(size / load factor)). An empty source
  /// yields an unallocated map with the source's configuration.
  RefMap(const RefMap& src) : config_(src.config_), counters_(src.counters_) {
    if (src.size_ == 0) return;
    const std::uint64_t lf = config_.load_factor_milli;
    allocate(normalize_capacity((std::uint64_t{src.size_} * 1000 + lf - 1) / lf));
    if (counters_) counters_->buckets_scanned += src.capacity_;
    for (std::uint32_t i = 0; i < src.capacity_; ++i) {
      for (const Node* n = src.table_[i]; n; n = n->next) insert_new(n->key, n->hash, n->value);
    }
  }

  RefMap(RefMap&& other) noexcept { swap(other); }

  RefMap& operator=(RefMap other) noexcept {
    swap(other);
    return *this;
  }

  ~RefMap() { release_nodes(); }

  void swap(RefMap& o) noexcept {
    using std::swap;
    swap(config_, o.config_);
    swap(table_, o.table_);
    swap(capacity_, o.capacity_);
    swap(size_, o.size_);
    swap(threshold_, o.threshold_);
    swap(mod_count_, o.mod_count_);
    swap(counters_, o.counters_);
  }

  std::optional<ValueToken> get(const K& key) const {
    const Node* n = find(key, Traits::hash(key));
    return n ? std::optional<ValueToken>(n->value) : std::nullopt;
  }

  bool contains_key(const K& key) const { return find(key, Traits::hash(key)) != nullptr; }

  /// Returns the previous value when the key was already present.
  std::optional<ValueToken> put(const K& key, ValueToken value) {
    const std::int32_t h = Traits::hash(key);
    if (!table_) allocate(config_.initial_capacity);
    Node** link = &table_[index_of(h)];
    for (; *link; link = &(*link)->next) {
      Node* n = *link;
      if (n->hash == h && Traits::equal(n->key, key)) {
        const ValueToken old = n->value;
        n->value = value;
        return old;
      }
      probe();
    }
    *link = new Node{key, h, value, nullptr};
    ++size_;
    ++mod_count_;
    grow_if_needed();
    return std::nullopt;
  }

  std::optional<ValueToken> remove(const K& key) {
    Node* n = unlink(key, Traits::hash(key));
    if (!n) return std::nullopt;
    const ValueToken v = n->value;
    delete n;
    return v;
  }

  void clear() {
    ++mod_count_;
    if (!table_ || size_ == 0) return;
    for (std::uint32_t i = 0; i < capacity_; ++i) {
      free_chain(table_[i]);
      table_[i] = nullptr;
    }
    size_ = 0;
  }

  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  bool allocated() const noexcept { return table_ != nullptr; }
  /// Table length, or 0 while the table is unallocated.
  std::uint32_t capacity() const noexcept { return capacity_; }
  /// Resize threshold of the current table; meaningless before allocation.
  std::uint32_t resize_threshold() const noexcept { return threshold_; }
  const MapConfig& config() const noexcept { return config_; }
  OpCounters* counters() const noexcept { return counters_; }
  void set_counters(OpCounters* counters) noexcept { counters_ = counters; }

  Iterator iterate(View view = View::Entries) { return Iterator(this, view); }

  /// Walks up to `steps` entries from a fresh iterator; returns how many were
  /// yielded (fewer than `steps` only when the map is exhausted).
  std::size_t iterate(View view, std::size_t steps) {
    Iterator it = iterate(view);
    std::size_t yielded = 0;
    while (yielded < steps && it.advance()) ++yielded;
    return yielded;
  }

  std::uint64_t state_digest() const noexcept {
    Fnv1a64 d;
    d.add(table_ ? 1 : 0);
    d.add(table_ ? capacity_ : config_.initial_capacity);
    d.add(size_);
    for (std::uint32_t i = 0; i < capacity_; ++i) {
      if (!table_[i]) continue;
      std::uint64_t len = 0;
      for (const Node* n = table_[i]; n; n = n->next) ++len;
      d.add(i);
      d.add(len);
      for (const Node* n = table_[i]; n; n = n->next) d.add(static_cast<std::uint32_t>(n->hash));
    }
    return d.value();
  }

  /// Calls f(bucket_index, head) for every slot of an allocated table.
  template <class F>
  void visit_buckets(F&& f) const {
    for (std::uint32_t i = 0; i < capacity_; ++i) f(i, static_cast<const Node*>(table_[i]));
  }

  std::uint32_t bucket_of(std::int32_t hash) const noexcept { return index_of(hash); }

  /// Java-style fail-fast iterator. The constructor positions on the first
  /// entry; next() returns the current entry and scans ahead to the next one.
  class Iterator {
   public:
    Iterator() = default;

    bool has_next() const noexcept { return next_ != nullptr; }

    const Node& next() {
      if (map_->mod_count_ != expected_mod_) throw ConcurrentModification();
      if (!next_) throw IteratorExhausted();
      Node* e = next_;
      current_ = e;
      next_ = e->next;
      if (!next_) scan();
      return *e;
    }

    /// next() without the exception on exhaustion.
    bool advance() {
      if (!next_) return false;
      next();
      return true;
    }

    /// Throws exactly when remove() would.
    void check_removable() const {
      if (!current_) throw IllegalIteratorState();
      if (map_->mod_count_ != expected_mod_) throw ConcurrentModification();
    }

    /// Entry returned by the last next(), or null after remove().
    const Node* current() const noexcept { return current_; }

    void remove() {
      check_removable();
      Node* n = map_->unlink(current_->key, current_->hash);
      delete n;
      current_ = nullptr;
      expected_mod_ = map_->mod_count_;
    }

    View view() const noexcept { return view_; }

   private:
    friend class RefMap;

    Iterator(RefMap* map, View view) : map_(map), view_(view), expected_mod_(map->mod_count_) {
      if (map_->table_) scan();
    }

    void scan() {
      const std::uint32_t cap = map_->capacity_;
      while (index_ < cap) {
        if (map_->counters_) ++map_->counters_->buckets_scanned;
        next_ = map_->table_[index_++];
        if (next_) return;
      }
    }

    RefMap* map_ = nullptr;
    Node* next_ = nullptr;
    Node* current_ = nullptr;
    std::uint32_t index_ = 0;
    View view_ = View::Entries;
    std::uint64_t expected_mod_ = 0;
  };

 private:
  std::uint32_t index_of(std::int32_t hash) const noexcept {
    return bucket_index(hash, capacity_, config_.spread_hashes);
  }

  void probe() const noexcept {
    if (counters_) ++counters_->collision_probes;
  }

  const Node* find(const K& key, std::int32_t h) const {
    if (!table_) return nullptr;
    for (const Node* n = table_[index_of(h)]; n; n = n->next) {
      if (n->hash == h && Traits::equal(n->key, key)) return n;
      probe();
    }
    return nullptr;
  }

  Node* unlink(const K& key, std::int32_t h) {
    if (!table_) return nullptr;
    for (Node** link = &table_[index_of(h)]; *link; link = &(*link)->next) {
      Node* n = *link;
      if (n->hash == h && Traits::equal(n->key, key)) {
        *link = n->next;
        --size_;
        ++mod_count_;
        return n;
      }
      probe();
    }
    return nullptr;
  }

  // Tail insertion of a key known to be absent (copy construction).
  void insert_new(const K& key, std::int32_t h, ValueToken value) {
    Node** link = &table_[index_of(h)];
    for (; *link; link = &(*link)->next) probe();
    *link = new Node{key, h, value, nullptr};
    ++size_;
    ++mod_count_;
  }

  void allocate(std::uint32_t capacity) {
    table_ = std::make_unique<Node*[]>(capacity);
    capacity_ = capacity;
    threshold_ = threshold(capacity, config_.load_factor_milli);
  }

  void grow_if_needed() {
    while (size_ > threshold_ && capacity_ < kMaxCapacity) resize(capacity_ * 2);
  }

  // Rehash preserving chain order: buckets are drained in index order and
  // appended at the tail of their new bucket.
  void resize(std::uint32_t new_capacity) {
    auto fresh = std::make_unique<Node*[]>(new_capacity);
    std::vector<Node**> tails(new_capacity);
    for (std::uint32_t i = 0; i < new_capacity; ++i) tails[i] = &fresh[i];
    for (std::uint32_t i = 0; i < capacity_; ++i) {
      Node* n = table_[i];
      while (n) {
        Node* next = n->next;
        const std::uint32_t j = bucket_index(n->hash, new_capacity, config_.spread_hashes);
        n->next = nullptr;
        *tails[j] = n;
        tails[j] = &n->next;
        n = next;
      }
    }
    if (counters_) {
      ++counters_->resizes;
      counters_->entries_moved += size_;
    }
    table_ = std::move(fresh);
    capacity_ = new_capacity;
    threshold_ = threshold(new_capacity, config_.load_factor_milli);
  }

  static void free_chain(Node* n) noexcept {
    while (n) {
      Node* next = n->next;
      delete n;
      n = next;
    }
  }

  void release_nodes() noexcept {
    if (!table_) return;
    for (std::uint32_t i = 0; i < capacity_; ++i) free_chain(table_[i]);
  }

  MapConfig config_;
  std::unique_ptr<Node*[]> table_;
  std::uint32_t capacity_ = 0;
  std::size_t size_ = 0;
  std::uint32_t threshold_ = 0;
  std::uint64_t mod_count_ = 0;
  OpCounters* counters_ = nullptr;
};

}  // namespace mapreplay
