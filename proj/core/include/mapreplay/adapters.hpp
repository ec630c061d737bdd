#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mapreplay/key_traits.hpp"
#include "mapreplay/map_config.hpp"
#include "mapreplay/ref_map.hpp"

namespace mapreplay {

/// Replay-time stand-in for every application key: the preserved hash code
/// and identity equality on the dense key index.
struct MockupKey {
  std::int32_t index = 0;
  std::int32_t hash = 0;

  std::int32_t hash_code() const noexcept { return hash; }
  friend bool operator==(const MockupKey& a, const MockupKey& b) noexcept { return a.index == b.index; }
};

/// What the replay loop needs from a map implementation. Construction from a
/// MapConfig and copy construction are reached through a factory (see
/// replay.hpp); everything else is called on the map and its iterators.
template <class M>
concept MapAdapter =
    std::copy_constructible<M> && std::move_constructible<M> &&
    requires(M& m, const M& cm, const MockupKey& k, ValueToken v, View view) {
      { m.get(k) } -> std::convertible_to<std::optional<ValueToken>>;
      { m.put(k, v) } -> std::convertible_to<std::optional<ValueToken>>;
      { m.remove(k) } -> std::convertible_to<std::optional<ValueToken>>;
      { m.contains_key(k) } -> std::convertible_to<bool>;
      m.clear();
      { cm.size() } -> std::convertible_to<std::size_t>;
      { m.iterate(view) };
      { m.iterate(view).advance() } -> std::convertible_to<bool>;
      m.iterate(view).remove();
    };

/// Adapters that expose the reference digest capture it at FreeMap points
/// during validating replay.
template <class M>
concept DigestibleMap = requires(const M& m) {
  { m.state_digest() } -> std::convertible_to<std::uint64_t>;
};

using RefMapAdapter = RefMap<MockupKey>;

/// std::unordered_map behind the adapter interface. The initial capacity becomes
/// the initial bucket request and the load factor the maximum load factor.
class StdMapAdapter {
  struct Hash {
    std::size_t operator()(const MockupKey& k) const noexcept {
      return static_cast<std::uint32_t>(spread_hash(k.hash));
    }
  };
  using Map = std::unordered_map<MockupKey, ValueToken, Hash>;

 public:
  explicit StdMapAdapter(const MapConfig& config);

  std::optional<ValueToken> get(const MockupKey& k) const {
    auto it = map_.find(k);
    return it == map_.end() ? std::nullopt : std::optional<ValueToken>(it->second);
  }
  bool contains_key(const MockupKey& k) const { return map_.find(k) != map_.end(); }
  std::optional<ValueToken> put(const MockupKey& k, ValueToken v) {
    auto [it, inserted] = map_.try_emplace(k, v);
    if (inserted) return std::nullopt;
    return std::exchange(it->second, v);
  }
  std::optional<ValueToken> remove(const MockupKey& k) {
    auto it = map_.find(k);
    if (it == map_.end()) return std::nullopt;
    const ValueToken v = it->second;
    map_.erase(it);
    return v;
  }
  void clear() { map_.clear(); }
  std::size_t size() const noexcept { return map_.size(); }

  class Iterator {
   public:
    bool advance() {
      if (pos_ == map_->end()) return false;
      last_ = pos_++;
      has_last_ = true;
      return true;
    }
    void remove() {
      if (!has_last_) throw IllegalIteratorState();
      map_->erase(last_);
      has_last_ = false;
    }

   private:
    friend class StdMapAdapter;
    explicit Iterator(Map* m) : map_(m), pos_(m->begin()) {}
    Map* map_;
    Map::iterator pos_;
    Map::iterator last_{};
    bool has_last_ = false;
  };

  Iterator iterate(View) { return Iterator(&map_); }

 private:
  Map map_;
};

/// Open-addressing table with linear probing and tombstones, the usual
/// alternative collision strategy. Capacity is a power of two; the table is
/// allocated on first insert and never shrinks.
template <class K, class Traits = KeyTraits<K>>
class LinearProbeMap {
 public:
  explicit LinearProbeMap(const MapConfig& config = {}) : config_(config) {
    config_.validate();
    config_.initial_capacity = normalize_capacity(config_.initial_capacity);
  }

  std::optional<ValueToken> get(const K& k) const {
    const std::size_t i = find(k, Traits::hash(k));
    return i == kNone ? std::nullopt : std::optional<ValueToken>(slots_[i].value);
  }
  bool contains_key(const K& k) const { return find(k, Traits::hash(k)) != kNone; }

  std::optional<ValueToken> put(const K& k, ValueToken v) {
    const std::int32_t h = Traits::hash(k);
    if (slots_.empty()) rebuild(config_.initial_capacity);
    std::size_t i = home(h);
    std::size_t tomb = kNone;
    for (; slots_[i].state != kEmpty; i = (i + 1) & mask_) {
      Slot& s = slots_[i];
      if (s.state == kFull && s.hash == h && Traits::equal(s.key, k)) return std::exchange(s.value, v);
      if (s.state == kTomb && tomb == kNone) tomb = i;
    }
    if (tomb != kNone) {
      i = tomb;
    } else {
      ++used_;
    }
    slots_[i] = Slot{k, h, v, kFull};
    ++size_;
    if (used_ > limit_) rebuild(size_ > limit_ ? slots_.size() * 2 : slots_.size());
    return std::nullopt;
  }

  std::optional<ValueToken> remove(const K& k) {
    const std::size_t i = find(k, Traits::hash(k));
    if (i == kNone) return std::nullopt;
    const ValueToken v = slots_[i].value;
    erase_at(i);
    return v;
  }

  void clear() {
    for (Slot& s : slots_) s.state = kEmpty;
    size_ = 0;
    used_ = 0;
  }

  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return slots_.size(); }

  class Iterator {
   public:
    bool advance() {
      const std::size_t n = map_->slots_.size();
      while (pos_ < n && map_->slots_[pos_].state != kFull) ++pos_;
      if (pos_ == n) return false;
      last_ = pos_++;
      return true;
    }
    void remove() {
      if (last_ == kNone) throw IllegalIteratorState();
      map_->erase_at(last_);
      last_ = kNone;
    }

   private:
    friend class LinearProbeMap;
    explicit Iterator(LinearProbeMap* m) : map_(m) {}
    LinearProbeMap* map_;
    std::size_t pos_ = 0;
    std::size_t last_ = kNone;
  };

  Iterator iterate(View = View::Entries) { return Iterator(this); }

 private:
  static constexpr std::uint8_t kEmpty = 0, kFull = 1, kTomb = 2;
  static constexpr std::size_t kNone = ~std::size_t{0};

  struct Slot {
    K key{};
    std::int32_t hash = 0;
    ValueToken value = 0;
    std::uint8_t state = kEmpty;
  };

  std::size_t home(std::int32_t h) const noexcept {
    return bucket_index(h, static_cast<std::uint32_t>(slots_.size()), config_.spread_hashes);
  }

  std::size_t find(const K& k, std::int32_t h) const {
    if (slots_.empty()) return kNone;
    for (std::size_t i = home(h); slots_[i].state != kEmpty; i = (i + 1) & mask_) {
      const Slot& s = slots_[i];
      if (s.state == kFull && s.hash == h && Traits::equal(s.key, k)) return i;
    }
    return kNone;
  }

  void erase_at(std::size_t i) {
    slots_[i].state = kTomb;
    --size_;
  }

  // Reinserts live entries into a table of `capacity` slots, dropping
  // tombstones. At least one slot always stays empty so probes terminate.
  void rebuild(std::size_t capacity) {
    std::vector<Slot> old = std::move(slots_);
    slots_.assign(capacity, Slot{});
    mask_ = capacity - 1;
    limit_ = std::min<std::size_t>(threshold(static_cast<std::uint32_t>(capacity), config_.load_factor_milli),
                                   capacity - 1);
    used_ = size_;
    for (Slot& s : old) {
      if (s.state != kFull) continue;
      std::size_t i = home(s.hash);
      while (slots_[i].state != kEmpty) i = (i + 1) & mask_;
      slots_[i] = s;
    }
  }

  MapConfig config_;
  std::vector<Slot> slots_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
  std::size_t used_ = 0;
  std::size_t limit_ = 0;
};

using LinearProbeAdapter = LinearProbeMap<MockupKey>;

}  // namespace mapreplay
