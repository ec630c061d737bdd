#pragma once

#include <atomic>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <typeindex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mapreplay/key_traits.hpp"
#include "mapreplay/raw_trace.hpp"
#include "mapreplay/ref_map.hpp"

namespace mapreplay {

namespace detail {

template <class K>
concept StdHashable = requires(const K& k) {
  { std::hash<K>{}(k) } -> std::convertible_to<std::size_t>;
};

// The registry must find a key by equality even when its map-visible hash is
// unstable, so it hashes with std::hash where available.
template <class K>
struct RegistryHash {
  std::size_t operator()(const K& k) const {
    if constexpr (StdHashable<K>) {
      return std::hash<K>{}(k);
    } else {
      return static_cast<std::size_t>(static_cast<std::uint32_t>(KeyTraits<K>::hash(k)));
    }
  }
};

template <class K>
struct RegistryEqual {
  bool operator()(const K& a, const K& b) const { return KeyTraits<K>::equal(a, b); }
};

class KeyRegistryBase {
 public:
  virtual ~KeyRegistryBase() = default;
};

}  // namespace detail

/// Maps application keys to canonical key ids. Keys that compare equal share
/// one id (and the hash recorded at first use), so replay can use identity
/// equality on mockup keys.
template <class K>
class KeyRegistry : public detail::KeyRegistryBase {
 public:
  struct Resolution {
    std::uint64_t key_id;
    std::int32_t recorded_hash;
    /// The key's current hash differs from the one recorded at first use.
    bool hash_changed;
  };

  Resolution canonicalize(const K& key, std::atomic<std::uint64_t>& next_id) {
    const std::int32_t h = KeyTraits<K>::hash(key);
    std::lock_guard lock(mu_);
    auto [it, inserted] = ids_.try_emplace(key, Entry{0, h});
    if (inserted) it->second.id = next_id.fetch_add(1, std::memory_order_relaxed);
    return {it->second.id, it->second.hash, it->second.hash != h};
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return ids_.size();
  }

 private:
  struct Entry {
    std::uint64_t id;
    std::int32_t hash;
  };

  mutable std::mutex mu_;
  std::unordered_map<K, Entry, detail::RegistryHash<K>, detail::RegistryEqual<K>> ids_;
};

/// A recording session. Events go to per-thread append-only buffers tagged
/// with a global sequence number; close() merges them in record order.
///
/// Recording is safe from several threads as long as each map is used by one
/// thread at a time. Maps constructed while the session is closed are foreign:
/// their Create is never recorded, so post-processing drops their events.
class TraceSession {
 public:
  explicit TraceSession(bool start_open = true, const MapConfig& defaults = {});
  ~TraceSession();
  TraceSession(const TraceSession&) = delete;
  TraceSession& operator=(const TraceSession&) = delete;

  void open() noexcept { open_.store(true, std::memory_order_release); }
  bool is_open() const noexcept { return open_.load(std::memory_order_acquire); }

  /// Stops recording and returns the merged stream. Callers must have joined
  /// every recording thread first.
  RawTrace close();
  /// close() and write the result to `path`, end-marker included.
  void close_to_file(const std::filesystem::path& path);

  /// Appends `event` to the calling thread's buffer; false (and nothing
  /// recorded) when the session is closed.
  bool record(RawEvent event);

  std::uint64_t new_map_id() noexcept { return next_map_id_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t new_iter_id() noexcept { return next_iter_id_.fetch_add(1, std::memory_order_relaxed); }

  template <class K>
  KeyRegistry<K>& registry() {
    std::lock_guard lock(registry_mu_);
    auto& slot = registries_[std::type_index(typeid(K))];
    if (!slot) slot = std::make_unique<KeyRegistry<K>>();
    return static_cast<KeyRegistry<K>&>(*slot);
  }

  /// Canonical (key id, recorded hash) for `key`. A hash that drifted since
  /// first use poisons `map_id`: a Poison event is recorded and the map is
  /// excluded during post-processing.
  template <class K>
  std::pair<std::uint64_t, std::int32_t> canonicalize(std::uint64_t map_id, const K& key) {
    auto r = registry<K>().canonicalize(key, next_key_id_);
    if (r.hash_changed) record(raw::poison(map_id));
    return {r.key_id, r.recorded_hash};
  }

  const MapConfig& defaults() const noexcept { return defaults_; }

  void count_construction() noexcept { constructions_.fetch_add(1, std::memory_order_relaxed); }
  /// Traced map constructions (including foreign ones) since the session began.
  std::uint64_t constructions() const noexcept { return constructions_.load(); }

 private:
  struct ThreadBuffer {
    std::uint64_t thread_id;
    std::vector<std::pair<std::uint64_t, RawEvent>> events;
  };

  ThreadBuffer& buffer();

  const std::uint64_t uid_;
  MapConfig defaults_;
  std::atomic<bool> open_;
  std::atomic<std::uint64_t> next_seq_{0};
  std::atomic<std::uint64_t> next_map_id_{0};
  std::atomic<std::uint64_t> next_iter_id_{0};
  std::atomic<std::uint64_t> next_key_id_{0};
  std::atomic<std::uint64_t> constructions_{0};

  std::mutex buffers_mu_;
  std::unordered_map<std::thread::id, std::unique_ptr<ThreadBuffer>> buffers_;

  std::mutex registry_mu_;
  std::unordered_map<std::type_index, std::unique_ptr<detail::KeyRegistryBase>> registries_;
};

/// Map handle that delegates to a RefMap and records every traced operation.
/// Values are never recorded. Operations that throw (iterator misuse) leave no
/// event.
template <TraceableKey K>
class TracedMap {
 public:
  using Map = RefMap<K>;
  using Node = typename Map::Node;

  explicit TracedMap(TraceSession& session) : TracedMap(session, default_args(session)) {}
  TracedMap(TraceSession& session, std::uint32_t capacity)
      : TracedMap(session, explicit_args(session, capacity, std::nullopt)) {}
  TracedMap(TraceSession& session, std::uint32_t capacity, std::uint32_t load_factor_milli)
      : TracedMap(session, explicit_args(session, capacity, load_factor_milli)) {}

  TracedMap(TraceSession& session, const CreateArgs& args)
      : session_(&session), id_(session.new_map_id()), map_(args.config()) {
    session.count_construction();
    foreign_ = !session.record(raw::create(id_, args));
  }

  TracedMap(TracedMap&&) noexcept = default;
  TracedMap& operator=(TracedMap&&) noexcept = default;
  TracedMap(const TracedMap&) = delete;
  TracedMap& operator=(const TracedMap&) = delete;

  /// Copy construction: a new traced map holding this map's mappings.
  TracedMap copy() const { return TracedMap(*this, CopyTag{}); }

  std::optional<ValueToken> get(const K& key) const {
    auto result = map_.get(key);
    record_keyed(RawOpKind::Get, key, result.has_value());
    return result;
  }

  bool contains_key(const K& key) const {
    const bool hit = map_.contains_key(key);
    record_keyed(RawOpKind::ContainsKey, key, hit);
    return hit;
  }

  std::optional<ValueToken> put(const K& key, ValueToken value) {
    auto previous = map_.put(key, value);
    record_keyed(RawOpKind::Put, key, previous.has_value());
    return previous;
  }

  std::optional<ValueToken> remove(const K& key) {
    auto removed = map_.remove(key);
    record_keyed(RawOpKind::Remove, key, removed.has_value());
    return removed;
  }

  void clear() {
    map_.clear();
    session_->record(raw::clear(id_));
  }

  /// Compute-style update, recorded as the equivalent Put or Remove. `fn`
  /// receives the current value (if any) and returns the new one, or nullopt
  /// to remove the mapping.
  template <class F>
    requires std::invocable<F&, std::optional<ValueToken>>
  std::optional<ValueToken> compute(const K& key, F&& fn) {
    const std::optional<ValueToken> old = map_.get(key);
    const std::optional<ValueToken> next = fn(old);
    if (next) {
      put(key, *next);
    } else if (old) {
      remove(key);
    }
    return next;
  }

  std::size_t size() const noexcept { return map_.size(); }
  bool empty() const noexcept { return map_.empty(); }

  class Iterator {
   public:
    bool has_next() const noexcept { return it_.has_next(); }

    const Node& next() {
      const Node& n = it_.next();
      session_->record(raw::iter_advance(map_id_, iter_id_, 1));
      return n;
    }

    void remove() {
      it_.check_removable();
      const K removed = it_.current()->key;
      it_.remove();
      auto [key_id, hash] = session_->canonicalize(map_id_, removed);
      session_->record(raw::iter_remove(map_id_, iter_id_, key_id, hash));
    }

    std::uint64_t id() const noexcept { return iter_id_; }

   private:
    friend class TracedMap;
    Iterator(TraceSession* s, std::uint64_t map_id, std::uint64_t iter_id, typename Map::Iterator it)
        : session_(s), map_id_(map_id), iter_id_(iter_id), it_(it) {}

    TraceSession* session_;
    std::uint64_t map_id_;
    std::uint64_t iter_id_;
    typename Map::Iterator it_;
  };

  Iterator iterate(View view = View::Entries) {
    const std::uint64_t iter_id = session_->new_iter_id();
    auto it = map_.iterate(view);
    session_->record(raw::iter_new(id_, iter_id, view));
    return Iterator(session_, id_, iter_id, it);
  }

  std::uint64_t id() const noexcept { return id_; }
  bool foreign() const noexcept { return foreign_; }
  const Map& underlying() const noexcept { return map_; }
  std::uint64_t state_digest() const noexcept { return map_.state_digest(); }

 private:
  struct CopyTag {};

  TracedMap(const TracedMap& src, CopyTag)
      : session_(src.session_), id_(src.session_->new_map_id()), map_(src.map_) {
    session_->count_construction();
    foreign_ = !session_->record(raw::create_copy(id_, src.id_));
  }

  static CreateArgs default_args(const TraceSession& s) {
    const MapConfig& d = s.defaults();
    return {d.initial_capacity, d.load_factor_milli, false, false, d.spread_hashes};
  }

  static CreateArgs explicit_args(const TraceSession& s, std::uint32_t capacity,
                                  std::optional<std::uint32_t> lf) {
    CreateArgs a = default_args(s);
    a.capacity = capacity;
    a.capacity_explicit = true;
    if (lf) {
      a.load_factor_milli = *lf;
      a.load_factor_explicit = true;
    }
    return a;
  }

  void record_keyed(RawOpKind op, const K& key, bool hit) const {
    auto [key_id, hash] = session_->canonicalize(id_, key);
    session_->record(raw::keyed(op, id_, key_id, hash, hit));
  }

  TraceSession* session_;
  std::uint64_t id_;
  bool foreign_ = false;
  Map map_;
};

}  // namespace mapreplay
