#include "mapreplay/workloads.hpp"

#include <algorithm>
#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "mapreplay/error.hpp"
#include "mapreplay/rng.hpp"
#include "mapreplay/tracer.hpp"

namespace mapreplay {

namespace {

using Params = std::map<std::string, std::int64_t>;

// ---------------------------------------------------------------------------
// Execution environments. Workloads are templates over an Env so the same
// code drives traced maps (for trace generation) and plain reference maps
// (for the untraced digests replay is checked against).

CreateArgs make_args(std::optional<std::uint32_t> capacity, std::optional<std::uint32_t> lf) {
  CreateArgs a;
  if (capacity) {
    a.capacity = *capacity;
    a.capacity_explicit = true;
  }
  if (lf) {
    a.load_factor_milli = *lf;
    a.load_factor_explicit = true;
  }
  return a;
}

struct TraceEnv {
  TraceSession* session;

  template <class K>
  using Map = TracedMap<K>;

  template <class K>
  std::unique_ptr<Map<K>> make(std::optional<std::uint32_t> capacity = {},
                               std::optional<std::uint32_t> lf = {}) {
    return std::make_unique<Map<K>>(*session, make_args(capacity, lf));
  }

  template <class K>
  std::unique_ptr<Map<K>> copy(const Map<K>& src) {
    return std::make_unique<Map<K>>(src.copy());
  }
};

// Final digests by construction order.
struct DigestSink {
  std::mutex mu;
  std::atomic<std::uint64_t> next{0};
  std::vector<std::uint64_t> digests;

  void store(std::uint64_t ordinal, std::uint64_t digest) {
    std::lock_guard lock(mu);
    if (digests.size() <= ordinal) digests.resize(ordinal + 1, 0);
    digests[ordinal] = digest;
  }
};

/// Untraced twin of TracedMap: same surface, records the final digest.
template <class K>
class DirectMap {
 public:
  using Map = RefMap<K>;
  using Node = typename Map::Node;

  DirectMap(std::shared_ptr<DigestSink> sink, const CreateArgs& args)
      : map_(args.config()), sink_(std::move(sink)), ordinal_(sink_->next++) {}

  DirectMap(DirectMap&& o) noexcept
      : map_(std::move(o.map_)), sink_(std::move(o.sink_)), ordinal_(o.ordinal_) {}
  DirectMap& operator=(DirectMap&&) = delete;
  ~DirectMap() {
    if (sink_) sink_->store(ordinal_, map_.state_digest());
  }

  DirectMap copy() const { return DirectMap(*this); }

  std::optional<ValueToken> get(const K& k) const { return map_.get(k); }
  bool contains_key(const K& k) const { return map_.contains_key(k); }
  std::optional<ValueToken> put(const K& k, ValueToken v) { return map_.put(k, v); }
  std::optional<ValueToken> remove(const K& k) { return map_.remove(k); }
  void clear() { map_.clear(); }

  template <class F>
  std::optional<ValueToken> compute(const K& key, F&& fn) {
    const std::optional<ValueToken> old = map_.get(key);
    const std::optional<ValueToken> next = fn(old);
    if (next) {
      map_.put(key, *next);
    } else if (old) {
      map_.remove(key);
    }
    return next;
  }

  std::size_t size() const noexcept { return map_.size(); }
  bool empty() const noexcept { return map_.empty(); }

  class Iterator {
   public:
    explicit Iterator(typename Map::Iterator it) : it_(it) {}
    bool has_next() const noexcept { return it_.has_next(); }
    const Node& next() { return it_.next(); }
    void remove() { it_.remove(); }

   private:
    typename Map::Iterator it_;
  };

  Iterator iterate(View view = View::Entries) { return Iterator(map_.iterate(view)); }

 private:
  DirectMap(const DirectMap& src) : map_(src.map_), sink_(src.sink_), ordinal_(sink_->next++) {}

  Map map_;
  std::shared_ptr<DigestSink> sink_;
  std::uint64_t ordinal_;
};

struct DirectEnv {
  std::shared_ptr<DigestSink> sink = std::make_shared<DigestSink>();

  template <class K>
  using Map = DirectMap<K>;

  template <class K>
  std::unique_ptr<Map<K>> make(std::optional<std::uint32_t> capacity = {},
                               std::optional<std::uint32_t> lf = {}) {
    return std::make_unique<Map<K>>(sink, make_args(capacity, lf));
  }

  template <class K>
  std::unique_ptr<Map<K>> copy(const Map<K>& src) {
    return std::make_unique<Map<K>>(src.copy());
  }
};

template <class M>
std::size_t drain(M& map, View view) {
  auto it = map.iterate(view);
  std::size_t n = 0;
  while (it.has_next()) {
    it.next();
    ++n;
  }
  return n;
}

View pick_view(Rng& rng) { return static_cast<View>(rng.below(3)); }

// ---------------------------------------------------------------------------
// wordfreq: token counting over the embedded corpus, one count map per
// document merged into a global map. Put/get heavy; every document map grows
// through several resizes.

template <class Env>
void wordfreq(Env& env, const Params& p, std::uint32_t scale, std::uint64_t) {
  const auto& tokens = corpus_tokens();
  const auto doc_tokens = static_cast<std::size_t>(std::max<std::int64_t>(1, p.at("doc_tokens")));
  auto global = env.template make<std::string>();
  for (std::uint32_t pass = 0; pass < scale; ++pass) {
    for (std::size_t start = 0; start < tokens.size(); start += doc_tokens) {
      auto doc = env.template make<std::string>();
      const std::size_t end = std::min(tokens.size(), start + doc_tokens);
      for (std::size_t i = start; i < end; ++i) {
        const std::optional<ValueToken> c = doc->get(tokens[i]);
        doc->put(tokens[i], c ? *c + 1 : 1);
      }
      auto it = doc->iterate(View::Entries);
      while (it.has_next()) {
        const auto& e = it.next();
        const ValueToken add = e.value;
        global->compute(e.key, [add](std::optional<ValueToken> old) -> std::optional<ValueToken> {
          return old ? *old + add : add;
        });
      }
    }
  }
}

// ---------------------------------------------------------------------------
// dedupe: containsKey-dominated duplicate filtering over skewed id streams.

template <class K>
K make_key(std::int64_t id) {
  if constexpr (std::is_same_v<K, CollidingKey>) {
    return CollidingKey{id};
  } else {
    return static_cast<K>(id);
  }
}

template <class K, class Env>
void dedupe_with(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  Rng rng(seed);
  const std::int64_t streams = p.at("streams") * scale;
  const std::int64_t items = p.at("items");
  const auto range = static_cast<std::uint64_t>(std::max<std::int64_t>(1, p.at("range")));
  for (std::int64_t s = 0; s < streams; ++s) {
    auto seen = env.template make<K>();
    for (std::int64_t i = 0; i < items; ++i) {
      const auto id = static_cast<std::int64_t>(rng.below(rng.below(range) + 1));
      const K key = make_key<K>(id);
      if (!seen->contains_key(key)) seen->put(key, static_cast<ValueToken>(i));
    }
  }
}

template <class Env>
void dedupe(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  if (p.at("colliding") != 0) {
    dedupe_with<CollidingKey>(env, p, scale, seed);
  } else {
    dedupe_with<std::int32_t>(env, p, scale, seed);
  }
}

// ---------------------------------------------------------------------------
// churn: interleaved put/remove holding each map within 2 of a resize
// threshold (12, 24 or 48 at the default load factor).

template <class Env>
void churn_map(Env& env, std::int64_t j, std::int64_t steps, std::uint64_t seed) {
  static constexpr std::int64_t kTargets[] = {12, 24, 48};
  const std::int64_t target = kTargets[j % 3];
  Rng rng(seed * 1000003 + static_cast<std::uint64_t>(j));
  auto m = env.template make<std::int64_t>();
  std::vector<std::int64_t> live;
  std::int64_t counter = 0;
  auto insert = [&] {
    const std::int64_t key = (j << 32) | counter++;
    m->put(key, static_cast<ValueToken>(counter));
    live.push_back(key);
  };
  while (static_cast<std::int64_t>(live.size()) < target + 2) insert();
  for (std::int64_t s = 0; s < steps; ++s) {
    const auto size = static_cast<std::int64_t>(live.size());
    const bool grow = size <= target - 2 || (size < target + 2 && rng.chance(1, 2));
    if (grow) {
      insert();
    } else {
      const std::size_t victim = rng.below(live.size());
      m->remove(live[victim]);
      live[victim] = live.back();
      live.pop_back();
    }
    if (rng.chance(1, 4) && !live.empty()) m->get(live[rng.below(live.size())]);
  }
}

template <class Env>
void churn(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  const std::int64_t maps = p.at("maps") * scale;
  const std::int64_t steps = p.at("steps");
  const std::int64_t threads = p.at("threads");
  if (threads != 1 && threads != 2) throw ConfigError("churn: threads must be 1 or 2");
  if (threads == 1) {
    for (std::int64_t j = 0; j < maps; ++j) churn_map(env, j, steps, seed);
    return;
  }
  // Two threads over disjoint maps: even and odd indices.
  auto body = [&](std::int64_t parity) {
    for (std::int64_t j = parity; j < maps; j += 2) churn_map(env, j, steps, seed);
  };
  std::thread t(body, 1);
  body(0);
  t.join();
}

// ---------------------------------------------------------------------------
// scan: iteration over many small maps, the sparse-table case where a larger
// default capacity only adds empty buckets to walk.

template <class Env>
void scan(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  Rng rng(seed);
  const std::int64_t maps = p.at("maps") * scale;
  const std::int64_t entries = p.at("entries");
  const std::int64_t passes = p.at("passes");
  std::vector<std::unique_ptr<typename Env::template Map<std::int32_t>>> pool;
  pool.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, maps)));
  for (std::int64_t i = 0; i < maps; ++i) {
    auto m = env.template make<std::int32_t>();
    while (static_cast<std::int64_t>(m->size()) < entries) {
      m->put(static_cast<std::int32_t>(rng.next()), 1);
    }
    pool.push_back(std::move(m));
  }
  for (std::int64_t pass = 0; pass < passes; ++pass) {
    const auto view = static_cast<View>(pass % 3);
    for (auto& m : pool) drain(*m, view);
  }
}

// ---------------------------------------------------------------------------
// populate-copy: build maps of sizes around the resize points, copy them and
// probe the copies.

template <class Env>
void populate_copy(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  static constexpr std::uint32_t kSizes[] = {0, 1, 4, 8, 12, 13, 16, 24, 25, 32, 48, 49, 64};
  Rng rng(seed);
  const std::int64_t rounds = p.at("rounds") * scale;
  const bool explicit_caps = p.at("explicit") != 0;
  for (std::int64_t r = 0; r < rounds; ++r) {
    const std::uint32_t n = kSizes[rng.below(std::size(kSizes))];
    std::optional<std::uint32_t> cap;
    if (explicit_caps && rng.chance(1, 4)) cap = std::max<std::uint32_t>(1, n * 2);
    auto src = env.template make<std::int32_t>(cap);
    std::vector<std::int32_t> keys;
    while (src->size() < n) {
      const auto k = static_cast<std::int32_t>(rng.below(1u << 20));
      if (!src->put(k, 1)) keys.push_back(k);
    }
    auto dst = env.copy(*src);
    for (std::int32_t k : keys) {
      if (rng.chance(1, 2)) dst->contains_key(k);
    }
    for (int i = 0; i < 4; ++i) dst->contains_key(static_cast<std::int32_t>((1 << 20) + rng.below(1000)));
    if (rng.chance(1, 3)) dst->put(static_cast<std::int32_t>((1 << 21) + r), 2);
  }
}

// ---------------------------------------------------------------------------
// mixed: the four microbenchmark families (contains, copy, iterate,
// populate) with equal weight over a bounded pool of live maps.

template <class Env>
void mixed(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  using Map = typename Env::template Map<std::int32_t>;
  Rng rng(seed);
  const std::int64_t rounds = p.at("rounds") * scale;
  const auto pool_size = static_cast<std::size_t>(std::max<std::int64_t>(1, p.at("pool")));
  constexpr std::uint64_t kKeySpace = 4096;
  std::vector<std::unique_ptr<Map>> pool;
  auto adopt = [&](std::unique_ptr<Map> m) {
    if (pool.size() < pool_size) {
      pool.push_back(std::move(m));
    } else {
      pool[rng.below(pool.size())] = std::move(m);
    }
  };
  auto key = [&] { return static_cast<std::int32_t>(rng.below(kKeySpace)); };

  for (std::int64_t r = 0; r < rounds; ++r) {
    const std::uint64_t family = pool.empty() ? 3 : rng.below(4);
    switch (family) {
      case 0: {  // contains
        Map& m = *pool[rng.below(pool.size())];
        for (int i = 0; i < 8; ++i) m.contains_key(key());
        break;
      }
      case 1:  // copy
        adopt(env.copy(*pool[rng.below(pool.size())]));
        break;
      case 2: {  // iterate: a prefix, a full pass, or a draining pass
        // Draining removes every entry, so the end state does not depend on
        // iteration order and replays at any layout stay comparable.
        Map& m = *pool[rng.below(pool.size())];
        auto it = m.iterate(pick_view(rng));
        const std::uint64_t style = rng.below(8);
        const std::uint64_t limit = style < 4 ? rng.below(8) : ~std::uint64_t{0};
        for (std::uint64_t k = 0; k < limit && it.has_next(); ++k) {
          it.next();
          if (style == 7) it.remove();
        }
        break;
      }
      default: {  // populate
        auto m = env.template make<std::int32_t>();
        const std::uint64_t n = 1 + rng.below(48);
        for (std::uint64_t i = 0; i < n; ++i) m->put(key(), i);
        adopt(std::move(m));
        break;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// random: short arbitrary operation sequences over a few maps, including
// explicit constructor arguments, clear, compute, copies, iterator removal
// and iterator misuse (whose exceptions leave no trace). Property suites run
// it with many seeds.

template <class K, class Env>
void random_with(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  using Map = typename Env::template Map<K>;
  using Iter = typename Map::Iterator;
  Rng rng(seed);
  const std::int64_t ops = p.at("ops") * scale;
  const auto max_maps = static_cast<std::size_t>(std::max<std::int64_t>(1, p.at("maps")));
  const auto keyspace = static_cast<std::uint64_t>(std::max<std::int64_t>(1, p.at("keyspace")));
  struct Cursor {
    std::size_t map;
    std::unique_ptr<Iter> it;
  };
  std::vector<std::unique_ptr<Map>> maps;
  std::vector<Cursor> iters;
  auto key = [&] { return make_key<K>(static_cast<std::int64_t>(rng.below(keyspace))); };
  auto create = [&] {
    static constexpr std::uint32_t kCaps[] = {1, 2, 3, 16, 100};
    static constexpr std::uint32_t kLfs[] = {500, 750, 1000};
    switch (rng.below(3)) {
      case 0: return env.template make<K>();
      case 1: return env.template make<K>(kCaps[rng.below(5)]);
      default: return env.template make<K>(kCaps[rng.below(5)], kLfs[rng.below(3)]);
    }
  };
  auto drop_map = [&](std::size_t i) {
    std::erase_if(iters, [&](const Cursor& c) { return c.map == i; });
    for (Cursor& c : iters) {
      if (c.map == maps.size() - 1) c.map = i;
    }
    std::swap(maps[i], maps.back());
    maps.pop_back();
  };

  for (std::int64_t n = 0; n < ops; ++n) {
    if (maps.empty()) {
      maps.push_back(create());
      continue;
    }
    Map& m = *maps[rng.below(maps.size())];
    const std::uint64_t roll = rng.below(100);
    try {
      if (roll < 6) {
        if (maps.size() < max_maps) maps.push_back(create());
      } else if (roll < 10) {
        if (maps.size() < max_maps) maps.push_back(env.copy(m));
      } else if (roll < 30) {
        m.put(key(), static_cast<ValueToken>(n));
      } else if (roll < 45) {
        m.get(key());
      } else if (roll < 55) {
        m.contains_key(key());
      } else if (roll < 65) {
        m.remove(key());
      } else if (roll < 68) {
        m.clear();
      } else if (roll < 72) {
        m.compute(key(), [&](std::optional<ValueToken> old) -> std::optional<ValueToken> {
          if (old && rng.chance(1, 2)) return std::nullopt;
          return old.value_or(0) + 1;
        });
      } else if (roll < 78) {
        std::size_t idx = 0;
        while (maps[idx].get() != &m) ++idx;
        iters.push_back({idx, std::make_unique<Iter>(m.iterate(pick_view(rng)))});
      } else if (roll < 92) {
        if (!iters.empty()) {
          Iter& it = *iters[rng.below(iters.size())].it;
          const std::uint64_t steps = 1 + rng.below(4);
          for (std::uint64_t k = 0; k < steps; ++k) it.next();
        }
      } else if (roll < 96) {
        if (!iters.empty()) iters[rng.below(iters.size())].it->remove();
      } else if (roll < 98) {
        if (!iters.empty()) iters.erase(iters.begin() + static_cast<std::ptrdiff_t>(rng.below(iters.size())));
      } else {
        std::size_t idx = 0;
        while (maps[idx].get() != &m) ++idx;
        drop_map(idx);
      }
    } catch (const std::logic_error&) {
      // Iterator misuse: exhausted, concurrently modified or nothing to remove.
    }
  }
}

template <class Env>
void random_ops(Env& env, const Params& p, std::uint32_t scale, std::uint64_t seed) {
  std::int64_t colliding = p.at("colliding");
  if (colliding < 0) colliding = static_cast<std::int64_t>(seed % 2);
  if (colliding != 0) {
    random_with<CollidingKey>(env, p, scale, seed);
  } else {
    random_with<std::int32_t>(env, p, scale, seed);
  }
}

// ---------------------------------------------------------------------------

const std::vector<WorkloadInfo> kWorkloads = {
    {"wordfreq", "token counting over the embedded corpus; put/get heavy (scale = corpus passes)",
     {{"doc_tokens", 200}}},
    {"dedupe", "duplicate filtering over skewed id streams; containsKey dominated",
     {{"streams", 20}, {"items", 2000}, {"range", 1500}, {"colliding", 0}}},
    {"churn", "interleaved put/remove holding maps within 2 of the 12/24/48 thresholds",
     {{"maps", 12}, {"steps", 400}, {"threads", 1}}},
    {"scan", "repeated iteration over many small maps", {{"maps", 1000}, {"entries", 8}, {"passes", 10}}},
    {"populate-copy", "populate maps around resize points, copy-construct and probe the copies",
     {{"rounds", 300}, {"explicit", 1}}},
    {"mixed", "contains, copy, iterate and populate with equal weights", {{"rounds", 400}, {"pool", 16}}},
    {"random", "short random operation sequences for property checks (colliding=-1: by seed parity)",
     {{"ops", 200}, {"maps", 3}, {"keyspace", 24}, {"colliding", -1}}},
};

Params resolve_params(const WorkloadInfo& info, const WorkloadSpec& spec) {
  Params p = info.defaults;
  for (const auto& [k, v] : spec.params) {
    auto it = p.find(k);
    if (it == p.end()) {
      std::string known;
      for (const auto& [name, _] : info.defaults) known += (known.empty() ? "" : ", ") + name;
      throw ConfigError(info.name + ": unknown parameter '" + k + "' (known: " + known + ")");
    }
    if (v < 0 && k != "colliding") throw ConfigError(info.name + ": parameter '" + k + "' must not be negative");
    it->second = v;
  }
  return p;
}

template <class Env>
void dispatch(Env& env, const WorkloadSpec& spec) {
  const WorkloadInfo& info = find_workload(spec.name);
  const Params p = resolve_params(info, spec);
  if (spec.scale == 0) return;
  const std::string& n = info.name;
  if (n == "wordfreq") return wordfreq(env, p, spec.scale, spec.seed);
  if (n == "dedupe") return dedupe(env, p, spec.scale, spec.seed);
  if (n == "churn") return churn(env, p, spec.scale, spec.seed);
  if (n == "scan") return scan(env, p, spec.scale, spec.seed);
  if (n == "populate-copy") return populate_copy(env, p, spec.scale, spec.seed);
  if (n == "mixed") return mixed(env, p, spec.scale, spec.seed);
  return random_ops(env, p, spec.scale, spec.seed);
}

}  // namespace

const std::vector<WorkloadInfo>& workloads() { return kWorkloads; }

const WorkloadInfo& find_workload(std::string_view name) {
  for (const WorkloadInfo& w : kWorkloads) {
    if (w.name == name) return w;
  }
  std::string known;
  for (const WorkloadInfo& w : kWorkloads) known += (known.empty() ? "" : ", ") + w.name;
  throw ConfigError("unknown workload '" + std::string(name) + "' (available: " + known + ")");
}

RawTrace generate(const WorkloadSpec& spec) {
  TraceSession session;
  TraceEnv env{&session};
  try {
    dispatch(env, spec);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error("trace", spec.name + ": " + e.what());
  }
  return session.close();
}

DirectRun run_direct(const WorkloadSpec& spec) {
  DirectEnv env;
  dispatch(env, spec);
  DirectRun out;
  std::lock_guard lock(env.sink->mu);
  out.digests = env.sink->digests;
  return out;
}

}  // namespace mapreplay
