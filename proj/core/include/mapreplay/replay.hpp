#pragma once

#include <chrono>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mapreplay/adapters.hpp"
#include "mapreplay/error.hpp"
#include "mapreplay/processed_trace.hpp"

namespace mapreplay {

enum class ReplayMode : std::uint8_t { Timing, Counting, Validating };

const char* to_string(ReplayMode mode) noexcept;
/// Accepts "timing", "counting" and "validating"; throws ConfigError otherwise.
ReplayMode parse_replay_mode(std::string_view text);

/// Replay-time substitute for the default construction parameters. Only
/// Creates that did not pass the parameter explicitly are affected.
struct ConfigOverride {
  std::optional<std::uint32_t> initial_capacity;
  std::optional<std::uint32_t> load_factor_milli;

  CreateArgs apply(CreateArgs recorded) const noexcept;
  MapConfig resolve(const CreateArgs& recorded) const { return apply(recorded).config(); }
};

struct ReplayOptions {
  ReplayMode mode = ReplayMode::Timing;
  ConfigOverride override;
  /// Executes the whole trace this many times back to back inside one timed
  /// region. Used by the harness to batch replays shorter than the clock's
  /// useful resolution.
  std::uint32_t repetitions = 1;
};

/// State of one map at its FreeMap opcode. `map_ordinal` counts Create and
/// CreateCopy opcodes from zero, identifying the map across executions.
struct DigestPoint {
  std::size_t op_index = 0;
  std::uint64_t map_ordinal = 0;
  std::uint64_t digest = 0;

  friend bool operator==(const DigestPoint&, const DigestPoint&) = default;
};

struct ReplayResult {
  std::string impl;
  ReplayMode mode = ReplayMode::Timing;
  /// Dispatch loop only; setup and slot allocation are excluded.
  std::chrono::nanoseconds elapsed{0};
  /// Opcodes dispatched, summed over repetitions.
  std::uint64_t ops_executed = 0;
  std::uint32_t repetitions = 1;
  /// Counting mode: the reference map's work counters.
  OpCounters counters;
  /// Counting mode: calls into the map or its iterators, one per iteration
  /// step. Frees are not adapter calls.
  std::uint64_t adapter_calls = 0;
  /// Maps constructed through the factory (Create and CreateCopy).
  std::uint64_t factory_calls = 0;
  /// Validating mode with a digest-capable map.
  std::vector<DigestPoint> digests;
};

inline constexpr std::uint64_t kDefaultMemoryBudget = std::uint64_t{8} << 30;

struct SetupOptions {
  std::uint64_t memory_budget = kDefaultMemoryBudget;
};

/// A decoded trace checked for slot liveness, with its mockup keys
/// materialized. No map exists until replay.
class ReplaySession {
 public:
  const ProcessedTrace& trace() const noexcept { return trace_; }
  const std::vector<MockupKey>& keys() const noexcept { return keys_; }
  std::uint32_t map_slots() const noexcept { return trace_.max_map_slots; }
  std::uint32_t iter_slots() const noexcept { return trace_.max_iter_slots; }
  std::uint64_t creates() const noexcept { return creates_; }

 private:
  friend ReplaySession setup(ProcessedTrace trace, const SetupOptions& options);
  ReplaySession() = default;

  ProcessedTrace trace_;
  std::vector<MockupKey> keys_;
  std::uint64_t creates_ = 0;
};

/// Validates every opcode's operands against the declared bounds and the
/// live/freed state of each slot (TraceIntegrityError), checks the estimated
/// footprint against the budget (BudgetError), and builds the mockup keys.
ReplaySession setup(ProcessedTrace trace, const SetupOptions& options = {});

/// Bytes setup() charges against the memory budget.
std::uint64_t estimated_footprint(const ProcessedTrace& trace) noexcept;

/// Plain construction through the adapter's own constructors.
template <class M>
struct DirectFactory {
  M create(const MapConfig& config) const { return M(config); }
  M copy(const M& source) const { return M(source); }
};

/// The single constant value every replayed Put stores.
inline constexpr ValueToken kReplayValue = 0x5eed;

namespace detail {

template <MapAdapter M, class Factory, ReplayMode Mode>
class Replayer {
 public:
  using Iter = decltype(std::declval<M&>().iterate(View::Entries));
  static constexpr bool kValidating = Mode == ReplayMode::Validating;
  static constexpr bool kCounting = Mode == ReplayMode::Counting;

  Replayer(const ReplaySession& s, const ReplayOptions& opt, Factory& factory)
      : s_(s),
        factory_(factory),
        maps_(s.map_slots()),
        iters_(s.iter_slots()),
        recorded_order_(std::same_as<M, RefMapAdapter> && !opt.override.initial_capacity &&
                        !opt.override.load_factor_milli) {
    if constexpr (kCounting) {
      static_assert(std::same_as<M, RefMapAdapter>, "counting mode needs the reference map");
    }
    configs_.reserve(s.creates());
    for (const OpTriple& op : s.trace().ops) {
      if (opword::opcode(op.code) == Opcode::Create) {
        configs_.push_back(opt.override.resolve(opword::create_args(op)));
      }
    }
    if constexpr (kValidating) {
      iter_map_.resize(s.iter_slots());
      ordinal_.resize(s.map_slots());
    }
  }

  ReplayResult run(std::uint32_t repetitions) {
    ReplayResult r;
    r.mode = Mode;
    r.repetitions = repetitions;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint32_t rep = 0; rep < repetitions; ++rep) {
      next_ordinal_ = 0;
      pass(r);
      release_all();
    }
    r.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    r.ops_executed = std::uint64_t{repetitions} * s_.trace().ops.size();
    r.counters = counters_;
    r.adapter_calls = calls_;
    r.factory_calls = factory_calls_;
    sink_ = sink_ + hits_;
    return r;
  }

 private:
  void call() noexcept {
    if constexpr (kCounting) ++calls_;
  }

  void expect(bool recorded, bool observed, std::size_t i, const char* what) const {
    if constexpr (kValidating) {
      if (recorded != observed) {
        throw FidelityError(i, std::string(what) + " recorded " + (recorded ? "hit" : "miss") +
                                   " but replay saw " + (observed ? "hit" : "miss"));
      }
    }
  }

  void adopt(std::int32_t slot) {
    ++factory_calls_;
    if constexpr (kCounting) maps_[slot]->set_counters(&counters_);
    if constexpr (kValidating) ordinal_[slot] = next_ordinal_++;
  }

  void pass(ReplayResult& r) {
    const std::vector<OpTriple>& ops = s_.trace().ops;
    const MockupKey* keys = s_.keys().data();
    std::size_t next_config = 0;
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const OpTriple& op = ops[i];
      switch (opword::opcode(op.code)) {
        case Opcode::Create:
          call();
          maps_[op.a].emplace(factory_.create(configs_[next_config++]));
          adopt(op.a);
          break;
        case Opcode::CreateCopy:
          call();
          maps_[op.a].emplace(factory_.copy(*maps_[op.b]));
          adopt(op.a);
          break;
        case Opcode::Get: {
          call();
          const bool hit = maps_[op.a]->get(keys[op.b]).has_value();
          hits_ += hit;
          expect(opword::outcome(op.code), hit, i, "Get");
          break;
        }
        case Opcode::Put: {
          call();
          const bool hit = maps_[op.a]->put(keys[op.b], kReplayValue).has_value();
          expect(opword::outcome(op.code), hit, i, "Put");
          break;
        }
        case Opcode::Remove: {
          call();
          const bool hit = maps_[op.a]->remove(keys[op.b]).has_value();
          expect(opword::outcome(op.code), hit, i, "Remove");
          break;
        }
        case Opcode::ContainsKey: {
          call();
          const bool hit = maps_[op.a]->contains_key(keys[op.b]);
          hits_ += hit;
          expect(opword::outcome(op.code), hit, i, "ContainsKey");
          break;
        }
        case Opcode::Clear:
          call();
          maps_[op.a]->clear();
          break;
        case Opcode::IterNew:
          call();
          iters_[op.a].emplace(maps_[op.b]->iterate(opword::view(op.code)));
          if constexpr (kValidating) iter_map_[op.a] = op.b;
          break;
        case Opcode::IterAdvance: {
          Iter& it = *iters_[op.a];
          for (std::int32_t k = 0; k < op.b; ++k) {
            call();
            const bool yielded = it.advance();
            if constexpr (kValidating) {
              if (!yielded) {
                throw FidelityError(i, "iterator exhausted after " + std::to_string(k) + " of " +
                                           std::to_string(op.b) + " steps");
              }
            } else {
              hits_ += yielded;
            }
          }
          break;
        }
        case Opcode::IterRemove:
          call();
          if constexpr (kValidating) {
            M& m = *maps_[iter_map_[op.a]];
            const std::size_t before = m.size();
            try {
              iters_[op.a]->remove();
            } catch (const std::logic_error& e) {
              throw FidelityError(i, std::string("iterator remove failed: ") + e.what());
            }
            if (m.size() + 1 != before) throw FidelityError(i, "iterator remove did not shrink the map");
            // Which entry sits under the cursor depends on iteration order,
            // which only the reference map at the recorded layout reproduces.
            if (recorded_order_ && m.contains_key(keys[op.b])) {
              throw FidelityError(i, "iterator remove did not remove key " + std::to_string(op.b));
            }
          } else {
            iters_[op.a]->remove();
          }
          break;
        case Opcode::FreeMap:
          if constexpr (kValidating && DigestibleMap<M>) {
            r.digests.push_back({i, ordinal_[op.a], maps_[op.a]->state_digest()});
          }
          maps_[op.a].reset();
          break;
        case Opcode::FreeIter:
          iters_[op.a].reset();
          break;
      }
    }
  }

  // Objects a trace leaves unfreed are dropped between repetitions.
  void release_all() {
    for (auto& it : iters_) it.reset();
    for (auto& m : maps_) m.reset();
  }

  const ReplaySession& s_;
  Factory& factory_;
  std::vector<std::optional<M>> maps_;
  std::vector<std::optional<Iter>> iters_;
  std::vector<MapConfig> configs_;
  std::vector<std::int32_t> iter_map_;
  std::vector<std::uint64_t> ordinal_;
  std::uint64_t next_ordinal_ = 0;
  bool recorded_order_;
  OpCounters counters_;
  std::uint64_t calls_ = 0;
  std::uint64_t factory_calls_ = 0;
  std::uint64_t hits_ = 0;
  static inline volatile std::uint64_t sink_ = 0;
};

}  // namespace detail

/// Replays `session` against the single adapter type M, constructing every
/// map through `factory`. Counting mode is available only for the reference
/// map.
template <MapAdapter M, class Factory = DirectFactory<M>>
ReplayResult replay(const ReplaySession& session, const ReplayOptions& options,
                    Factory factory = {}, std::string impl_name = {}) {
  if (options.repetitions == 0) throw ConfigError("repetitions must be at least 1");
  ReplayResult r;
  switch (options.mode) {
    case ReplayMode::Timing:
      r = detail::Replayer<M, Factory, ReplayMode::Timing>(session, options, factory).run(options.repetitions);
      break;
    case ReplayMode::Validating:
      r = detail::Replayer<M, Factory, ReplayMode::Validating>(session, options, factory).run(options.repetitions);
      break;
    case ReplayMode::Counting:
      if constexpr (std::same_as<M, RefMapAdapter>) {
        r = detail::Replayer<M, Factory, ReplayMode::Counting>(session, options, factory).run(options.repetitions);
      } else {
        throw ConfigError("counting mode requires the reference map (impl refmap)");
      }
      break;
  }
  r.impl = std::move(impl_name);
  return r;
}

}  // namespace mapreplay
