#include "mapreplay/replay.hpp"

#include <string>

namespace mapreplay {

const char* to_string(ReplayMode mode) noexcept {
  switch (mode) {
    case ReplayMode::Timing: return "timing";
    case ReplayMode::Counting: return "counting";
    case ReplayMode::Validating: return "validating";
  }
  return "?";
}

ReplayMode parse_replay_mode(std::string_view text) {
  if (text == "timing") return ReplayMode::Timing;
  if (text == "counting") return ReplayMode::Counting;
  if (text == "validating") return ReplayMode::Validating;
  throw ConfigError("unknown replay mode '" + std::string(text) +
                    "' (expected timing, counting or validating)");
}

CreateArgs ConfigOverride::apply(CreateArgs recorded) const noexcept {
  if (initial_capacity && !recorded.capacity_explicit) recorded.capacity = *initial_capacity;
  if (load_factor_milli && !recorded.load_factor_explicit) recorded.load_factor_milli = *load_factor_milli;
  return recorded;
}

std::uint64_t estimated_footprint(const ProcessedTrace& t) noexcept {
  // A generous per-slot allowance covers the optional<> wrappers of any
  // adapter; live map contents are not known before replay.
  constexpr std::uint64_t kPerMapSlot = 128;
  constexpr std::uint64_t kPerIterSlot = 64;
  return std::uint64_t{t.key_hashes.size()} * sizeof(MockupKey) +
         std::uint64_t{t.max_map_slots} * kPerMapSlot + std::uint64_t{t.max_iter_slots} * kPerIterSlot;
}

namespace {

void check_liveness(const ProcessedTrace& t, std::uint64_t& creates) {
  const std::size_t maps = t.max_map_slots;
  const std::size_t iters = t.max_iter_slots;
  const std::size_t keys = t.key_hashes.size();
  std::vector<bool> map_live(maps, false);
  std::vector<std::uint32_t> iters_on_map(maps, 0);
  std::vector<std::int32_t> iter_map(iters, -1);

  for (std::size_t i = 0; i < t.ops.size(); ++i) {
    const OpTriple& op = t.ops[i];
    const Opcode code = opword::opcode(op.code);
    auto fail = [&](const std::string& what) {
      throw TraceIntegrityError(i, std::string(to_string(code)) + ": " + what);
    };
    auto map_slot = [&](std::int32_t s) {
      if (s < 0 || static_cast<std::size_t>(s) >= maps) fail("map slot " + std::to_string(s) + " out of range");
      return static_cast<std::size_t>(s);
    };
    auto live_map = [&](std::int32_t s) {
      const std::size_t m = map_slot(s);
      if (!map_live[m]) fail("map slot " + std::to_string(s) + " is not live");
      return m;
    };
    auto iter_slot = [&](std::int32_t s) {
      if (s < 0 || static_cast<std::size_t>(s) >= iters) fail("iterator slot " + std::to_string(s) + " out of range");
      return static_cast<std::size_t>(s);
    };
    auto live_iter = [&](std::int32_t s) {
      const std::size_t k = iter_slot(s);
      if (iter_map[k] < 0) fail("iterator slot " + std::to_string(s) + " is not live");
      return k;
    };
    auto key = [&](std::int32_t k) {
      if (k < 0 || static_cast<std::size_t>(k) >= keys) fail("key index " + std::to_string(k) + " out of range");
    };
    auto create = [&](std::int32_t s) {
      const std::size_t m = map_slot(s);
      if (map_live[m]) fail("map slot " + std::to_string(s) + " is already live");
      map_live[m] = true;
      ++creates;
    };

    switch (code) {
      case Opcode::Create: {
        const CreateArgs a = opword::create_args(op);
        if (a.capacity == 0) fail("zero initial capacity");
        if (a.load_factor_milli < 1 || a.load_factor_milli > 1000) fail("load factor out of range");
        create(op.a);
        break;
      }
      case Opcode::CreateCopy:
        live_map(op.b);
        create(op.a);
        break;
      case Opcode::Get:
      case Opcode::Put:
      case Opcode::Remove:
      case Opcode::ContainsKey:
        live_map(op.a);
        key(op.b);
        break;
      case Opcode::Clear:
        live_map(op.a);
        break;
      case Opcode::IterNew: {
        const std::size_t m = live_map(op.b);
        const std::size_t k = iter_slot(op.a);
        if (iter_map[k] >= 0) fail("iterator slot " + std::to_string(op.a) + " is already live");
        if (static_cast<unsigned>(opword::view(op.code)) > static_cast<unsigned>(View::Entries)) fail("bad view");
        iter_map[k] = static_cast<std::int32_t>(m);
        ++iters_on_map[m];
        break;
      }
      case Opcode::IterAdvance:
        live_iter(op.a);
        if (op.b < 0) fail("negative step count");
        break;
      case Opcode::IterRemove:
        live_iter(op.a);
        key(op.b);
        break;
      case Opcode::FreeMap: {
        const std::size_t m = live_map(op.a);
        if (iters_on_map[m] != 0) fail("map freed while an iterator over it is live");
        map_live[m] = false;
        break;
      }
      case Opcode::FreeIter: {
        const std::size_t k = live_iter(op.a);
        --iters_on_map[static_cast<std::size_t>(iter_map[k])];
        iter_map[k] = -1;
        break;
      }
      default:
        fail("unknown opcode " + std::to_string(op.code & 0xff));
    }
  }
}

}  // namespace

ReplaySession setup(ProcessedTrace trace, const SetupOptions& options) {
  const std::uint64_t need = estimated_footprint(trace);
  if (need > options.memory_budget) {
    throw BudgetError(need, options.memory_budget,
                      std::to_string(trace.key_hashes.size()) + " keys, " +
                          std::to_string(trace.max_map_slots) + " map slots, " +
                          std::to_string(trace.max_iter_slots) + " iterator slots");
  }
  ReplaySession s;
  check_liveness(trace, s.creates_);
  s.keys_.reserve(trace.key_hashes.size());
  for (std::size_t i = 0; i < trace.key_hashes.size(); ++i) {
    s.keys_.push_back({static_cast<std::int32_t>(i), trace.key_hashes[i]});
  }
  s.trace_ = std::move(trace);
  return s;
}

}  // namespace mapreplay
