#include "mapreplay/postproc.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <queue>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "mapreplay/error.hpp"
#include "tally.hpp"

namespace mapreplay {

const char* to_string(Opcode op) noexcept {
  switch (op) {
    case Opcode::Create: return "Create";
    case Opcode::CreateCopy: return "CreateCopy";
    case Opcode::Get: return "Get";
    case Opcode::Put: return "Put";
    case Opcode::Remove: return "Remove";
    case Opcode::ContainsKey: return "ContainsKey";
    case Opcode::Clear: return "Clear";
    case Opcode::IterNew: return "IterNew";
    case Opcode::IterAdvance: return "IterAdvance";
    case Opcode::IterRemove: return "IterRemove";
    case Opcode::FreeMap: return "FreeMap";
    case Opcode::FreeIter: return "FreeIter";
  }
  return "?";
}

namespace {

bool is_free(RawOpKind k) { return k == RawOpKind::FreeMap || k == RawOpKind::FreeIter; }

bool is_create(RawOpKind k) { return k == RawOpKind::Create || k == RawOpKind::CreateCopy; }

}  // namespace

RawTrace sanitize(const RawTrace& raw, SanitizeReport* report) {
  // Pass 1: decide which maps survive. A map is replayable when it was
  // created in this trace, never poisoned, and (for copies) its source is
  // replayable too.
  std::unordered_set<std::uint64_t> created;
  std::unordered_set<std::uint64_t> bad;
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> copies_of;
  std::unordered_set<std::uint64_t> iterators;
  std::vector<std::uint64_t> bad_order;
  auto mark_bad = [&](std::uint64_t map) {
    if (bad.insert(map).second) bad_order.push_back(map);
  };

  for (const RawEvent& e : raw.events) {
    if (is_create(e.op)) {
      if (!created.insert(e.map_id).second) {
        mark_bad(e.map_id);  // id reused: the stream for it is ambiguous
        continue;
      }
      if (e.op == RawOpKind::CreateCopy) {
        if (!created.count(e.aux)) mark_bad(e.map_id);
        copies_of[e.aux].push_back(e.map_id);
      }
      continue;
    }
    if (!created.count(e.map_id)) continue;  // orphan, dropped below
    if (e.op == RawOpKind::Poison) {
      mark_bad(e.map_id);
    } else if (e.op == RawOpKind::IterNew) {
      iterators.insert(e.iter_id());
    } else if (is_iterator_op(e.op) && !iterators.count(e.iter_id())) {
      mark_bad(e.map_id);
    }
  }

  // Copies of an excluded map cannot be rebuilt.
  std::deque<std::uint64_t> work(bad.begin(), bad.end());
  while (!work.empty()) {
    const std::uint64_t m = work.front();
    work.pop_front();
    auto it = copies_of.find(m);
    if (it == copies_of.end()) continue;
    for (std::uint64_t c : it->second) {
      if (bad.insert(c).second) {
        bad_order.push_back(c);
        work.push_back(c);
      }
    }
  }

  // Pass 2: keep events of surviving maps, in stream order, once created.
  RawTrace out;
  out.events.reserve(raw.events.size());
  std::unordered_set<std::uint64_t> live;
  std::uint64_t orphans = 0;
  for (const RawEvent& e : raw.events) {
    if (e.op == RawOpKind::Poison) continue;
    if (is_create(e.op)) {
      if (!bad.count(e.map_id) && live.insert(e.map_id).second) out.events.push_back(e);
      continue;
    }
    if (!live.count(e.map_id)) {
      if (!created.count(e.map_id)) ++orphans;
      continue;
    }
    out.events.push_back(e);
  }

  if (report) {
    report->events_in = raw.events.size();
    report->events_out = out.events.size();
    report->orphan_events = orphans;
    std::sort(bad_order.begin(), bad_order.end());
    report->excluded_maps = std::move(bad_order);
  }
  return out;
}

RawTrace coalesce(const RawTrace& raw) {
  RawTrace out;
  out.events.reserve(raw.events.size());
  // iterator id -> index in `out` of the IterAdvance that opened its run
  std::unordered_map<std::uint64_t, std::size_t> open_run;
  // map id -> iterators with an open run
  std::unordered_map<std::uint64_t, std::vector<std::uint64_t>> open_by_map;

  auto close_map = [&](std::uint64_t map) {
    auto it = open_by_map.find(map);
    if (it == open_by_map.end()) return;
    for (std::uint64_t iter : it->second) open_run.erase(iter);
    open_by_map.erase(it);
  };

  for (const RawEvent& e : raw.events) {
    if (e.op == RawOpKind::IterAdvance) {
      auto run = open_run.find(e.iter_id());
      if (run != open_run.end()) {
        std::uint64_t& steps = out.events[run->second].aux;
        steps += e.aux;
        continue;
      }
      open_run.emplace(e.iter_id(), out.events.size());
      open_by_map[e.map_id].push_back(e.iter_id());
      out.events.push_back(e);
      continue;
    }
    if (is_mutating(e.op)) close_map(e.map_id);
    out.events.push_back(e);
  }
  return out;
}

RawTrace insert_free_events(const RawTrace& raw) {
  std::vector<RawEvent> events;
  events.reserve(raw.events.size());
  for (const RawEvent& e : raw.events) {
    if (!is_free(e.op)) events.push_back(e);
  }

  struct Object {
    std::uint64_t map_id;
    std::uint64_t iter_id;  // kAbsent for maps
    std::size_t last_use;
  };
  std::vector<Object> objects;  // in order of first appearance
  std::unordered_map<std::uint64_t, std::size_t> map_obj;
  std::unordered_map<std::uint64_t, std::size_t> iter_obj;

  auto touch_map = [&](std::uint64_t map, std::size_t i) {
    auto [it, fresh] = map_obj.try_emplace(map, objects.size());
    if (fresh) objects.push_back({map, kAbsent, i});
    objects[it->second].last_use = i;
  };

  for (std::size_t i = 0; i < events.size(); ++i) {
    const RawEvent& e = events[i];
    if (e.op == RawOpKind::CreateCopy) touch_map(e.aux, i);
    touch_map(e.map_id, i);
    if (is_iterator_op(e.op)) {
      auto [it, fresh] = iter_obj.try_emplace(e.iter_id(), objects.size());
      if (fresh) objects.push_back({e.map_id, e.iter_id(), i});
      objects[it->second].last_use = i;
    }
  }

  // Frees due after each event: iterators first, then maps, each group in
  // order of first appearance.
  std::vector<std::vector<std::size_t>> due(events.size());
  for (std::size_t o = 0; o < objects.size(); ++o) due[objects[o].last_use].push_back(o);

  RawTrace out;
  out.events.reserve(events.size() + objects.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    out.events.push_back(events[i]);
    for (std::size_t o : due[i]) {
      if (objects[o].iter_id != kAbsent) {
        out.events.push_back(raw::free_iter(objects[o].map_id, objects[o].iter_id));
      }
    }
    for (std::size_t o : due[i]) {
      if (objects[o].iter_id == kAbsent) out.events.push_back(raw::free_map(objects[o].map_id));
    }
  }
  return out;
}

namespace {

// Hands out the lowest free slot index.
class SlotAllocator {
 public:
  std::int32_t acquire() {
    std::int32_t s;
    if (free_.empty()) {
      s = next_++;
    } else {
      s = free_.top();
      free_.pop();
    }
    return s;
  }
  void release(std::int32_t s) { free_.push(s); }
  // Lowest-first reuse makes this the peak number of live slots.
  std::uint32_t bound() const noexcept { return static_cast<std::uint32_t>(next_); }

 private:
  std::priority_queue<std::int32_t, std::vector<std::int32_t>, std::greater<>> free_;
  std::int32_t next_ = 0;
};

class Encoder {
 public:
  ProcessedTrace run(const RawTrace& prepared) {
    for (index_ = 0; index_ < prepared.events.size(); ++index_) step(prepared.events[index_]);
    out_.max_map_slots = maps_.bound();
    out_.max_iter_slots = iters_.bound();
    return std::move(out_);
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw TraceIntegrityError(index_, what, "process");
  }

  std::int32_t map_slot(std::uint64_t id) const {
    auto it = map_slots_.find(id);
    if (it == map_slots_.end()) fail("map " + std::to_string(id) + " is not live");
    return it->second;
  }

  std::int32_t iter_slot(const RawEvent& e) const {
    auto it = iter_slots_.find(e.iter_id());
    if (it == iter_slots_.end()) fail("iterator " + std::to_string(e.iter_id()) + " is not live");
    if (it->second.map_id != e.map_id) fail("iterator used through a different map");
    return it->second.slot;
  }

  std::int32_t new_map(std::uint64_t id) {
    if (map_slots_.count(id)) fail("map " + std::to_string(id) + " created twice");
    const std::int32_t s = maps_.acquire();
    map_slots_.emplace(id, s);
    return s;
  }

  std::int32_t key_index(std::uint64_t key_id, std::int32_t hash) {
    auto [it, fresh] = keys_.try_emplace(key_id, static_cast<std::int32_t>(out_.key_hashes.size()));
    if (fresh) {
      if (out_.key_hashes.size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        fail("too many distinct keys");
      }
      out_.key_hashes.push_back(hash);
    } else if (out_.key_hashes[static_cast<std::size_t>(it->second)] != hash) {
      fail("key " + std::to_string(key_id) + " recorded with two different hashes");
    }
    return it->second;
  }

  void emit(std::int32_t code, std::int32_t a, std::int32_t b) { out_.ops.push_back({code, a, b}); }

  void step(const RawEvent& e) {
    switch (e.op) {
      case RawOpKind::Create: {
        const CreateArgs args = unpack_create(e.aux);
        if (args.load_factor_milli < 1 || args.load_factor_milli > 1000) fail("invalid load factor");
        emit(opword::make_create(args), new_map(e.map_id), static_cast<std::int32_t>(args.capacity));
        break;
      }
      case RawOpKind::CreateCopy: {
        const std::int32_t src = map_slot(e.aux);
        emit(opword::make(Opcode::CreateCopy), new_map(e.map_id), src);
        break;
      }
      case RawOpKind::Get:
      case RawOpKind::Put:
      case RawOpKind::Remove:
      case RawOpKind::ContainsKey: {
        // RawOpKind and Opcode share numbering for the keyed kinds.
        const auto op = static_cast<Opcode>(static_cast<std::uint8_t>(e.op));
        emit(opword::make(op, e.outcome == 1), map_slot(e.map_id), key_index(e.key_id, e.hash));
        break;
      }
      case RawOpKind::Clear:
        emit(opword::make(Opcode::Clear), map_slot(e.map_id), 0);
        break;
      case RawOpKind::IterNew: {
        const std::int32_t m = map_slot(e.map_id);
        if (iter_slots_.count(e.iter_id())) fail("iterator created twice");
        if (e.aux > static_cast<std::uint64_t>(View::Entries)) fail("invalid iterator view");
        const std::int32_t s = iters_.acquire();
        iter_slots_.emplace(e.iter_id(), IterSlot{s, e.map_id});
        emit(opword::make_iter_new(static_cast<View>(e.aux)), s, m);
        break;
      }
      case RawOpKind::IterAdvance: {
        const std::int32_t s = iter_slot(e);
        std::uint64_t steps = e.aux;
        if (steps == kAbsent) fail("advance without a step count");
        constexpr auto kMax = static_cast<std::uint64_t>(std::numeric_limits<std::int32_t>::max());
        do {
          const std::uint64_t chunk = std::min(steps, kMax);
          emit(opword::make(Opcode::IterAdvance), s, static_cast<std::int32_t>(chunk));
          steps -= chunk;
        } while (steps > 0);
        break;
      }
      case RawOpKind::IterRemove:
        emit(opword::make(Opcode::IterRemove), iter_slot(e), key_index(e.aux, e.hash));
        break;
      case RawOpKind::FreeIter: {
        const std::int32_t s = iter_slot(e);
        iter_slots_.erase(e.iter_id());
        iters_.release(s);
        emit(opword::make(Opcode::FreeIter), s, 0);
        break;
      }
      case RawOpKind::FreeMap: {
        const std::int32_t s = map_slot(e.map_id);
        for (const auto& [iter, slot] : iter_slots_) {
          if (slot.map_id == e.map_id) fail("map freed while iterator " + std::to_string(iter) + " is live");
        }
        map_slots_.erase(e.map_id);
        maps_.release(s);
        emit(opword::make(Opcode::FreeMap), s, 0);
        break;
      }
      case RawOpKind::Poison:
        fail("poison marker in a sanitized trace");
    }
  }

  struct IterSlot {
    std::int32_t slot;
    std::uint64_t map_id;
  };

  ProcessedTrace out_;
  std::size_t index_ = 0;
  SlotAllocator maps_;
  SlotAllocator iters_;
  std::unordered_map<std::uint64_t, std::int32_t> map_slots_;
  std::unordered_map<std::uint64_t, IterSlot> iter_slots_;
  std::unordered_map<std::uint64_t, std::int32_t> keys_;
};

}  // namespace

ProcessedTrace encode(const RawTrace& prepared) { return Encoder().run(prepared); }

ProcessedTrace process(const RawTrace& raw, const ProcessOptions& options, SanitizeReport* report) {
  RawTrace t = sanitize(raw, report);
  if (options.coalesce) t = coalesce(t);
  t = insert_free_events(t);
  ProcessedTrace out = encode(t);
  out.counts = stats(out);
  return out;
}

Characterization detail::tally(const ProcessedTrace& trace) {
  Characterization c;
  c.events = trace.ops.size();
  for (const OpTriple& op : trace.ops) {
    switch (opword::opcode(op.code)) {
      case Opcode::Create:
      case Opcode::CreateCopy: ++c.creates; break;
      case Opcode::Get:
      case Opcode::ContainsKey: ++c.reads; break;
      case Opcode::Put:
      case Opcode::Remove:
      case Opcode::Clear: ++c.writes; break;
      case Opcode::IterNew:
      case Opcode::IterAdvance:
      case Opcode::IterRemove: ++c.iterates; break;
      case Opcode::FreeMap:
      case Opcode::FreeIter: break;
    }
  }
  return c;
}

Characterization stats(const ProcessedTrace& trace) {
  Characterization c = detail::tally(trace);
  c.bytes = to_bytes(trace).size();
  return c;
}

}  // namespace mapreplay
