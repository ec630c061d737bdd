#include <gtest/gtest.h>

#include "mapreplay/error.hpp"
#include "mapreplay/postproc.hpp"
#include "oracles.hpp"
#include "support.hpp"

namespace mapreplay {
namespace {

using K = RawOpKind;

RawEvent put(std::uint64_t map, std::uint64_t key, std::int32_t hash, bool hit = false) {
  return raw::keyed(K::Put, map, key, hash, hit);
}
RawEvent get(std::uint64_t map, std::uint64_t key, std::int32_t hash, bool hit = false) {
  return raw::keyed(K::Get, map, key, hash, hit);
}

std::vector<RawOpKind> kinds(const RawTrace& t) {
  std::vector<RawOpKind> out;
  for (const RawEvent& e : t.events) out.push_back(e.op);
  return out;
}

std::vector<Opcode> opcodes(const ProcessedTrace& t) {
  std::vector<Opcode> out;
  for (const OpTriple& op : t.ops) out.push_back(opword::opcode(op.code));
  return out;
}

TEST(Sanitize, DropsOrphansPoisonAndTheirCopies) {
  RawTrace t;
  t.events = {
      raw::create(0),        put(0, 1, 1),      put(9, 1, 1),  // 9 never created
      raw::create(1),        raw::poison(1),    put(1, 2, 2),  // poisoned
      raw::create_copy(2, 1), get(2, 2, 2, true),             // copy of excluded map
      raw::create_copy(3, 0), raw::clear(9),
  };
  SanitizeReport rep;
  const RawTrace s = sanitize(t, &rep);
  EXPECT_EQ(kinds(s), (std::vector<K>{K::Create, K::Put, K::CreateCopy}));
  EXPECT_EQ(rep.orphan_events, 2u);
  EXPECT_EQ(rep.excluded_maps, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(rep.events_in, t.events.size());
  EXPECT_EQ(rep.events_out, 3u);
}

TEST(Sanitize, ExcludesAmbiguousMaps) {
  RawTrace t;
  t.events = {raw::create(0), raw::create(0), put(0, 1, 1),       // duplicate create
              raw::create(1), raw::iter_advance(1, 77), put(1, 1, 1),  // iterator never created
              raw::create(2), put(2, 1, 1)};
  SanitizeReport rep;
  const RawTrace s = sanitize(t, &rep);
  EXPECT_EQ(rep.excluded_maps, (std::vector<std::uint64_t>{0, 1}));
  ASSERT_EQ(s.events.size(), 2u);
  EXPECT_EQ(s.events[0].map_id, 2u);
}

TEST(Sanitize, EventsBeforeCreationAreDropped) {
  // Events of a map recorded before its creation (foreign until the session
  // opened) are neither orphans nor kept.
  RawTrace t;
  t.events = {put(4, 1, 1), raw::create(4), put(4, 1, 1)};
  SanitizeReport rep;
  const RawTrace s = sanitize(t, &rep);
  EXPECT_EQ(kinds(s), (std::vector<K>{K::Create, K::Put}));
  EXPECT_EQ(rep.orphan_events, 0u);
}

TEST(SanitizeProperty, InjectedOrphansAreRemovedExactly) {
  for (const std::string& name : test::workload_names()) {
    const RawTrace clean = generate(test::spec(name, 3));
    const RawTrace baseline = sanitize(clean);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const std::uint64_t n = 1 + seed * 37;
      SanitizeReport rep;
      const RawTrace s = sanitize(test::inject_orphans(clean, n, seed), &rep);
      ASSERT_EQ(rep.orphan_events, n) << name;
      ASSERT_EQ(s, baseline) << name;
    }
  }
}

TEST(Coalesce, MergesRunsUntilTheMapMutates) {
  RawTrace t;
  t.events = {raw::create(0),           raw::iter_new(0, 5),      raw::iter_advance(0, 5),
              get(0, 1, 1),             raw::iter_advance(0, 5),  raw::iter_new(0, 6),
              raw::iter_advance(0, 6),  raw::iter_advance(0, 5),  raw::iter_remove(0, 5, 1, 1),
              raw::iter_advance(0, 5),  raw::iter_advance(0, 6),  raw::iter_advance(0, 5)};
  const RawTrace c = coalesce(t);
  ASSERT_EQ(kinds(c), (std::vector<K>{K::Create, K::IterNew, K::IterAdvance, K::Get, K::IterNew,
                                      K::IterAdvance, K::IterRemove, K::IterAdvance, K::IterAdvance}));
  EXPECT_EQ(c.events[2].aux, 3u);  // three steps of iterator 5 before the remove
  EXPECT_EQ(c.events[5].aux, 1u);
  EXPECT_EQ(c.events[7].aux, 2u);
  EXPECT_EQ(c.events[8].aux, 1u);
}

TEST(Coalesce, OtherMapsDoNotSplitRuns) {
  RawTrace t;
  t.events = {raw::create(0), raw::create(1), raw::iter_new(0, 0), raw::iter_advance(0, 0),
              put(1, 1, 1),   raw::iter_advance(0, 0)};
  const RawTrace c = coalesce(t);
  ASSERT_EQ(c.events.size(), 5u);
  EXPECT_EQ(c.events[3].aux, 2u);
}

TEST(FreeEvents, FollowTheLastUse) {
  RawTrace t;
  t.events = {raw::create(0), put(0, 1, 1), raw::create_copy(1, 0), raw::iter_new(1, 0),
              raw::iter_advance(1, 0), get(1, 1, 1, true), raw::free_map(1)};
  const RawTrace f = insert_free_events(t);
  EXPECT_EQ(kinds(f), (std::vector<K>{K::Create, K::Put, K::CreateCopy, K::FreeMap, K::IterNew,
                                      K::IterAdvance, K::FreeIter, K::Get, K::FreeMap}));
  EXPECT_EQ(f.events[3].map_id, 0u);  // source dies at its copy
}

TEST(FreeEvents, IteratorsBeforeMapsOnOneEvent) {
  RawTrace t;
  t.events = {raw::create(0), raw::iter_new(0, 0), raw::iter_new(0, 1), raw::iter_advance(0, 1)};
  const RawTrace f = insert_free_events(t);
  EXPECT_EQ(kinds(f), (std::vector<K>{K::Create, K::IterNew, K::FreeIter, K::IterNew, K::IterAdvance,
                                      K::FreeIter, K::FreeMap}));
}

TEST(Encode, ReusesSlotsAndNumbersKeysDensely) {
  RawTrace t;
  t.events = {raw::create(10), put(10, 500, 42), raw::create(11), put(11, 400, 7),
              put(11, 500, 42, false), raw::create(12), get(12, 400, 7)};
  const ProcessedTrace p = encode(insert_free_events(t));
  EXPECT_EQ(p.key_hashes, (std::vector<std::int32_t>{42, 7}));
  EXPECT_EQ(p.max_map_slots, 1u);  // each map dies before the next is born
  EXPECT_EQ(p.max_iter_slots, 0u);
  ASSERT_EQ(opcodes(p), (std::vector<Opcode>{Opcode::Create, Opcode::Put, Opcode::FreeMap, Opcode::Create,
                                             Opcode::Put, Opcode::Put, Opcode::FreeMap, Opcode::Create,
                                             Opcode::Get, Opcode::FreeMap}));
  EXPECT_EQ(p.ops[4].b, 1);
  EXPECT_EQ(p.ops[5].b, 0);
  for (const OpTriple& op : p.ops) EXPECT_EQ(op.a, 0);
}

TEST(Encode, CarriesFlagsInTheCodeWord) {
  CreateArgs a;
  a.capacity = 100;
  a.capacity_explicit = true;
  a.load_factor_milli = 600;
  a.load_factor_explicit = true;
  a.spread_hashes = false;
  RawTrace t;
  t.events = {raw::create(0, a), put(0, 1, 1, true), raw::iter_new(0, 3, View::Values)};
  const ProcessedTrace p = encode(t);
  EXPECT_EQ(opword::create_args(p.ops[0]), a);
  EXPECT_EQ(p.ops[0].b, 100);
  EXPECT_TRUE(opword::outcome(p.ops[1].code));
  EXPECT_EQ(opword::view(p.ops[2].code), View::Values);
  EXPECT_EQ(p.ops[2].b, 0);  // map slot
}

TEST(Encode, RejectsBrokenStreams) {
  auto expect_integrity = [](const RawTrace& t, std::size_t index) {
    try {
      encode(t);
      FAIL() << "expected TraceIntegrityError";
    } catch (const TraceIntegrityError& e) {
      EXPECT_EQ(e.op_index(), index);
      EXPECT_EQ(e.stage(), "process");
    }
  };
  RawTrace unknown;
  unknown.events = {raw::create(0), put(1, 1, 1)};
  expect_integrity(unknown, 1);

  RawTrace inconsistent;
  inconsistent.events = {raw::create(0), put(0, 1, 1), get(0, 1, 2)};
  expect_integrity(inconsistent, 2);

  RawTrace freed_with_iter;
  freed_with_iter.events = {raw::create(0), raw::iter_new(0, 0), raw::free_map(0)};
  expect_integrity(freed_with_iter, 2);

  RawTrace use_after_free;
  use_after_free.events = {raw::create(0), raw::free_map(0), put(0, 1, 1)};
  expect_integrity(use_after_free, 2);
}

TEST(Encode, SplitsHugeAdvances) {
  RawTrace t;
  t.events = {raw::create(0), raw::iter_new(0, 0), raw::iter_advance(0, 0, (1ull << 32) + 5)};
  const ProcessedTrace p = encode(t);
  std::uint64_t steps = 0;
  for (const OpTriple& op : p.ops) {
    if (opword::opcode(op.code) == Opcode::IterAdvance) {
      EXPECT_GT(op.b, 0);
      steps += static_cast<std::uint64_t>(op.b);
    }
  }
  EXPECT_EQ(steps, (1ull << 32) + 5);
}

TEST(Codec, RoundTripAndCorruption) {
  const ProcessedTrace p = process(generate(test::spec("mixed")));
  const auto bytes = to_bytes(p);
  EXPECT_EQ(std::string(reinterpret_cast<const char*>(bytes.data()), 4), "MPT1");
  const ProcessedTrace q = decode(bytes);
  EXPECT_EQ(q, p);
  EXPECT_EQ(q.counts, stats(p));

  const ProcessedTrace empty;
  EXPECT_EQ(decode(to_bytes(empty)), empty);

  auto bad_magic = bytes;
  bad_magic[1] = std::byte{'Q'};
  EXPECT_THROW(decode(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = std::byte{2};
  EXPECT_THROW(decode(bad_version), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  EXPECT_THROW(decode(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(std::byte{1});
  EXPECT_THROW(decode(trailing), FormatError);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= std::byte{0x5a};
  EXPECT_THROW(decode(flipped), Error);

  ProcessedTrace bad_op = p;
  bad_op.ops[0].code = 77;
  EXPECT_THROW(decode(to_bytes(bad_op)), FormatError);

  const test::TempDir dir;
  write_processed_trace(dir.path / "p.mpt", p);
  EXPECT_EQ(read_processed_trace(dir.path / "p.mpt"), p);
  EXPECT_THROW(read_processed_trace(dir.path / "missing.mpt"), IoError);
}

TEST(Stats, TalliesOperationKinds) {
  RawTrace t;
  t.events = {raw::create(0), put(0, 1, 1), get(0, 1, 1, true), raw::keyed(K::ContainsKey, 0, 2, 2, false),
              raw::keyed(K::Remove, 0, 1, 1, true), raw::clear(0), raw::create_copy(1, 0),
              raw::iter_new(1, 0), raw::iter_advance(1, 0, 4)};
  const ProcessedTrace p = encode(insert_free_events(t));
  const Characterization c = stats(p);
  EXPECT_EQ(c.creates, 2u);
  EXPECT_EQ(c.reads, 2u);
  EXPECT_EQ(c.writes, 3u);
  EXPECT_EQ(c.iterates, 2u);
  EXPECT_EQ(c.events, p.ops.size());
  EXPECT_EQ(c.bytes, to_bytes(p).size());
}

TEST(ProcessProperty, FreePlacementOnRandomTraces) {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const ProcessedTrace p = process(generate(test::spec("random", seed)));
    ASSERT_EQ(test::check_free_placement(p), "") << "seed " << seed;
    ASSERT_EQ(decode(to_bytes(p)), p) << "seed " << seed;
  }
}

TEST(ProcessProperty, OracleCatchesMisplacedFrees) {
  ProcessedTrace p = process(generate(test::spec("random", 4)));
  ASSERT_EQ(test::check_free_placement(p), "");
  // Drop the first free: that object now has none.
  auto it = std::find_if(p.ops.begin(), p.ops.end(),
                         [](const OpTriple& op) { return opword::opcode(op.code) == Opcode::FreeMap; });
  ASSERT_NE(it, p.ops.end());
  ProcessedTrace missing = p;
  missing.ops.erase(missing.ops.begin() + (it - p.ops.begin()));
  EXPECT_NE(test::check_free_placement(missing), "");
  // Move a free one step early.
  for (std::size_t i = 1; i < p.ops.size(); ++i) {
    const Opcode o = opword::opcode(p.ops[i].code);
    const Opcode prev = opword::opcode(p.ops[i - 1].code);
    if (o == Opcode::FreeMap && prev != Opcode::FreeMap && prev != Opcode::FreeIter) {
      ProcessedTrace early = p;
      std::swap(early.ops[i], early.ops[i - 1]);
      EXPECT_NE(test::check_free_placement(early), "");
      break;
    }
  }
}

}  // namespace
}  // namespace mapreplay
