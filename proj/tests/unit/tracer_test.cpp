#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "mapreplay/postproc.hpp"
#include "mapreplay/tracer.hpp"
#include "support.hpp"

namespace {

// A key whose hash can be changed after insertion, the hazard poisoning
// guards against.
struct MutableKey {
  int id;
  const int* hash;

  std::int32_t hash_code() const noexcept { return *hash; }
  friend bool operator==(const MutableKey& a, const MutableKey& b) noexcept { return a.id == b.id; }
};

}  // namespace

template <>
struct std::hash<MutableKey> {
  std::size_t operator()(const MutableKey& k) const noexcept { return std::hash<int>{}(k.id); }
};

namespace mapreplay {
namespace {

std::vector<RawOpKind> kinds(const RawTrace& t) {
  std::vector<RawOpKind> out;
  for (const RawEvent& e : t.events) out.push_back(e.op);
  return out;
}

TEST(Tracer, RecordsEveryOperationWithOutcomes) {
  TraceSession s;
  TracedMap<std::string> m(s);
  m.put("a", 1);
  m.put("a", 2);
  m.get("a");
  m.get("b");
  m.contains_key("b");
  m.remove("a");
  m.remove("a");
  m.clear();
  const RawTrace t = s.close();
  using K = RawOpKind;
  ASSERT_EQ(kinds(t), (std::vector<K>{K::Create, K::Put, K::Put, K::Get, K::Get, K::ContainsKey,
                                      K::Remove, K::Remove, K::Clear}));
  const std::vector<std::uint8_t> outcomes = {0, 1, 1, 0, 0, 1, 0};
  for (std::size_t i = 0; i < outcomes.size(); ++i) EXPECT_EQ(t.events[i + 1].outcome, outcomes[i]);
  EXPECT_EQ(t.events[1].hash, string_hash_code("a"));
  EXPECT_EQ(t.events[1].key_id, t.events[3].key_id);
  EXPECT_NE(t.events[1].key_id, t.events[4].key_id);
  EXPECT_EQ(unpack_create(t.events[0].aux), CreateArgs{});
}

TEST(Tracer, ConstructorArgumentsAreRecordedWithExplicitFlags) {
  TraceSession s;
  TracedMap<int> a(s);
  TracedMap<int> b(s, 100);
  TracedMap<int> c(s, 8, 500);
  const RawTrace t = s.close();
  ASSERT_EQ(t.events.size(), 3u);
  const CreateArgs ab = unpack_create(t.events[1].aux);
  EXPECT_EQ(ab.capacity, 100u);
  EXPECT_TRUE(ab.capacity_explicit);
  EXPECT_FALSE(ab.load_factor_explicit);
  const CreateArgs ac = unpack_create(t.events[2].aux);
  EXPECT_EQ(ac.load_factor_milli, 500u);
  EXPECT_TRUE(ac.load_factor_explicit);
  EXPECT_EQ(b.underlying().config().initial_capacity, 128u);
}

TEST(Tracer, SessionDefaultsApplyToDefaultConstruction) {
  TraceSession s(true, MapConfig{64, 600, true});
  TracedMap<int> m(s);
  const RawTrace t = s.close();
  const CreateArgs a = unpack_create(t.events[0].aux);
  EXPECT_EQ(a.capacity, 64u);
  EXPECT_EQ(a.load_factor_milli, 600u);
  EXPECT_FALSE(a.capacity_explicit);
}

TEST(Tracer, CopyAndComputeAreRecorded) {
  TraceSession s;
  TracedMap<int> m(s);
  m.put(1, 1);
  TracedMap<int> c = m.copy();
  auto inc = [](std::optional<ValueToken> v) -> std::optional<ValueToken> { return v.value_or(0) + 1; };
  c.compute(1, inc);
  c.compute(2, inc);
  c.compute(1, [](std::optional<ValueToken>) -> std::optional<ValueToken> { return std::nullopt; });
  c.compute(9, [](std::optional<ValueToken>) -> std::optional<ValueToken> { return std::nullopt; });
  EXPECT_EQ(c.size(), 1u);
  EXPECT_EQ(m.size(), 1u);
  const RawTrace t = s.close();
  using K = RawOpKind;
  ASSERT_EQ(kinds(t), (std::vector<K>{K::Create, K::Put, K::CreateCopy, K::Put, K::Put, K::Remove}));
  EXPECT_EQ(t.events[2].map_id, c.id());
  EXPECT_EQ(t.events[2].aux, m.id());
  EXPECT_EQ(t.events[3].outcome, 1);
  EXPECT_EQ(t.events[4].outcome, 0);
}

TEST(Tracer, IteratorEventsAndMisuseLeaveNoTrace) {
  TraceSession s;
  TracedMap<int> m(s);
  m.put(1, 0);
  m.put(2, 0);
  auto it = m.iterate(View::Keys);
  EXPECT_THROW(it.remove(), IllegalIteratorState);
  const int first = it.next().key;
  it.remove();
  it.next();
  EXPECT_THROW(it.next(), IteratorExhausted);
  auto stale = m.iterate();
  m.put(3, 0);
  EXPECT_THROW(stale.next(), ConcurrentModification);
  const RawTrace t = s.close();
  using K = RawOpKind;
  ASSERT_EQ(kinds(t), (std::vector<K>{K::Create, K::Put, K::Put, K::IterNew, K::IterAdvance, K::IterRemove,
                                      K::IterAdvance, K::IterNew, K::Put}));
  EXPECT_EQ(t.events[3].aux, static_cast<std::uint64_t>(View::Keys));
  EXPECT_EQ(t.events[3].iter_id(), it.id());
  EXPECT_EQ(t.events[5].hash, first);
  EXPECT_EQ(t.events[5].aux, t.events[first == 1 ? 1 : 2].key_id);
  EXPECT_NE(t.events[7].iter_id(), t.events[3].iter_id());
}

TEST(Tracer, UnstableHashPoisonsTheMap) {
  int h = 7;
  TraceSession s;
  TracedMap<MutableKey> m(s);
  TracedMap<MutableKey> other(s);
  const MutableKey k{1, &h};
  m.put(k, 0);
  h = 8;
  m.get(k);
  other.put(MutableKey{2, &h}, 0);
  const RawTrace t = s.close();
  bool poisoned = false;
  for (const RawEvent& e : t.events) poisoned |= e.op == RawOpKind::Poison && e.map_id == m.id();
  EXPECT_TRUE(poisoned);
  SanitizeReport rep;
  const RawTrace clean = sanitize(t, &rep);
  EXPECT_EQ(rep.excluded_maps, (std::vector<std::uint64_t>{m.id()}));
  for (const RawEvent& e : clean.events) EXPECT_EQ(e.map_id, other.id());
}

TEST(Tracer, ClosedSessionMakesForeignMaps) {
  TraceSession s(false);
  TracedMap<int> foreign(s);
  EXPECT_TRUE(foreign.foreign());
  foreign.put(1, 0);
  s.open();
  TracedMap<int> mine(s);
  EXPECT_FALSE(mine.foreign());
  foreign.put(2, 0);
  mine.put(3, 0);
  EXPECT_EQ(s.constructions(), 2u);
  const RawTrace t = s.close();
  ASSERT_EQ(t.events.size(), 3u);  // foreign Put, Create, Put
  SanitizeReport rep;
  const RawTrace clean = sanitize(t, &rep);
  EXPECT_EQ(rep.orphan_events, 1u);
  EXPECT_EQ(clean.events.size(), 2u);
  EXPECT_FALSE(s.is_open());
  EXPECT_FALSE(s.record(raw::clear(mine.id())));
}

TEST(Tracer, ThreadsGetTheirOwnBuffers) {
  TraceSession s;
  constexpr int kPerThread = 2000;
  auto body = [&] {
    TracedMap<std::int64_t> m(s);
    for (int i = 0; i < kPerThread; ++i) m.put(i, 0);
  };
  std::thread a(body), b(body);
  a.join();
  b.join();
  const RawTrace t = s.close();
  ASSERT_EQ(t.events.size(), 2u * (kPerThread + 1));
  std::set<std::uint64_t> threads;
  std::map<std::uint64_t, std::uint64_t> puts_seen;
  std::map<std::uint64_t, std::uint64_t> thread_of_map;
  for (const RawEvent& e : t.events) {
    threads.insert(e.thread_id);
    auto [it, inserted] = thread_of_map.try_emplace(e.map_id, e.thread_id);
    EXPECT_EQ(it->second, e.thread_id);
    if (e.op == RawOpKind::Create) {
      EXPECT_EQ(puts_seen[e.map_id], 0u);
    }
    if (e.op == RawOpKind::Put) ++puts_seen[e.map_id];
  }
  EXPECT_EQ(threads.size(), 2u);
  // Both maps share keys 0..1999, so they share canonical ids.
  EXPECT_NO_THROW(process(t));
}

TEST(Tracer, CloseToFileWritesEndMarker) {
  const test::TempDir dir;
  TraceSession s;
  {
    TracedMap<int> m(s);
    m.put(1, 1);
  }
  s.close_to_file(dir.path / "t.mrt");
  const RawTrace t = read_raw_trace(dir.path / "t.mrt");
  EXPECT_EQ(t.events.size(), 2u);
}

}  // namespace
}  // namespace mapreplay
