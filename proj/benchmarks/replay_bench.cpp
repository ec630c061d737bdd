// Microbenchmarks for the reference map and the replay loop. The bench
// harness is the tool for trace comparisons; these track raw throughput.

#include <benchmark/benchmark.h>

#include <map>
#include <string>

#include "mapreplay/postproc.hpp"
#include "mapreplay/registry.hpp"
#include "mapreplay/replay.hpp"
#include "mapreplay/workloads.hpp"

namespace {

using namespace mapreplay;

void BM_RefMapPut(benchmark::State& state) {
  const auto n = static_cast<std::int32_t>(state.range(0));
  for (auto _ : state) {
    RefMap<std::int32_t> m;
    for (std::int32_t i = 0; i < n; ++i) m.put(i * 31, 1);
    benchmark::DoNotOptimize(m.size());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_RefMapPut)->Arg(16)->Arg(1024)->Arg(65536);

void BM_RefMapGet(benchmark::State& state) {
  const auto n = static_cast<std::int32_t>(state.range(0));
  RefMap<std::int32_t> m;
  for (std::int32_t i = 0; i < n; ++i) m.put(i * 31, 1);
  std::int32_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.get(k));
    k = (k + 31) % (n * 62);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RefMapGet)->Arg(1024)->Arg(65536);

const ReplaySession& session(const std::string& workload) {
  static std::map<std::string, ReplaySession> cache;
  auto it = cache.find(workload);
  if (it == cache.end()) {
    it = cache.emplace(workload, setup(process(generate(WorkloadSpec{workload, 1, 1, {}})))).first;
  }
  return it->second;
}

// Args: index into impl_names(), DIC.
void BM_Replay(benchmark::State& state, const std::string& workload) {
  const ImplInfo& impl = find_impl(impl_names().at(static_cast<std::size_t>(state.range(0))));
  const ReplaySession& s = session(workload);
  ReplayOptions o;
  o.override.initial_capacity = static_cast<std::uint32_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(impl.run(s, o).ops_executed);
  state.SetLabel(impl.name);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.trace().ops.size()));
}
BENCHMARK_CAPTURE(BM_Replay, wordfreq, std::string("wordfreq"))->ArgsProduct({{0, 1, 2}, {16, 64}});
BENCHMARK_CAPTURE(BM_Replay, scan, std::string("scan"))->ArgsProduct({{0, 1, 2}, {16, 128}});

}  // namespace

BENCHMARK_MAIN();
