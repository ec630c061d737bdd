// Acceptance run: prints one PASS or FAIL line per criterion, each with its
// measured runtime against the allowed budget. Exits nonzero on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mapreplay/bench.hpp"
#include "mapreplay/map_config.hpp"
#include "mapreplay/postproc.hpp"
#include "mapreplay/ref_map.hpp"
#include "mapreplay/stats.hpp"
#include "mapreplay/tracer.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mapreplay;

namespace {

constexpr std::uint64_t kRandomSeeds = 1000;
const std::vector<std::uint32_t> kDics{16, 32, 64, 128};

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Accumulates the first few failures of a check.
class Problems {
 public:
  void add(const std::string& what) {
    if (count_++ < 5) text_ << (count_ > 1 ? "; " : "") << what;
  }
  Outcome outcome(const std::string& ok_detail) const {
    if (count_ == 0) return {true, ok_detail};
    std::ostringstream s;
    s << count_ << " problem(s): " << text_.str();
    return {false, s.str()};
  }

 private:
  std::uint64_t count_ = 0;
  std::ostringstream text_;
};

std::vector<WorkloadSpec> all_specs() {
  std::vector<WorkloadSpec> out;
  for (const std::string& n : test::workload_names()) out.push_back(test::spec(n));
  for (std::uint64_t s = 0; s < kRandomSeeds; ++s) out.push_back(test::spec("random", s));
  return out;
}

std::string label(const WorkloadSpec& s) { return s.name + "#" + std::to_string(s.seed); }

Outcome statistics_fidelity() {
  const double p = binomial_test_one_sided(18, 21, 0.5);
  const double h = cohens_h(0.857, 0.5);
  const std::uint32_t t = threshold(16, 750);
  std::ostringstream d;
  d << "p=" << p << " h=" << h << " threshold=" << t;
  return {std::abs(p - 0.0007) <= 5e-5 && std::abs(h - 0.796) <= 1e-3 && t == 12, d.str()};
}

Outcome resize_schedule() {
  // Through the map itself: insertion counts at which a resize happens.
  OpCounters c;
  RefMap<std::int32_t> m({}, &c);
  std::vector<int> at;
  for (int i = 1; i <= 49; ++i) {
    const std::uint64_t before = c.resizes;
    m.put(i * 7919, 1);
    if (c.resizes != before) at.push_back(i);
  }
  // Through the whole pipeline: traced, processed, counted per DIC.
  TraceSession session;
  {
    TracedMap<std::int32_t> traced(session);
    for (int i = 1; i <= 49; ++i) traced.put(i * 7919, 1);
  }
  const ReplaySession s = setup(process(session.close()));
  std::vector<std::uint64_t> totals;
  for (std::uint32_t dic : kDics) {
    totals.push_back(test::run_mode(s, ReplayMode::Counting, {dic, std::nullopt}).counters.resizes);
  }
  std::ostringstream d;
  d << "resize at";
  for (int i : at) d << ' ' << i;
  d << "; totals";
  for (auto n : totals) d << ' ' << n;
  return {at == std::vector<int>{13, 25, 49} && totals == std::vector<std::uint64_t>{3, 2, 1, 0}, d.str()};
}

Outcome state_equivalence() {
  Problems problems;
  std::uint64_t checked = 0, digests = 0;
  for (const WorkloadSpec& spec : all_specs()) {
    try {
      const ReplayResult r = test::run_mode(test::session_for(spec), ReplayMode::Validating);
      const std::vector<std::uint64_t> want = run_direct(spec).digests;
      if (test::digests_by_ordinal(r) != want || r.digests.size() != want.size()) {
        problems.add(label(spec) + ": digests differ from direct execution");
      }
      digests += r.digests.size();
    } catch (const std::exception& e) {
      problems.add(label(spec) + ": " + e.what());
    }
    ++checked;
  }
  return problems.outcome(std::to_string(checked) + " traces, " + std::to_string(digests) + " map digests equal");
}

Outcome postprocessing_preservation() {
  Problems problems;
  std::uint64_t checked = 0, injected = 0;
  ProcessOptions plain;
  plain.coalesce = false;
  for (const WorkloadSpec& spec : all_specs()) {
    try {
      const RawTrace raw = generate(spec);
      const ProcessedTrace merged = process(raw);
      const ProcessedTrace split = process(raw, plain);
      const ReplaySession a = setup(merged), b = setup(split);
      for (std::uint32_t dic : kDics) {
        if (test::run_mode(a, ReplayMode::Counting, {dic, std::nullopt}).counters !=
            test::run_mode(b, ReplayMode::Counting, {dic, std::nullopt}).counters) {
          problems.add(label(spec) + ": counters differ at DIC-" + std::to_string(dic));
        }
      }
      if (test::digests_by_ordinal(test::run_mode(a, ReplayMode::Validating)) !=
          test::digests_by_ordinal(test::run_mode(b, ReplayMode::Validating))) {
        problems.add(label(spec) + ": digests differ");
      }
      for (const ProcessedTrace* t : {&merged, &split}) {
        if (!(decode(to_bytes(*t)) == *t)) problems.add(label(spec) + ": encode/decode round trip differs");
      }
      const std::uint64_t n = 1 + spec.seed % 40;
      SanitizeReport clean_report, dirty_report;
      const RawTrace clean = sanitize(raw, &clean_report);
      const RawTrace dirty = sanitize(test::inject_orphans(raw, n, spec.seed), &dirty_report);
      if (!(dirty == clean) || dirty_report.orphan_events != clean_report.orphan_events + n) {
        problems.add(label(spec) + ": sanitization did not remove exactly the injected events");
      }
      injected += n;
    } catch (const std::exception& e) {
      problems.add(label(spec) + ": " + e.what());
    }
    ++checked;
  }
  return problems.outcome(std::to_string(checked) + " traces, " + std::to_string(injected) +
                          " injected orphan events removed");
}

Outcome directional_trends() {
  const ReplaySession wf = test::session_for(test::spec("wordfreq"));
  const ReplaySession sc = test::session_for(test::spec("scan"));
  std::vector<OpCounters> w, s;
  for (std::uint32_t dic : kDics) {
    if (dic <= 64) w.push_back(test::run_mode(wf, ReplayMode::Counting, {dic, std::nullopt}).counters);
    s.push_back(test::run_mode(sc, ReplayMode::Counting, {dic, std::nullopt}).counters);
  }
  bool ok = true;
  std::ostringstream d;
  d << "wordfreq probes/resizes";
  for (std::size_t i = 0; i < w.size(); ++i) {
    d << ' ' << w[i].collision_probes << '/' << w[i].resizes;
    if (i > 0) ok &= w[i].collision_probes <= w[i - 1].collision_probes && w[i].resizes <= w[i - 1].resizes;
  }
  d << "; scan buckets";
  for (std::size_t i = 0; i < s.size(); ++i) {
    d << ' ' << s[i].buckets_scanned;
    if (i > 0) ok &= s[i].buckets_scanned > s[i - 1].buckets_scanned;
  }
  return {ok, d.str()};
}

Outcome harness_soundness() {
  const ReplaySession s = test::session_for(test::spec("churn"));
  BenchConfig c;
  c.runs = 5;
  c.measured_iters = 5;
  c.warmup_iters = 3;
  c.iter_duration = 0.05;
  int sound = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    c.seed = rep;
    const BenchReport r = run_bench(s, {Variant{}, Variant{}}, c, "self");
    const VariantResult& v = r.variants.at(1);
    sound += !v.excluded && v.diff_ci.contains(0) && format_speedup(v.speedup) == "1.00x";
  }
  const std::string cell = format_cell(2007, 26.9, 2051.0 / 2007.0);
  return {sound >= 95 && cell == "2007±26.9 (1.02x)",
          std::to_string(sound) + "/100 self-comparisons neutral; cell \"" + cell + "\""};
}

Outcome free_placement() {
  Problems problems;
  std::uint64_t checked = 0;
  ProcessOptions plain;
  plain.coalesce = false;
  for (const WorkloadSpec& spec : all_specs()) {
    const RawTrace raw = generate(spec);
    for (const ProcessOptions& o : {ProcessOptions{}, plain}) {
      const std::string err = test::check_free_placement(process(raw, o));
      if (!err.empty()) problems.add(label(spec) + ": " + err);
      ++checked;
    }
  }
  return problems.outcome(std::to_string(checked) + " processed traces");
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"statistics-fidelity", 1, statistics_fidelity},
      {"resize-schedule", 1, resize_schedule},
      {"state-equivalence", 120, state_equivalence},
      {"postprocessing-preservation", 120, postprocessing_preservation},
      {"directional-trends", 60, directional_trends},
      {"harness-soundness", 600, harness_soundness},
      {"free-placement", 60, free_placement},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.ok && in_time;
    failures += !pass;
    std::printf("%s %s: %s [%.2fs, budget %.0fs%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
