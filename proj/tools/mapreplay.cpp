// mapreplay: trace -> process -> replay -> bench from the command line.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mapreplay/bench.hpp"
#include "mapreplay/error.hpp"
#include "mapreplay/pipeline.hpp"
#include "mapreplay/postproc.hpp"
#include "mapreplay/registry.hpp"
#include "mapreplay/replay.hpp"
#include "mapreplay/stats.hpp"
#include "mapreplay/workloads.hpp"

namespace mr = mapreplay;

namespace {

struct WorkloadArgs {
  std::string name;
  std::uint64_t seed = 1;
  std::uint32_t scale = 1;
  std::vector<std::string> params;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Workload seed")->capture_default_str();
    cmd->add_option("--scale", scale, "Size multiplier (0 = empty trace)")->capture_default_str();
    cmd->add_option("--param", params, "Workload parameter as key=value (repeatable)");
  }

  mr::WorkloadSpec spec() const {
    mr::WorkloadSpec s{name, seed, scale, {}};
    for (const std::string& p : params) {
      const auto eq = p.find('=');
      if (eq == std::string::npos || eq == 0) throw mr::ConfigError("parameter '" + p + "' is not key=value");
      try {
        std::size_t used = 0;
        const std::string value = p.substr(eq + 1);
        s.params[p.substr(0, eq)] = std::stoll(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::logic_error&) {
        throw mr::ConfigError("parameter '" + p + "' needs an integer value");
      }
    }
    return s;
  }
};

struct VariantArgs {
  std::vector<std::string> impls{"refmap"};
  std::vector<std::uint32_t> dics{mr::kDefaultInitialCapacity};
  std::optional<std::uint32_t> lf;

  void add(CLI::App* cmd) {
    cmd->add_option("--impl", impls, "Map implementation(s), comma separated")->delimiter(',')->capture_default_str();
    cmd->add_option("--dic", dics, "Default initial capacities, comma separated; the first is the baseline")
        ->delimiter(',')
        ->capture_default_str();
    cmd->add_option("--lf", lf, "Default load factor in thousandths (750 = 0.75)");
  }

  std::vector<mr::Variant> variants() const {
    std::vector<mr::Variant> out;
    for (const std::string& impl : impls) {
      for (std::uint32_t dic : dics) {
        if (dic == 0) throw mr::ConfigError("--dic values must be positive");
        out.push_back({impl, dic, lf});
      }
    }
    return out;
  }
};

struct BenchArgs {
  mr::BenchConfig config;
  bool no_fork = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--runs", config.runs, "Independent runs")->capture_default_str();
    cmd->add_option("--warmup", config.warmup_iters, "Warmup iterations per run")->capture_default_str();
    cmd->add_option("--iters", config.measured_iters, "Measured iterations per run")->capture_default_str();
    cmd->add_option("--duration", config.iter_duration, "Seconds per iteration")->capture_default_str();
    cmd->add_option("--stats-seed", config.seed, "Bootstrap seed")->capture_default_str();
    cmd->add_option("--confidence", config.confidence, "Confidence level")->capture_default_str();
    cmd->add_option("--resamples", config.resamples, "Bootstrap resamples")->capture_default_str();
    cmd->add_flag("--no-fork", no_fork, "Run in-process instead of one child process per run");
  }

  mr::BenchConfig get() const {
    mr::BenchConfig c = config;
    c.fork_runs = !no_fork;
    return c;
  }
};

void print_characterization(std::ostream& os, const mr::Characterization& c,
                            std::optional<double> cpu_percent) {
  std::optional<double> fraction;
  if (cpu_percent) fraction = *cpu_percent / 100.0;
  os << "events=" << c.events << "\ncreates=" << c.creates << "\nreads=" << c.reads
     << "\nwrites=" << c.writes << "\niterates=" << c.iterates << "\nbytes=" << c.bytes
     << "\nusage=" << mr::to_string(mr::classify(c, fraction)) << '\n';
}

void print_counters(std::ostream& os, const mr::OpCounters& c) {
  os << "resizes=" << c.resizes << "\ncollision_probes=" << c.collision_probes
     << "\nbuckets_scanned=" << c.buckets_scanned << "\nentries_moved=" << c.entries_moved << '\n';
}

void print_result(std::ostream& os, const mr::ReplayResult& r, const mr::ConfigOverride& o) {
  os << "impl=" << r.impl << "\nmode=" << mr::to_string(r.mode);
  if (o.initial_capacity) os << "\ndic=" << *o.initial_capacity;
  if (o.load_factor_milli) os << "\nlf=" << *o.load_factor_milli;
  os << "\nrepetitions=" << r.repetitions << "\nops_executed=" << r.ops_executed
     << "\nfactory_calls=" << r.factory_calls << "\nelapsed_ns=" << r.elapsed.count();
  if (r.ops_executed > 0) {
    os << "\nns_per_op=" << static_cast<double>(r.elapsed.count()) / static_cast<double>(r.ops_executed);
  }
  os << '\n';
  if (r.mode == mr::ReplayMode::Counting) {
    print_counters(os, r.counters);
    os << "adapter_calls=" << r.adapter_calls << '\n';
  }
  if (r.mode == mr::ReplayMode::Validating) {
    os << "outcome_mismatches=0\ndigests=" << r.digests.size() << '\n';
  }
}

void write_text(const std::string& path, const std::string& text, const char* stage) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw mr::IoError(stage, "cannot write " + path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven hash map benchmark generator"};
  app.require_subcommand(1);
  std::string stage = "cli";

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Run a built-in workload against traced maps");
  WorkloadArgs trace_w;
  std::string trace_out;
  bool list = false;
  trace_cmd->add_option("workload", trace_w.name, "Workload name");
  trace_w.add(trace_cmd);
  trace_cmd->add_option("-o,--output", trace_out, "Raw trace file to write");
  trace_cmd->add_flag("--list", list, "List workloads and their parameters");

  // process
  auto* process_cmd = app.add_subcommand("process", "Sanitize, coalesce, add frees and encode a raw trace");
  std::string process_in, process_out;
  bool no_coalesce = false;
  process_cmd->add_option("raw", process_in, "Raw trace file")->required();
  process_cmd->add_option("-o,--output", process_out, "Processed trace file")->required();
  process_cmd->add_flag("--no-coalesce", no_coalesce, "Keep one opcode per iterator step");

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Characterize a processed trace");
  std::string stats_in;
  std::optional<double> cpu_percent;
  stats_cmd->add_option("processed", stats_in, "Processed trace file")->required();
  stats_cmd->add_option("--cpu", cpu_percent, "Measured % of CPU time spent in maps, for classification");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Replay a processed trace once");
  std::string replay_in, replay_out, replay_impl = "refmap", replay_mode = "timing";
  std::optional<std::uint32_t> replay_dic, replay_lf;
  std::uint32_t replay_reps = 1;
  replay_cmd->add_option("processed", replay_in, "Processed trace file")->required();
  replay_cmd->add_option("--impl", replay_impl, "Map implementation")->capture_default_str();
  replay_cmd->add_option("--dic", replay_dic, "Default initial capacity");
  replay_cmd->add_option("--lf", replay_lf, "Default load factor in thousandths");
  replay_cmd->add_option("--mode", replay_mode, "timing, counting or validating")->capture_default_str();
  replay_cmd->add_option("--reps", replay_reps, "Back-to-back repetitions")->capture_default_str();
  replay_cmd->add_option("-o,--output", replay_out, "Also write the summary to this file");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark variants of a processed trace");
  std::string bench_in, bench_out, bench_name;
  VariantArgs bench_v;
  BenchArgs bench_b;
  bench_cmd->add_option("processed", bench_in, "Processed trace file")->required();
  bench_v.add(bench_cmd);
  bench_b.add(bench_cmd);
  bench_cmd->add_option("--name", bench_name, "Report name (default: file stem)");
  bench_cmd->add_option("-o,--output", bench_out, "Report file to write");

  // compare
  auto* compare_cmd = app.add_subcommand("compare", "Correlate the speedups of two report files");
  std::string compare_a, compare_b;
  compare_cmd->add_option("reportA", compare_a, "First report file")->required();
  compare_cmd->add_option("reportB", compare_b, "Second report file")->required();

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "trace, process, validate and bench in one go");
  WorkloadArgs pipe_w;
  VariantArgs pipe_v;
  BenchArgs pipe_b;
  std::string pipe_out;
  bool pipe_counting = false;
  pipe_cmd->add_option("workload", pipe_w.name, "Workload name")->required();
  pipe_w.add(pipe_cmd);
  pipe_v.add(pipe_cmd);
  pipe_b.add(pipe_cmd);
  pipe_cmd->add_flag("--counting", pipe_counting, "Print counting-mode counters per refmap variant first");
  pipe_cmd->add_option("-o,--output", pipe_out, "Report file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*trace_cmd) {
      stage = "trace";
      if (list) {
        for (const mr::WorkloadInfo& w : mr::workloads()) {
          std::cout << w.name << ": " << w.description << '\n';
          for (const auto& [k, v] : w.defaults) std::cout << "  " << k << "=" << v << '\n';
        }
        return 0;
      }
      if (trace_w.name.empty()) throw mr::ConfigError("a workload name is required (see --list)");
      if (trace_out.empty()) throw mr::ConfigError("an output file is required (-o)");
      const mr::RawTrace raw = mr::generate(trace_w.spec());
      mr::write_raw_trace(trace_out, raw);
      std::cout << "events=" << raw.events.size() << '\n';
    } else if (*process_cmd) {
      stage = "process";
      const mr::RawTrace raw = mr::read_raw_trace(process_in);
      mr::SanitizeReport rep;
      const mr::ProcessedTrace p = mr::process(raw, {.coalesce = !no_coalesce}, &rep);
      mr::write_processed_trace(process_out, p);
      std::cout << "events_in=" << rep.events_in << "\nevents_out=" << rep.events_out
                << "\norphan_events=" << rep.orphan_events << "\nexcluded_maps=" << rep.excluded_maps.size()
                << "\nops=" << p.ops.size() << "\nkeys=" << p.key_hashes.size() << '\n';
    } else if (*stats_cmd) {
      stage = "stats";
      print_characterization(std::cout, mr::read_processed_trace(stats_in).counts, cpu_percent);
    } else if (*replay_cmd) {
      stage = "replay";
      const mr::ReplayMode mode = mr::parse_replay_mode(replay_mode);
      const mr::ImplInfo& impl = mr::find_impl(replay_impl);
      const mr::ReplaySession session = mr::setup(mr::read_processed_trace(replay_in));
      mr::ReplayOptions o;
      o.mode = mode;
      o.override = {replay_dic, replay_lf};
      o.repetitions = replay_reps;
      std::ostringstream text;
      print_result(text, impl.run(session, o), o.override);
      std::cout << text.str();
      if (!replay_out.empty()) write_text(replay_out, text.str(), "replay");
    } else if (*bench_cmd) {
      stage = "bench";
      const auto variants = bench_v.variants();
      const mr::BenchConfig config = bench_b.get();
      config.validate();
      const mr::ReplaySession session = mr::setup(mr::read_processed_trace(bench_in));
      if (bench_name.empty()) bench_name = std::filesystem::path(bench_in).stem().string();
      const mr::BenchReport report = mr::run_bench(session, variants, config, bench_name);
      std::cout << mr::render_table(report);
      if (!bench_out.empty()) mr::write_reports(bench_out, {report});
    } else if (*compare_cmd) {
      stage = "compare";
      const mr::Concordance c =
          mr::compare_reports(mr::read_reports(compare_a), mr::read_reports(compare_b));
      std::cout << mr::render_concordance(c);
    } else if (*pipe_cmd) {
      stage = "pipeline";
      mr::PipelineOptions po;
      po.counting_prepass = pipe_counting;
      const mr::PipelineResult r = mr::pipeline(pipe_w.spec(), pipe_v.variants(), pipe_b.get(), po);
      print_characterization(std::cout, r.characterization, std::nullopt);
      for (const mr::CountedVariant& cv : r.counts) {
        std::cout << "[" << cv.variant.label() << "]\n";
        print_counters(std::cout, cv.counters);
      }
      std::cout << mr::render_table(r.report);
      if (!pipe_out.empty()) mr::write_reports(pipe_out, {r.report});
    }
  } catch (const mr::Error& e) {
    std::cerr << "mapreplay " << stage << ": " << e.stage() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mapreplay " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
