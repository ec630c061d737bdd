#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mapreplay/replay.hpp"
#include "mapreplay/stats.hpp"

namespace mapreplay {

struct BenchConfig {
  std::uint32_t runs = 5;
  std::uint32_t warmup_iters = 5;
  std::uint32_t measured_iters = 5;
  /// Target wall time of one iteration, in seconds.
  double iter_duration = 10.0;
  std::uint64_t seed = 0;
  double confidence = kDefaultConfidence;
  std::uint32_t resamples = kDefaultResamples;
  /// Each run in its own child process when the platform allows it.
  bool fork_runs = true;

  /// Throws ConfigError on zero runs or iterations, or a non-positive duration.
  void validate() const;
};

/// One benchmarked configuration: an implementation name plus the default
/// initial capacity (and optionally load factor) substituted at replay.
struct Variant {
  std::string impl = "refmap";
  std::uint32_t dic = kDefaultInitialCapacity;
  std::optional<std::uint32_t> load_factor_milli;

  /// "impl/DIC-n", plus "/LF-m" when a load factor is set.
  std::string label() const;
  ConfigOverride override() const { return {dic, load_factor_milli}; }
  friend bool operator==(const Variant&, const Variant&) = default;
};

struct VariantResult {
  Variant variant;
  /// Mean milliseconds per replay, one entry per measured iteration, runs
  /// concatenated in order.
  std::vector<double> samples_ms;
  double mean_ms = 0;
  /// Half the width of the bootstrap interval of this variant's mean.
  double half_width_ms = 0;
  /// baseline mean / this mean.
  double speedup = 1;
  /// Interval of mean(this) - mean(baseline).
  Interval diff_ci;
  bool significant = false;
  bool excluded = false;
  std::string excluded_reason;
};

/// Results for one trace. variants[0] is the baseline.
struct BenchReport {
  std::string name;
  BenchConfig config;
  std::vector<VariantResult> variants;
  std::vector<std::string> warnings;
};

/// Computes every statistic of a report from raw samples. Excluded variants
/// keep their flag and get no statistics. Deterministic for a fixed seed.
BenchReport summarize(std::string name, const BenchConfig& config,
                      std::vector<VariantResult> variants);

/// Times `session` under every variant. Each run executes all variants with
/// their iterations interleaved round-robin, so slow drift of the machine hits
/// all variants alike. Variants that fail a validating replay first are
/// excluded and flagged.
BenchReport run_bench(const ReplaySession& session, const std::vector<Variant>& variants,
                      const BenchConfig& config, std::string name = "trace");

/// Report cell such as "2007±26.9 (1.02x)"; the baseline cell omits the ratio.
std::string format_cell(double mean_ms, double half_width_ms, std::optional<double> speedup);
std::string format_speedup(double speedup);

/// Plain-text table, one row per variant.
std::string render_table(const BenchReport& report);

// Report files hold one or more reports as line-oriented key=value records:
//   bench name=... runs=... warmup=... iters=... duration=... seed=...
//   variant label=... impl=... dic=... mean_ms=... samples=a,b,c ...
void write_reports(const std::filesystem::path& path, const std::vector<BenchReport>& reports);
std::vector<BenchReport> read_reports(const std::filesystem::path& path);
std::string serialize_report(const BenchReport& report);
std::vector<BenchReport> parse_reports(const std::string& text);

/// Direction symbol of a change against its baseline: "⊕" / "⊖" for a
/// significant speedup / slowdown, "+" / "-" for an insignificant shift.
std::string change_symbol(const VariantResult& v);
/// Overlap of two symbols: concordant significant pairs stay significant,
/// other concordant pairs become insignificant, discordant pairs are joined
/// with "|".
std::string overlap_symbol(const VariantResult& a, const VariantResult& b);

struct ComparedChange {
  std::string bench;
  std::string label;
  double speedup_a = 1;
  double speedup_b = 1;
  std::string symbol_a;
  std::string symbol_b;
  std::string overlap;
  bool concordant = false;
};

struct Concordance {
  std::vector<ComparedChange> changes;
  std::optional<double> pearson;  ///< absent when undefined
  std::uint64_t concordant = 0;
  std::uint64_t trials = 0;
  double binomial_p = 1;
  double proportion = 0;
  double cohens_h = 0;
};

/// Matches non-baseline variants by (report name, variant label) and
/// computes the correlation and concordance statistics over the pairs.
Concordance compare_reports(const std::vector<BenchReport>& a, const std::vector<BenchReport>& b);
std::string render_concordance(const Concordance& c);

}  // namespace mapreplay
