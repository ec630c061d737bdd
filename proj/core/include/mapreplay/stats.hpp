#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "mapreplay/processed_trace.hpp"

namespace mapreplay {

struct Interval {
  double lo = 0;
  double hi = 0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double width() const noexcept { return hi - lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

inline constexpr double kDefaultConfidence = 0.99;
inline constexpr std::uint32_t kDefaultResamples = 50000;

double mean(std::span<const double> xs);

/// Percentile bootstrap interval of mean(xs). Needs at least two samples.
Interval bootstrap_ci_mean(std::span<const double> xs, double level = kDefaultConfidence,
                           std::uint32_t resamples = kDefaultResamples, std::uint64_t seed = 0);

/// Percentile bootstrap interval of mean(a) - mean(b), resampling both sets
/// independently. Deterministic for a fixed seed; all-equal inputs give the
/// zero-width interval at the point difference.
Interval bootstrap_ci_diff(std::span<const double> a, std::span<const double> b,
                           double level = kDefaultConfidence,
                           std::uint32_t resamples = kDefaultResamples, std::uint64_t seed = 0);

/// Product-moment correlation. Throws StatsError for fewer than three points,
/// unequal lengths or zero variance.
double pearson_r(std::span<const double> xs, std::span<const double> ys);

/// P[X >= successes] for X ~ Binomial(trials, p0).
double binomial_test_one_sided(std::uint64_t successes, std::uint64_t trials, double p0 = 0.5);

/// 2 asin(sqrt(p1)) - 2 asin(sqrt(p2)).
double cohens_h(double p1, double p2);

enum class MapUsage { Intensive, Moderate, Minimal };

const char* to_string(MapUsage usage) noexcept;

/// Intensive when at least 5% of CPU time is spent in maps, otherwise
/// moderate with 100000 or more events, otherwise minimal. `cpu_fraction` is
/// a fraction (0.05 = 5%).
MapUsage classify(const Characterization& c, std::optional<double> cpu_fraction = std::nullopt);

}  // namespace mapreplay
