#include "mapreplay/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "mapreplay/error.hpp"
#include "mapreplay/rng.hpp"

namespace mapreplay {

namespace {

void check_level(double level) {
  if (!(level > 0 && level < 1)) throw StatsError("confidence level must lie in (0, 1)");
}

bool constant(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

double resampled_mean(std::span<const double> xs, Rng& rng) {
  double sum = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sum += xs[rng.below(xs.size())];
  return sum / static_cast<double>(xs.size());
}

// Percentile interval over sorted bootstrap statistics.
Interval percentile(std::vector<double>& stats, double level) {
  std::sort(stats.begin(), stats.end());
  const double alpha = 1 - level;
  const double last = static_cast<double>(stats.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(alpha / 2 * last));
  const auto hi = static_cast<std::size_t>(std::ceil((1 - alpha / 2) * last));
  return {stats[lo], stats[std::min(hi, stats.size() - 1)]};
}

}  // namespace

double mean(std::span<const double> xs) {
  if (xs.empty()) throw StatsError("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

Interval bootstrap_ci_mean(std::span<const double> xs, double level, std::uint32_t resamples,
                           std::uint64_t seed) {
  check_level(level);
  if (xs.size() < 2) throw StatsError("bootstrap needs at least two samples");
  if (resamples == 0) throw StatsError("bootstrap needs at least one resample");
  if (constant(xs)) return {xs.front(), xs.front()};
  Rng rng(seed);
  std::vector<double> stats(resamples);
  for (double& s : stats) s = resampled_mean(xs, rng);
  return percentile(stats, level);
}

Interval bootstrap_ci_diff(std::span<const double> a, std::span<const double> b, double level,
                           std::uint32_t resamples, std::uint64_t seed) {
  check_level(level);
  if (a.size() < 2 || b.size() < 2) throw StatsError("bootstrap needs at least two samples per set");
  if (resamples == 0) throw StatsError("bootstrap needs at least one resample");
  if (constant(a) && constant(b)) {
    const double d = a.front() - b.front();
    return {d, d};
  }
  Rng rng(seed);
  std::vector<double> stats(resamples);
  for (double& s : stats) {
    const double ma = resampled_mean(a, rng);
    s = ma - resampled_mean(b, rng);
  }
  return percentile(stats, level);
}

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw StatsError("pearson_r needs samples of equal length");
  if (xs.size() < 3) throw StatsError("pearson_r needs at least three points");
  const double mx = mean(xs);
  const double my = mean(ys);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw StatsError("pearson_r is undefined for zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double binomial_test_one_sided(std::uint64_t successes, std::uint64_t trials, double p0) {
  if (successes > trials) throw StatsError("successes exceed trials");
  if (!(p0 >= 0 && p0 <= 1)) throw StatsError("p0 must lie in [0, 1]");
  if (successes == 0) return 1.0;
  if (p0 == 0) return 0.0;
  if (p0 == 1) return 1.0;
  // Sum the upper tail in log space.
  const double n = static_cast<double>(trials);
  const double lp = std::log(p0);
  const double lq = std::log1p(-p0);
  double total = 0;
  for (std::uint64_t k = successes; k <= trials; ++k) {
    const double kd = static_cast<double>(k);
    const double log_term = std::lgamma(n + 1) - std::lgamma(kd + 1) - std::lgamma(n - kd + 1) +
                            kd * lp + (n - kd) * lq;
    total += std::exp(log_term);
  }
  return std::min(total, 1.0);
}

double cohens_h(double p1, double p2) {
  if (!(p1 >= 0 && p1 <= 1 && p2 >= 0 && p2 <= 1)) throw StatsError("proportions must lie in [0, 1]");
  return 2 * std::asin(std::sqrt(p1)) - 2 * std::asin(std::sqrt(p2));
}

const char* to_string(MapUsage usage) noexcept {
  switch (usage) {
    case MapUsage::Intensive: return "intensive";
    case MapUsage::Moderate: return "moderate";
    case MapUsage::Minimal: return "minimal";
  }
  return "?";
}

MapUsage classify(const Characterization& c, std::optional<double> cpu_fraction) {
  if (cpu_fraction && *cpu_fraction >= 0.05) return MapUsage::Intensive;
  if (c.events >= 100000) return MapUsage::Moderate;
  return MapUsage::Minimal;
}

}  // namespace mapreplay
