#include "mapreplay/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <string>

#include "mapreplay/error.hpp"
#include "mapreplay/registry.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/wait.h>
#include <unistd.h>
#define MAPREPLAY_HAVE_FORK 1
#else
#define MAPREPLAY_HAVE_FORK 0
#endif

#if __has_include(<malloc.h>)
#include <malloc.h>
#endif

namespace mapreplay {

void BenchConfig::validate() const {
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (measured_iters < 1) throw ConfigError("measured iterations must be at least 1");
  if (!(iter_duration > 0)) throw ConfigError("iteration duration must be positive");
  if (!(confidence > 0 && confidence < 1)) throw ConfigError("confidence must lie in (0, 1)");
  if (resamples < 1) throw ConfigError("resamples must be at least 1");
}

std::string Variant::label() const {
  std::string s = impl + "/DIC-" + std::to_string(dic);
  if (load_factor_milli) s += "/LF-" + std::to_string(*load_factor_milli);
  return s;
}

namespace {

using Samples = std::vector<std::vector<double>>;

struct Active {
  std::size_t index;  // into the report's variant list
  const ImplInfo* impl;
  ReplayOptions timing;
};

// Keeps freed heap memory in the process instead of returning it to the
// kernel, so a replay's cost does not depend on whether the previous one
// happened to trim the heap. Runs inherit this across fork.
void steady_allocator() {
#if defined(M_TRIM_THRESHOLD) && defined(M_MMAP_THRESHOLD)
  ::mallopt(M_TRIM_THRESHOLD, 1 << 30);
  ::mallopt(M_MMAP_THRESHOLD, 1 << 30);
#endif
}

// Replays are batched so one timed region lasts at least this long.
constexpr double kMinTimedRegionNs = 1e6;

std::uint32_t calibrate(const ReplaySession& s, const Active& a) {
  ReplayOptions o = a.timing;
  o.repetitions = 1;
  const double ns = std::max<double>(1.0, static_cast<double>(a.impl->run(s, o).elapsed.count()));
  return static_cast<std::uint32_t>(std::clamp(std::ceil(kMinTimedRegionNs / ns), 1.0, 1e6));
}

// One iteration of every variant. Variants take turns in short batches until
// each has spent the iteration's wall time, so slow drift in machine speed
// (frequency scaling, noisy neighbors) lands on all of them alike. Reports
// each variant's mean time per replay in milliseconds.
// Thread CPU time: the replay is single-threaded, and time spent preempted
// on a shared machine is noise, not cost.
double thread_cpu_ns() {
  timespec ts{};
  ::clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return static_cast<double>(ts.tv_sec) * 1e9 + static_cast<double>(ts.tv_nsec);
}

std::vector<double> round_ms(const ReplaySession& s, const std::vector<Active>& active, double duration_s,
                             bool reversed) {
  const std::size_t n = active.size();
  const double budget_ns = duration_s * 1e9;
  std::vector<double> spent_ns(n, 0), total_ns(n, 0);
  std::vector<std::uint64_t> replays(n, 0);
  bool pending = true;
  while (pending) {
    pending = false;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t v = reversed ? n - 1 - k : k;
      if (replays[v] > 0 && spent_ns[v] >= budget_ns) continue;
      const auto t0 = std::chrono::steady_clock::now();
      const double c0 = thread_cpu_ns();
      const ReplayResult r = active[v].impl->run(s, active[v].timing);
      total_ns[v] += thread_cpu_ns() - c0;
      spent_ns[v] += std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - t0).count();
      replays[v] += r.repetitions;
      pending |= spent_ns[v] < budget_ns;
    }
  }
  std::vector<double> out(n);
  for (std::size_t v = 0; v < n; ++v) out[v] = total_ns[v] / static_cast<double>(replays[v]) / 1e6;
  return out;
}

Samples one_run(const ReplaySession& s, const std::vector<Active>& active, const BenchConfig& c) {
  Samples out(active.size());
  const std::uint32_t iters = c.warmup_iters + c.measured_iters;
  for (std::uint32_t it = 0; it < iters; ++it) {
    // Alternate the order so no variant always leads a round.
    const std::vector<double> ms = round_ms(s, active, c.iter_duration, it % 2 == 1);
    if (it < c.warmup_iters) continue;
    for (std::size_t v = 0; v < active.size(); ++v) out[v].push_back(ms[v]);
  }
  return out;
}

#if MAPREPLAY_HAVE_FORK

bool write_all(int fd, const void* data, std::size_t n) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::write(fd, p, n);
    if (w <= 0) return false;
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

// Runs one_run in a child process and ships the samples back over a pipe.
// Returns nullopt when no child could be started.
std::optional<Samples> forked_run(const ReplaySession& s, const std::vector<Active>& active,
                                  const BenchConfig& c) {
  int fds[2];
  if (::pipe(fds) != 0) return std::nullopt;
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    return std::nullopt;
  }
  if (pid == 0) {
    ::close(fds[0]);
    int status = 0;
    try {
      const Samples out = one_run(s, active, c);
      for (const auto& v : out) {
        const std::uint64_t n = v.size();
        if (!write_all(fds[1], &n, sizeof n) || !write_all(fds[1], v.data(), n * sizeof(double))) {
          status = 2;
          break;
        }
      }
    } catch (...) {
      status = 3;
    }
    ::close(fds[1]);
    ::_exit(status);
  }

  ::close(fds[1]);
  std::string bytes;
  char buf[4096];
  for (;;) {
    const ssize_t r = ::read(fds[0], buf, sizeof buf);
    if (r <= 0) break;
    bytes.append(buf, static_cast<std::size_t>(r));
  }
  ::close(fds[0]);
  int status = 0;
  ::waitpid(pid, &status, 0);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw Error("bench", "benchmark run process failed (status " + std::to_string(status) + ")");
  }

  Samples out(active.size());
  std::size_t pos = 0;
  for (auto& v : out) {
    std::uint64_t n = 0;
    if (bytes.size() - pos < sizeof n) throw Error("bench", "short result from benchmark run process");
    std::memcpy(&n, bytes.data() + pos, sizeof n);
    pos += sizeof n;
    if ((bytes.size() - pos) / sizeof(double) < n) throw Error("bench", "short result from benchmark run process");
    v.resize(n);
    std::memcpy(v.data(), bytes.data() + pos, n * sizeof(double));
    pos += n * sizeof(double);
  }
  return out;
}

#endif

}  // namespace

BenchReport run_bench(const ReplaySession& session, const std::vector<Variant>& variants,
                      const BenchConfig& config, std::string name) {
  config.validate();
  if (variants.empty()) throw ConfigError("no variants to benchmark");

  std::vector<VariantResult> results(variants.size());
  std::vector<Active> active;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    results[i].variant = variants[i];
    const ImplInfo& impl = find_impl(variants[i].impl);
    ReplayOptions check;
    check.mode = ReplayMode::Validating;
    check.override = variants[i].override();
    try {
      impl.run(session, check);
    } catch (const Error& e) {
      results[i].excluded = true;
      results[i].excluded_reason = e.what();
      continue;
    }
    ReplayOptions timing;
    timing.override = variants[i].override();
    active.push_back({i, &impl, timing});
  }

  std::vector<std::string> warnings;
  steady_allocator();
  for (Active& a : active) a.timing.repetitions = calibrate(session, a);

  if (!active.empty()) {
    bool warned = false;
    for (std::uint32_t run = 0; run < config.runs; ++run) {
      std::optional<Samples> samples;
#if MAPREPLAY_HAVE_FORK
      if (config.fork_runs) samples = forked_run(session, active, config);
#endif
      if (!samples) {
        if (config.fork_runs && !warned) {
          warnings.push_back("could not start run processes; runs are in-process repetitions");
          warned = true;
        }
        samples = one_run(session, active, config);
      }
      for (std::size_t k = 0; k < active.size(); ++k) {
        auto& dst = results[active[k].index].samples_ms;
        dst.insert(dst.end(), (*samples)[k].begin(), (*samples)[k].end());
      }
    }
  }

  BenchReport report = summarize(std::move(name), config, std::move(results));
  report.warnings.insert(report.warnings.begin(), warnings.begin(), warnings.end());
  return report;
}

}  // namespace mapreplay
