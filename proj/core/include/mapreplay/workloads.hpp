#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mapreplay/raw_trace.hpp"

namespace mapreplay {

/// Names a built-in workload and its inputs. The same spec always yields a
/// byte-identical raw trace (for multi-threaded churn, per map).
struct WorkloadSpec {
  std::string name;
  std::uint64_t seed = 1;
  /// Size multiplier; 0 produces an empty trace.
  std::uint32_t scale = 1;
  /// Workload-specific integers; unknown keys are rejected.
  std::map<std::string, std::int64_t> params;
};

struct WorkloadInfo {
  std::string name;
  std::string description;
  /// Parameters with their defaults.
  std::map<std::string, std::int64_t> defaults;
};

/// wordfreq, dedupe, churn, scan, populate-copy, mixed and random.
const std::vector<WorkloadInfo>& workloads();
/// Throws ConfigError listing the alternatives for an unknown name.
const WorkloadInfo& find_workload(std::string_view name);

/// Runs the workload against traced maps and returns the closed session's
/// raw stream.
RawTrace generate(const WorkloadSpec& spec);

/// The same workload against plain reference maps, untraced.
struct DirectRun {
  /// Final state digest of each map, indexed by construction order.
  std::vector<std::uint64_t> digests;
};
DirectRun run_direct(const WorkloadSpec& spec);

/// The embedded word corpus.
std::string_view corpus_text() noexcept;
/// Lower-case words of the corpus in order; a token ending a sentence keeps
/// no punctuation.
const std::vector<std::string>& corpus_tokens();

/// A key whose hash deliberately leaves the low bits zero even after
/// spreading, so every key lands in a handful of buckets.
struct CollidingKey {
  std::int64_t id = 0;

  std::int32_t hash_code() const noexcept {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(id) << 20);
  }
  friend bool operator==(const CollidingKey& a, const CollidingKey& b) noexcept { return a.id == b.id; }
};

}  // namespace mapreplay

template <>
struct std::hash<mapreplay::CollidingKey> {
  std::size_t operator()(const mapreplay::CollidingKey& k) const noexcept {
    return std::hash<std::int64_t>{}(k.id);
  }
};
