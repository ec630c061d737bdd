#pragma once

// Helpers shared by the unit and acceptance suites.

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "mapreplay/postproc.hpp"
#include "mapreplay/replay.hpp"
#include "mapreplay/workloads.hpp"

namespace mapreplay::test {

/// A scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> n{0};
    path = std::filesystem::temp_directory_path() /
           ("mapreplay-test-" + std::to_string(::getpid()) + "-" + std::to_string(n++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline WorkloadSpec spec(std::string name, std::uint64_t seed = 1,
                         std::map<std::string, std::int64_t> params = {}) {
  return WorkloadSpec{std::move(name), seed, 1, std::move(params)};
}

inline ReplaySession session_for(const WorkloadSpec& s, ProcessOptions o = {}) {
  return setup(process(generate(s), o));
}

inline ReplayResult run_mode(const ReplaySession& s, ReplayMode mode, ConfigOverride o = {}) {
  ReplayOptions opt;
  opt.mode = mode;
  opt.override = o;
  return replay<RefMapAdapter>(s, opt);
}

/// Digests of a validating replay, re-indexed by map ordinal.
inline std::vector<std::uint64_t> digests_by_ordinal(const ReplayResult& r) {
  std::vector<std::uint64_t> out;
  for (const DigestPoint& d : r.digests) {
    if (out.size() <= d.map_ordinal) out.resize(d.map_ordinal + 1, 0);
    out[d.map_ordinal] = d.digest;
  }
  return out;
}

inline std::vector<std::string> workload_names() {
  std::vector<std::string> out;
  for (const WorkloadInfo& w : workloads()) out.push_back(w.name);
  return out;
}

}  // namespace mapreplay::test
