#pragma once

#include <vector>

#include "mapreplay/bench.hpp"
#include "mapreplay/postproc.hpp"
#include "mapreplay/workloads.hpp"

namespace mapreplay {

struct PipelineOptions {
  ProcessOptions process;
  /// Counting replay of every refmap variant before timing.
  bool counting_prepass = false;
};

struct CountedVariant {
  Variant variant;
  OpCounters counters;
};

struct PipelineResult {
  SanitizeReport sanitize;
  Characterization characterization;
  std::vector<CountedVariant> counts;
  BenchReport report;
};

/// generate -> process -> validating replay of every variant -> bench.
/// Unlike run_bench, a variant failing validation aborts the whole pipeline
/// with its FidelityError (which names the first mismatched op).
PipelineResult pipeline(const WorkloadSpec& spec, const std::vector<Variant>& variants,
                        const BenchConfig& config, const PipelineOptions& options = {});

}  // namespace mapreplay
