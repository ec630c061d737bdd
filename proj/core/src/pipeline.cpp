#include "mapreplay/pipeline.hpp"

#include "mapreplay/error.hpp"
#include "mapreplay/registry.hpp"

namespace mapreplay {

PipelineResult pipeline(const WorkloadSpec& spec, const std::vector<Variant>& variants,
                        const BenchConfig& config, const PipelineOptions& options) {
  config.validate();
  if (variants.empty()) throw ConfigError("no variants to benchmark");
  for (const Variant& v : variants) find_impl(v.impl);

  PipelineResult out;
  const RawTrace raw = generate(spec);
  ProcessedTrace processed = process(raw, options.process, &out.sanitize);
  out.characterization = stats(processed);
  const ReplaySession session = setup(std::move(processed));

  for (const Variant& v : variants) {
    ReplayOptions check;
    check.mode = ReplayMode::Validating;
    check.override = v.override();
    find_impl(v.impl).run(session, check);
  }

  if (options.counting_prepass) {
    for (const Variant& v : variants) {
      if (v.impl != "refmap") continue;
      ReplayOptions count;
      count.mode = ReplayMode::Counting;
      count.override = v.override();
      out.counts.push_back({v, find_impl(v.impl).run(session, count).counters});
    }
  }

  out.report = run_bench(session, variants, config, spec.name);
  return out;
}

}  // namespace mapreplay
