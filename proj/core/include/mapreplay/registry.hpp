#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "mapreplay/replay.hpp"

namespace mapreplay {

using ReplayRunner = std::function<ReplayResult(const ReplaySession&, const ReplayOptions&)>;

/// A named map implementation the CLI and harness can bind with --impl.
struct ImplInfo {
  std::string name;
  std::string description;
  ReplayRunner run;
};

/// Runner that replays through `replay<M>` with M's own constructors.
template <MapAdapter M>
ReplayRunner make_runner(std::string name) {
  return [name = std::move(name)](const ReplaySession& s, const ReplayOptions& o) {
    return replay<M>(s, o, DirectFactory<M>{}, name);
  };
}

/// Adds `info`, replacing any implementation of the same name. The built-ins
/// are "refmap", "std" and "linear-probe".
void register_impl(ImplInfo info);
/// Throws ConfigError listing the known names when `name` is unknown.
const ImplInfo& find_impl(std::string_view name);
std::vector<std::string> impl_names();

}  // namespace mapreplay
