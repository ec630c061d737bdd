#include "mapreplay/registry.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace mapreplay {

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::string, ImplInfo, std::less<>> impls;

  Registry() {
    add({"refmap", "reference chained hash map", make_runner<RefMapAdapter>("refmap")});
    add({"std", "std::unordered_map", make_runner<StdMapAdapter>("std")});
    add({"linear-probe", "open addressing with linear probing",
         make_runner<LinearProbeAdapter>("linear-probe")});
  }

  void add(ImplInfo info) {
    std::string key = info.name;
    impls.insert_or_assign(std::move(key), std::move(info));
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_impl(ImplInfo info) {
  if (info.name.empty() || !info.run) throw ConfigError("an implementation needs a name and a runner");
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  r.add(std::move(info));
}

const ImplInfo& find_impl(std::string_view name) {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  auto it = r.impls.find(name);
  if (it != r.impls.end()) return it->second;
  std::string known;
  for (const auto& [n, _] : r.impls) known += (known.empty() ? "" : ", ") + n;
  throw ConfigError("unknown implementation '" + std::string(name) + "' (known: " + known + ")");
}

std::vector<std::string> impl_names() {
  Registry& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> names;
  for (const auto& [n, _] : r.impls) names.push_back(n);
  return names;
}

}  // namespace mapreplay
