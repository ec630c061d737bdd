#include "mapreplay/ref_map.hpp"

#include <bit>
#include <string>

#include "mapreplay/error.hpp"

namespace mapreplay {

void MapConfig::validate() const {
  if (initial_capacity == 0) throw ConfigError("initial capacity must be at least 1");
  if (load_factor_milli < 1 || load_factor_milli > 1000) {
    throw ConfigError("load factor must be in [1, 1000] thousandths, got " +
                      std::to_string(load_factor_milli));
  }
}

std::uint32_t normalize_capacity(std::uint64_t requested) {
  if (requested == 0) throw ConfigError("requested capacity must be at least 1");
  if (requested >= kMaxCapacity) return kMaxCapacity;
  return static_cast<std::uint32_t>(std::bit_ceil(requested));
}

}  // namespace mapreplay
