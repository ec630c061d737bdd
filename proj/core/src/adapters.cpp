#include "mapreplay/adapters.hpp"

namespace mapreplay {

StdMapAdapter::StdMapAdapter(const MapConfig& config) {
  config.validate();
  map_.max_load_factor(static_cast<float>(config.load_factor_milli) / 1000.0f);
  map_.rehash(normalize_capacity(config.initial_capacity));
}

}  // namespace mapreplay
