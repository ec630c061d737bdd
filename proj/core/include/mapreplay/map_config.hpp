#pragma once

#include <cstdint>

namespace mapreplay {

inline constexpr std::uint32_t kDefaultInitialCapacity = 16;
inline constexpr std::uint32_t kDefaultLoadFactorMilli = 750;
inline constexpr std::uint32_t kMaxCapacity = 1u << 30;

/// Construction parameters of a chained hash map. The load factor is kept in
/// thousandths so that threshold arithmetic is exact on every platform.
struct MapConfig {
  std::uint32_t initial_capacity = kDefaultInitialCapacity;
  std::uint32_t load_factor_milli = kDefaultLoadFactorMilli;
  bool spread_hashes = true;

  /// Throws ConfigError when capacity is zero or the load factor lies
  /// outside [1, 1000].
  void validate() const;

  friend bool operator==(const MapConfig&, const MapConfig&) = default;
};

/// Smallest power of two >= requested, capped at kMaxCapacity. Zero is an
/// invalid configuration and throws ConfigError.
std::uint32_t normalize_capacity(std::uint64_t requested);

/// h ^ (h >>> 16): folds the high half of the hash into the bits the table
/// mask keeps.
constexpr std::int32_t spread_hash(std::int32_t h) noexcept {
  const auto u = static_cast<std::uint32_t>(h);
  return static_cast<std::int32_t>(u ^ (u >> 16));
}

/// `capacity` must be a power of two.
constexpr std::uint32_t bucket_index(std::int32_t hash, std::uint32_t capacity,
                                     bool spread = true) noexcept {
  const std::int32_t h = spread ? spread_hash(hash) : hash;
  return static_cast<std::uint32_t>(h) & (capacity - 1);
}

constexpr std::uint32_t threshold(std::uint32_t capacity,
                                  std::uint32_t load_factor_milli) noexcept {
  return static_cast<std::uint32_t>(std::uint64_t{capacity} * load_factor_milli / 1000);
}

}  // namespace mapreplay
