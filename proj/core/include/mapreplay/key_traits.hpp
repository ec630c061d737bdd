#pragma once

#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>

namespace mapreplay {

/// Opaque value payload. Maps store and return it; nothing inspects it.
using ValueToken = std::uint64_t;

/// Customization point giving a key type the 32-bit hash code a map sees and
/// the equality it uses. Specializations below mirror the hash codes of the
/// usual managed-runtime key types (strings, boxed integers).
template <class K>
struct KeyTraits;

template <std::integral K>
struct KeyTraits<K> {
  static std::int32_t hash(K k) noexcept {
    if constexpr (sizeof(K) <= 4) {
      return static_cast<std::int32_t>(k);
    } else {
      const auto u = static_cast<std::uint64_t>(k);
      return static_cast<std::int32_t>(static_cast<std::uint32_t>(u ^ (u >> 32)));
    }
  }
  static bool equal(K a, K b) noexcept { return a == b; }
};

/// s[0]*31^(n-1) + ... + s[n-1] with 32-bit wraparound.
constexpr std::int32_t string_hash_code(std::string_view s) noexcept {
  std::uint32_t h = 0;
  for (unsigned char c : s) h = 31 * h + c;
  return static_cast<std::int32_t>(h);
}

template <>
struct KeyTraits<std::string> {
  static std::int32_t hash(const std::string& s) noexcept { return string_hash_code(s); }
  static bool equal(const std::string& a, const std::string& b) noexcept { return a == b; }
};

/// Any type with `hash_code()` and `operator==` works out of the box.
template <class K>
  requires requires(const K& k) {
    { k.hash_code() } -> std::convertible_to<std::int32_t>;
    { k == k } -> std::convertible_to<bool>;
  }
struct KeyTraits<K> {
  static std::int32_t hash(const K& k) noexcept(noexcept(k.hash_code())) {
    return static_cast<std::int32_t>(k.hash_code());
  }
  static bool equal(const K& a, const K& b) { return a == b; }
};

template <class K>
concept TraceableKey = requires(const K& k) {
  { KeyTraits<K>::hash(k) } -> std::convertible_to<std::int32_t>;
  { KeyTraits<K>::equal(k, k) } -> std::convertible_to<bool>;
};

}  // namespace mapreplay
