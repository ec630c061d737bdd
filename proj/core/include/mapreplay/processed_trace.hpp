#pragma once

#include <cstdint>
#include <vector>

#include "mapreplay/raw_trace.hpp"
#include "mapreplay/ref_map.hpp"

namespace mapreplay {

enum class Opcode : std::uint8_t {
  Create = 0,       // a = map slot, b = requested capacity
  CreateCopy = 1,   // a = new map slot, b = source map slot
  Get = 2,          // a = map slot, b = key index
  Put = 3,          // a = map slot, b = key index
  Remove = 4,       // a = map slot, b = key index
  ContainsKey = 5,  // a = map slot, b = key index
  Clear = 6,        // a = map slot
  IterNew = 7,      // a = iterator slot, b = map slot
  IterAdvance = 8,  // a = iterator slot, b = step count
  IterRemove = 9,   // a = iterator slot, b = key index of the removed entry
  FreeMap = 10,     // a = map slot
  FreeIter = 11,    // a = iterator slot
};
inline constexpr std::uint8_t kOpcodeCount = 12;

const char* to_string(Opcode op) noexcept;

/// One fixed-arity instruction. The code word packs the opcode with its
/// flags:
///   bits 0-7   opcode
///   bit  8     recorded outcome (key was present)
///   bits 9-11  Create: capacity explicit, load factor explicit, no spreading
///   bits 9-10  IterNew: View
///   bits 16-30 Create: load factor in thousandths
struct OpTriple {
  std::int32_t code = 0;
  std::int32_t a = 0;
  std::int32_t b = 0;

  friend bool operator==(const OpTriple&, const OpTriple&) = default;
};

namespace opword {

constexpr Opcode opcode(std::int32_t code) noexcept { return static_cast<Opcode>(code & 0xff); }
constexpr bool outcome(std::int32_t code) noexcept { return (code >> 8) & 1; }

constexpr std::int32_t make(Opcode op, bool outcome = false) noexcept {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(op) | (outcome ? 1u << 8 : 0u));
}

constexpr std::int32_t make_create(const CreateArgs& a) noexcept {
  std::uint32_t w = static_cast<std::uint32_t>(Opcode::Create);
  if (a.capacity_explicit) w |= 1u << 9;
  if (a.load_factor_explicit) w |= 1u << 10;
  if (!a.spread_hashes) w |= 1u << 11;
  w |= (a.load_factor_milli & 0x7fffu) << 16;
  return static_cast<std::int32_t>(w);
}

constexpr CreateArgs create_args(const OpTriple& op) noexcept {
  const auto w = static_cast<std::uint32_t>(op.code);
  CreateArgs a;
  a.capacity = static_cast<std::uint32_t>(op.b);
  a.load_factor_milli = (w >> 16) & 0x7fffu;
  a.capacity_explicit = (w >> 9) & 1u;
  a.load_factor_explicit = (w >> 10) & 1u;
  a.spread_hashes = !((w >> 11) & 1u);
  return a;
}

constexpr std::int32_t make_iter_new(View view) noexcept {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(Opcode::IterNew) |
                                   (static_cast<std::uint32_t>(view) << 9));
}

constexpr View view(std::int32_t code) noexcept {
  return static_cast<View>((static_cast<std::uint32_t>(code) >> 9) & 3u);
}

}  // namespace opword

/// Operation-mix profile of a processed trace.
struct Characterization {
  std::uint64_t events = 0;
  std::uint64_t creates = 0;
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t iterates = 0;
  std::uint64_t bytes = 0;

  friend bool operator==(const Characterization&, const Characterization&) = default;
};

/// The replayable artifact: dense key hashes, slot bounds and the opcode
/// stream. Equality is structural and ignores `counts`.
struct ProcessedTrace {
  std::vector<std::int32_t> key_hashes;
  std::uint32_t max_map_slots = 0;
  std::uint32_t max_iter_slots = 0;
  std::vector<OpTriple> ops;
  Characterization counts;

  friend bool operator==(const ProcessedTrace& x, const ProcessedTrace& y) {
    return x.key_hashes == y.key_hashes && x.max_map_slots == y.max_map_slots &&
           x.max_iter_slots == y.max_iter_slots && x.ops == y.ops;
  }
};

}  // namespace mapreplay
