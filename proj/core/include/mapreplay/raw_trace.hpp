#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <vector>

#include "mapreplay/ref_map.hpp"

namespace mapreplay {

/// Event kinds of the raw stream. Poison, FreeMap and FreeIter never come
/// from application operations: Poison marks a map whose key hashes proved
/// unstable, and the Free kinds are inserted by post-processing.
enum class RawOpKind : std::uint8_t {
  Create = 0,
  CreateCopy = 1,
  Get = 2,
  Put = 3,
  Remove = 4,
  ContainsKey = 5,
  Clear = 6,
  IterNew = 7,
  IterAdvance = 8,
  IterRemove = 9,
  Poison = 10,
  FreeMap = 11,
  FreeIter = 12,
};
inline constexpr std::uint8_t kRawOpKindCount = 13;

const char* to_string(RawOpKind kind) noexcept;

constexpr bool is_keyed(RawOpKind k) noexcept {
  return k == RawOpKind::Get || k == RawOpKind::Put || k == RawOpKind::Remove ||
         k == RawOpKind::ContainsKey;
}
constexpr bool is_iterator_op(RawOpKind k) noexcept {
  return k == RawOpKind::IterNew || k == RawOpKind::IterAdvance ||
         k == RawOpKind::IterRemove || k == RawOpKind::FreeIter;
}
/// Operations that change the mapping set of their map.
constexpr bool is_mutating(RawOpKind k) noexcept {
  return k == RawOpKind::Put || k == RawOpKind::Remove || k == RawOpKind::Clear ||
         k == RawOpKind::IterRemove;
}

inline constexpr std::uint64_t kAbsent = ~std::uint64_t{0};
inline constexpr std::uint8_t kNoOutcome = 0xff;

/// One recorded map operation.
///
/// Field use by kind:
///   Create        map_id, aux = pack_create(...)
///   CreateCopy    map_id (new map), aux = source map_id
///   Get/Put/Remove/ContainsKey
///                 map_id, key_id, hash, outcome (1 = key was present)
///   Clear, Poison, FreeMap
///                 map_id
///   IterNew       map_id, key_id = iterator id, aux = View
///   IterAdvance   map_id, key_id = iterator id, aux = step count
///   IterRemove    map_id, key_id = iterator id, aux = removed key id,
///                 hash = removed key's hash
///   FreeIter      map_id, key_id = iterator id
/// Unused fields hold all-ones. `hash` is meaningful only for keyed kinds and
/// IterRemove.
struct RawEvent {
  std::uint64_t thread_id = 0;
  RawOpKind op = RawOpKind::Create;
  std::uint64_t map_id = kAbsent;
  std::uint64_t key_id = kAbsent;
  std::int32_t hash = -1;
  std::uint64_t aux = kAbsent;
  std::uint8_t outcome = kNoOutcome;

  std::uint64_t iter_id() const noexcept { return key_id; }

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

/// Constructor arguments as the application passed them. The explicit flags
/// distinguish `new Map()` from `new Map(16)` so replay can substitute a
/// different default capacity without touching explicit requests.
struct CreateArgs {
  std::uint32_t capacity = kDefaultInitialCapacity;
  std::uint32_t load_factor_milli = kDefaultLoadFactorMilli;
  bool capacity_explicit = false;
  bool load_factor_explicit = false;
  bool spread_hashes = true;

  MapConfig config() const { return {capacity, load_factor_milli, spread_hashes}; }
  friend bool operator==(const CreateArgs&, const CreateArgs&) = default;
};

/// bits 0-31 capacity, 32-47 load factor, 48 capacity_explicit,
/// 49 load_factor_explicit, 50 hash spreading disabled.
std::uint64_t pack_create(const CreateArgs& args) noexcept;
CreateArgs unpack_create(std::uint64_t aux) noexcept;

/// Convenience constructors used by the tracer and by tests.
namespace raw {
RawEvent create(std::uint64_t map_id, const CreateArgs& args = {});
RawEvent create_copy(std::uint64_t map_id, std::uint64_t source_map_id);
RawEvent keyed(RawOpKind op, std::uint64_t map_id, std::uint64_t key_id, std::int32_t hash,
               bool hit);
RawEvent clear(std::uint64_t map_id);
RawEvent iter_new(std::uint64_t map_id, std::uint64_t iter_id, View view = View::Entries);
RawEvent iter_advance(std::uint64_t map_id, std::uint64_t iter_id, std::uint64_t steps = 1);
RawEvent iter_remove(std::uint64_t map_id, std::uint64_t iter_id, std::uint64_t removed_key_id,
                     std::int32_t removed_hash);
RawEvent poison(std::uint64_t map_id);
RawEvent free_map(std::uint64_t map_id);
RawEvent free_iter(std::uint64_t map_id, std::uint64_t iter_id);
}  // namespace raw

struct RawTrace {
  std::vector<RawEvent> events;

  friend bool operator==(const RawTrace&, const RawTrace&) = default;
};

// Raw trace file, little-endian:
//   "MRT1" | u32 version = 1 | u64 event count | count x 40-byte records
// Each record: u64 thread_id, u8 op, u64 map_id, u64 key_id, i32 hash,
// u64 aux, u8 outcome, 2 pad bytes. The count is written last, when the file
// is closed; until then it holds all-ones and readers reject the file.
inline constexpr std::size_t kRawHeaderSize = 16;
inline constexpr std::size_t kRawRecordSize = 40;
inline constexpr std::uint32_t kRawFormatVersion = 1;

/// Streams events to a file and writes the end-marker on finish(). A writer
/// destroyed without finish() leaves a file that fails to load.
class RawTraceWriter {
 public:
  explicit RawTraceWriter(const std::filesystem::path& path);
  RawTraceWriter(const RawTraceWriter&) = delete;
  RawTraceWriter& operator=(const RawTraceWriter&) = delete;

  void append(const RawEvent& event);
  void append(std::span<const RawEvent> events);
  void finish();

  std::uint64_t count() const noexcept { return count_; }

 private:
  void check(const char* what);

  std::filesystem::path path_;
  std::ofstream out_;
  std::uint64_t count_ = 0;
  bool finished_ = false;
};

void write_raw_trace(const std::filesystem::path& path, const RawTrace& trace);
std::vector<std::byte> encode_raw_trace(const RawTrace& trace);

RawTrace read_raw_trace(const std::filesystem::path& path);
RawTrace decode_raw_trace(std::span<const std::byte> bytes);

}  // namespace mapreplay
