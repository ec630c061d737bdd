#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "mapreplay/processed_trace.hpp"
#include "mapreplay/raw_trace.hpp"

namespace mapreplay {

struct SanitizeReport {
  std::uint64_t events_in = 0;
  std::uint64_t events_out = 0;
  /// Events on maps whose creation was never recorded.
  std::uint64_t orphan_events = 0;
  /// Maps excluded because their key hashes moved, an iterator of theirs was
  /// never created, or they were copied from an excluded map.
  std::vector<std::uint64_t> excluded_maps;
};

/// Drops every event on a map that cannot be replayed: maps never created in
/// this trace, poisoned maps, and copies of either. Order is preserved.
RawTrace sanitize(const RawTrace& raw, SanitizeReport* report = nullptr);

/// Merges each maximal run of IterAdvance on one iterator into a single event
/// carrying the summed step count, placed where the run started. A run ends
/// at any mutating operation on the iterator's map.
RawTrace coalesce(const RawTrace& raw);

/// Appends FreeIter / FreeMap immediately after each object's last use
/// (iterators before maps when both end on one event). Free events already in
/// the input are discarded first.
RawTrace insert_free_events(const RawTrace& raw);

/// Renumbers maps and iterators into reusable dense slots and keys densely by
/// first use. Throws TraceIntegrityError on events that reference unknown or
/// freed objects.
ProcessedTrace encode(const RawTrace& prepared);

struct ProcessOptions {
  bool coalesce = true;
};

/// sanitize -> coalesce -> insert_free_events -> encode.
ProcessedTrace process(const RawTrace& raw, const ProcessOptions& options = {},
                       SanitizeReport* report = nullptr);

// Processed trace file, little-endian:
//   "MPT1" | u32 version = 1 | zlib(DEFLATE) stream of:
//     u32 key count | i32 hash x key count | u32 max_map_slots |
//     u32 max_iter_slots | u64 op count | op count x (i32 code, i32 a, i32 b)
inline constexpr std::uint32_t kProcessedFormatVersion = 1;

std::vector<std::byte> to_bytes(const ProcessedTrace& trace);
/// Throws FormatError naming the offending offset on corrupt input.
ProcessedTrace decode(std::span<const std::byte> bytes);

void write_processed_trace(const std::filesystem::path& path, const ProcessedTrace& trace);
ProcessedTrace read_processed_trace(const std::filesystem::path& path);

/// Opcode tallies plus the encoded size in bytes.
Characterization stats(const ProcessedTrace& trace);

}  // namespace mapreplay
