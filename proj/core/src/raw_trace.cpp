#include "mapreplay/raw_trace.hpp"

#include <array>
#include <cstring>
#include <iterator>

#include "byte_io.hpp"
#include "mapreplay/error.hpp"

namespace mapreplay {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'R', 'T', '1'};

void encode_record(detail::ByteWriter& w, const RawEvent& e) {
  w.put(e.thread_id);
  w.put(static_cast<std::uint8_t>(e.op));
  w.put(e.map_id);
  w.put(e.key_id);
  w.put(e.hash);
  w.put(e.aux);
  w.put(e.outcome);
  w.put(std::uint16_t{0});
}

void encode_header(detail::ByteWriter& w, std::uint64_t count) {
  w.put_bytes(kMagic.data(), kMagic.size());
  w.put(kRawFormatVersion);
  w.put(count);
}

}  // namespace

const char* to_string(RawOpKind kind) noexcept {
  switch (kind) {
    case RawOpKind::Create: return "Create";
    case RawOpKind::CreateCopy: return "CreateCopy";
    case RawOpKind::Get: return "Get";
    case RawOpKind::Put: return "Put";
    case RawOpKind::Remove: return "Remove";
    case RawOpKind::ContainsKey: return "ContainsKey";
    case RawOpKind::Clear: return "Clear";
    case RawOpKind::IterNew: return "IterNew";
    case RawOpKind::IterAdvance: return "IterAdvance";
    case RawOpKind::IterRemove: return "IterRemove";
    case RawOpKind::Poison: return "Poison";
    case RawOpKind::FreeMap: return "FreeMap";
    case RawOpKind::FreeIter: return "FreeIter";
  }
  return "?";
}

std::uint64_t pack_create(const CreateArgs& a) noexcept {
  std::uint64_t aux = a.capacity;
  aux |= std::uint64_t{a.load_factor_milli & 0xffffu} << 32;
  if (a.capacity_explicit) aux |= std::uint64_t{1} << 48;
  if (a.load_factor_explicit) aux |= std::uint64_t{1} << 49;
  if (!a.spread_hashes) aux |= std::uint64_t{1} << 50;
  return aux;
}

CreateArgs unpack_create(std::uint64_t aux) noexcept {
  CreateArgs a;
  a.capacity = static_cast<std::uint32_t>(aux & 0xffffffffu);
  a.load_factor_milli = static_cast<std::uint32_t>((aux >> 32) & 0xffffu);
  a.capacity_explicit = (aux >> 48) & 1u;
  a.load_factor_explicit = (aux >> 49) & 1u;
  a.spread_hashes = !((aux >> 50) & 1u);
  return a;
}

namespace raw {

RawEvent create(std::uint64_t map_id, const CreateArgs& args) {
  RawEvent e;
  e.op = RawOpKind::Create;
  e.map_id = map_id;
  e.aux = pack_create(args);
  return e;
}

RawEvent create_copy(std::uint64_t map_id, std::uint64_t source_map_id) {
  RawEvent e;
  e.op = RawOpKind::CreateCopy;
  e.map_id = map_id;
  e.aux = source_map_id;
  return e;
}

RawEvent keyed(RawOpKind op, std::uint64_t map_id, std::uint64_t key_id, std::int32_t hash,
               bool hit) {
  RawEvent e;
  e.op = op;
  e.map_id = map_id;
  e.key_id = key_id;
  e.hash = hash;
  e.outcome = hit ? 1 : 0;
  return e;
}

RawEvent clear(std::uint64_t map_id) {
  RawEvent e;
  e.op = RawOpKind::Clear;
  e.map_id = map_id;
  return e;
}

RawEvent iter_new(std::uint64_t map_id, std::uint64_t iter_id, View view) {
  RawEvent e;
  e.op = RawOpKind::IterNew;
  e.map_id = map_id;
  e.key_id = iter_id;
  e.aux = static_cast<std::uint64_t>(view);
  return e;
}

RawEvent iter_advance(std::uint64_t map_id, std::uint64_t iter_id, std::uint64_t steps) {
  RawEvent e;
  e.op = RawOpKind::IterAdvance;
  e.map_id = map_id;
  e.key_id = iter_id;
  e.aux = steps;
  return e;
}

RawEvent iter_remove(std::uint64_t map_id, std::uint64_t iter_id, std::uint64_t removed_key_id,
                     std::int32_t removed_hash) {
  RawEvent e;
  e.op = RawOpKind::IterRemove;
  e.map_id = map_id;
  e.key_id = iter_id;
  e.aux = removed_key_id;
  e.hash = removed_hash;
  return e;
}

RawEvent poison(std::uint64_t map_id) {
  RawEvent e;
  e.op = RawOpKind::Poison;
  e.map_id = map_id;
  return e;
}

RawEvent free_map(std::uint64_t map_id) {
  RawEvent e;
  e.op = RawOpKind::FreeMap;
  e.map_id = map_id;
  return e;
}

RawEvent free_iter(std::uint64_t map_id, std::uint64_t iter_id) {
  RawEvent e;
  e.op = RawOpKind::FreeIter;
  e.map_id = map_id;
  e.key_id = iter_id;
  return e;
}

}  // namespace raw

RawTraceWriter::RawTraceWriter(const std::filesystem::path& path)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
  check("open");
  std::vector<std::byte> header;
  detail::ByteWriter w(header);
  encode_header(w, kAbsent);
  out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
  check("write header");
}

void RawTraceWriter::check(const char* what) {
  if (!out_) throw IoError("trace", std::string("raw trace ") + what + " failed: " + path_.string());
}

void RawTraceWriter::append(const RawEvent& event) { append(std::span<const RawEvent>(&event, 1)); }

void RawTraceWriter::append(std::span<const RawEvent> events) {
  if (finished_) throw IoError("trace", "append after finish: " + path_.string());
  std::vector<std::byte> buf;
  buf.reserve(events.size() * kRawRecordSize);
  detail::ByteWriter w(buf);
  for (const RawEvent& e : events) encode_record(w, e);
  out_.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  check("write");
  count_ += events.size();
}

void RawTraceWriter::finish() {
  if (finished_) return;
  out_.flush();
  check("flush");
  std::vector<std::byte> count_bytes;
  detail::ByteWriter w(count_bytes);
  w.put(count_);
  out_.seekp(8);
  out_.write(reinterpret_cast<const char*>(count_bytes.data()), 8);
  out_.flush();
  check("write end-marker");
  out_.close();
  check("close");
  finished_ = true;
}

std::vector<std::byte> encode_raw_trace(const RawTrace& trace) {
  std::vector<std::byte> out;
  out.reserve(kRawHeaderSize + trace.events.size() * kRawRecordSize);
  detail::ByteWriter w(out);
  encode_header(w, trace.events.size());
  for (const RawEvent& e : trace.events) encode_record(w, e);
  return out;
}

void write_raw_trace(const std::filesystem::path& path, const RawTrace& trace) {
  RawTraceWriter writer(path);
  writer.append(trace.events);
  writer.finish();
}

RawTrace decode_raw_trace(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes, "sanitize");
  std::array<char, 4> magic{};
  for (char& c : magic) c = static_cast<char>(r.get<std::uint8_t>("magic"));
  if (magic != kMagic) throw FormatError("sanitize", 0, "not a raw trace (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kRawFormatVersion) {
    throw FormatError("sanitize", 4, "unsupported raw trace version " + std::to_string(version));
  }
  const auto count = r.get<std::uint64_t>("event count");
  if (count == kAbsent) {
    throw TruncatedTraceError("raw trace has no end-marker; the recording session did not finish");
  }
  const std::uint64_t body = r.remaining();
  if (body / kRawRecordSize < count) {
    throw TruncatedTraceError("raw trace declares " + std::to_string(count) +
                              " events but holds only " + std::to_string(body / kRawRecordSize));
  }
  if (body != count * kRawRecordSize) {
    throw FormatError("sanitize", kRawHeaderSize + count * kRawRecordSize,
                      "trailing bytes after the last event record");
  }

  RawTrace trace;
  trace.events.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t at = r.offset();
    RawEvent e;
    e.thread_id = r.get<std::uint64_t>("thread_id");
    const auto op = r.get<std::uint8_t>("op");
    if (op >= kRawOpKindCount) {
      throw FormatError("sanitize", at + 8, "unknown event kind " + std::to_string(op));
    }
    e.op = static_cast<RawOpKind>(op);
    e.map_id = r.get<std::uint64_t>("map_id");
    e.key_id = r.get<std::uint64_t>("key_id");
    e.hash = r.get<std::int32_t>("hash");
    e.aux = r.get<std::uint64_t>("aux");
    e.outcome = r.get<std::uint8_t>("outcome");
    r.skip(2, "padding");
    trace.events.push_back(e);
  }
  return trace;
}

RawTrace read_raw_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("sanitize", "cannot open raw trace " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_raw_trace(std::as_bytes(std::span<const char>(data)));
}

}  // namespace mapreplay
