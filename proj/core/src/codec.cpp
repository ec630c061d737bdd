#include <zlib.h>

#include <array>
#include <fstream>
#include <iterator>
#include <string>

#include "byte_io.hpp"
#include "mapreplay/error.hpp"
#include "mapreplay/postproc.hpp"
#include "tally.hpp"

namespace mapreplay {

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'P', 'T', '1'};
constexpr std::size_t kHeaderSize = 8;
constexpr std::size_t kOpSize = 12;

std::vector<std::byte> deflate_bytes(const std::vector<std::byte>& in) {
  uLongf bound = compressBound(static_cast<uLong>(in.size()));
  std::vector<std::byte> out(bound);
  const int rc = compress2(reinterpret_cast<Bytef*>(out.data()), &bound,
                           reinterpret_cast<const Bytef*>(in.data()), static_cast<uLong>(in.size()),
                           Z_BEST_SPEED);
  if (rc != Z_OK) throw Error("process", "zlib compression failed (" + std::to_string(rc) + ")");
  out.resize(bound);
  return out;
}

std::vector<std::byte> inflate_bytes(std::span<const std::byte> in) {
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error("decode", "zlib initialization failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<std::byte*>(in.data()));
  zs.avail_in = static_cast<uInt>(in.size());

  std::vector<std::byte> out;
  std::array<std::byte, 1 << 16> chunk;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = reinterpret_cast<Bytef*>(chunk.data());
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      const std::uint64_t at = kHeaderSize + zs.total_in;
      const std::string msg = zs.msg ? zs.msg : "stream ended early";
      inflateEnd(&zs);
      throw FormatError("decode", at, "corrupt compressed payload: " + msg);
    }
    out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
  }
  const std::uint64_t consumed = zs.total_in;
  inflateEnd(&zs);
  if (consumed != in.size()) {
    throw FormatError("decode", kHeaderSize + consumed, "trailing bytes after compressed payload");
  }
  return out;
}

}  // namespace

std::vector<std::byte> to_bytes(const ProcessedTrace& trace) {
  std::vector<std::byte> payload;
  payload.reserve(4 + trace.key_hashes.size() * 4 + 16 + trace.ops.size() * kOpSize);
  detail::ByteWriter p(payload);
  p.put(static_cast<std::uint32_t>(trace.key_hashes.size()));
  for (std::int32_t h : trace.key_hashes) p.put(h);
  p.put(trace.max_map_slots);
  p.put(trace.max_iter_slots);
  p.put(static_cast<std::uint64_t>(trace.ops.size()));
  for (const OpTriple& op : trace.ops) {
    p.put(op.code);
    p.put(op.a);
    p.put(op.b);
  }

  std::vector<std::byte> out;
  detail::ByteWriter w(out);
  w.put_bytes(kMagic.data(), kMagic.size());
  w.put(kProcessedFormatVersion);
  const std::vector<std::byte> packed = deflate_bytes(payload);
  w.put_bytes(packed.data(), packed.size());
  return out;
}

ProcessedTrace decode(std::span<const std::byte> bytes) {
  detail::ByteReader h(bytes, "decode");
  std::array<char, 4> magic{};
  for (char& c : magic) c = static_cast<char>(h.get<std::uint8_t>("magic"));
  if (magic != kMagic) throw FormatError("decode", 0, "not a processed trace (bad magic)");
  const auto version = h.get<std::uint32_t>("version");
  if (version != kProcessedFormatVersion) {
    throw FormatError("decode", 4, "unsupported processed trace version " + std::to_string(version));
  }

  const std::vector<std::byte> payload = inflate_bytes(bytes.subspan(kHeaderSize));
  // Offsets past the header refer to the decompressed payload.
  detail::ByteReader r(payload, "decode");
  ProcessedTrace t;
  const auto keys = r.get<std::uint32_t>("key count");
  r.need(std::size_t{keys} * 4, "key hashes");
  t.key_hashes.reserve(keys);
  for (std::uint32_t i = 0; i < keys; ++i) t.key_hashes.push_back(r.get<std::int32_t>("key hash"));
  t.max_map_slots = r.get<std::uint32_t>("max_map_slots");
  t.max_iter_slots = r.get<std::uint32_t>("max_iter_slots");
  const auto ops = r.get<std::uint64_t>("op count");
  if (ops > r.remaining() / kOpSize) {
    throw FormatError("decode", r.offset(),
                      "payload declares " + std::to_string(ops) + " ops but holds only " +
                          std::to_string(r.remaining() / kOpSize));
  }
  t.ops.reserve(ops);
  for (std::uint64_t i = 0; i < ops; ++i) {
    const std::uint64_t at = r.offset();
    OpTriple op;
    op.code = r.get<std::int32_t>("opcode");
    op.a = r.get<std::int32_t>("operand");
    op.b = r.get<std::int32_t>("operand");
    if (static_cast<std::uint32_t>(op.code & 0xff) >= kOpcodeCount) {
      throw FormatError("decode", at, "unknown opcode " + std::to_string(op.code & 0xff) +
                                          " in decompressed payload");
    }
    t.ops.push_back(op);
  }
  if (r.remaining() != 0) {
    throw FormatError("decode", r.offset(), "trailing bytes in decompressed payload");
  }
  t.counts = detail::tally(t);
  t.counts.bytes = bytes.size();
  return t;
}

void write_processed_trace(const std::filesystem::path& path, const ProcessedTrace& trace) {
  const std::vector<std::byte> bytes = to_bytes(trace);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("process", "cannot write processed trace " + path.string());
}

ProcessedTrace read_processed_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("decode", "cannot open processed trace " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(std::as_bytes(std::span<const char>(data)));
}

}  // namespace mapreplay
