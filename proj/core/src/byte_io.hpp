#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mapreplay/error.hpp"

namespace mapreplay::detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::vector<std::byte>& out) : out_(out) {}

  template <class T>
  void put(T value) {
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<std::byte>((u >> (8 * i)) & 0xffu));
    }
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::byte*>(data);
    out_.insert(out_.end(), p, p + n);
  }

 private:
  std::vector<std::byte>& out_;
};

/// Bounds-checked little-endian reader. `base_offset` is added to reported
/// offsets so errors point into the enclosing file.
class ByteReader {
 public:
  ByteReader(std::span<const std::byte> data, std::string stage, std::uint64_t base_offset = 0)
      : data_(data), stage_(std::move(stage)), base_(base_offset) {}

  template <class T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(std::to_integer<unsigned>(data_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }

  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
      throw FormatError(stage_, base_ + pos_, std::string("unexpected end of data reading ") + what);
    }
  }

  std::size_t position() const noexcept { return pos_; }
  std::uint64_t offset() const noexcept { return base_ + pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

 private:
  std::span<const std::byte> data_;
  std::string stage_;
  std::uint64_t base_;
  std::size_t pos_ = 0;
};

}  // namespace mapreplay::detail
