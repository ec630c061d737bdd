#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace mapreplay {

// Every failure surfaced by the library derives from Error and names the
// pipeline stage it came from, so the CLI can report "<stage>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string stage, const std::string& message)
      : std::runtime_error(message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class IoError : public Error {
 public:
  IoError(std::string stage, const std::string& message)
      : Error(std::move(stage), message) {}
};

// Malformed bytes in a raw or processed trace file.
class FormatError : public Error {
 public:
  FormatError(std::string stage, std::uint64_t offset, const std::string& message)
      : Error(std::move(stage),
              message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// A raw trace whose end-marker was never written.
class TruncatedTraceError : public Error {
 public:
  explicit TruncatedTraceError(const std::string& message)
      : Error("sanitize", message) {}
};

// An opcode that references a dead or out-of-range slot.
class TraceIntegrityError : public Error {
 public:
  TraceIntegrityError(std::size_t op_index, const std::string& message,
                      std::string stage = "replay")
      : Error(std::move(stage), "op " + std::to_string(op_index) + ": " + message),
        op_index_(op_index) {}

  std::size_t op_index() const noexcept { return op_index_; }

 private:
  std::size_t op_index_;
};

// Replay produced an outcome different from the recorded one.
class FidelityError : public Error {
 public:
  FidelityError(std::size_t op_index, const std::string& message)
      : Error("validate", "op " + std::to_string(op_index) + ": " + message),
        op_index_(op_index) {}

  std::size_t op_index() const noexcept { return op_index_; }

 private:
  std::size_t op_index_;
};

class BudgetError : public Error {
 public:
  BudgetError(std::uint64_t required_bytes, std::uint64_t budget_bytes,
              const std::string& detail)
      : Error("setup", "trace needs " + std::to_string(required_bytes) +
                           " bytes but the memory budget is " +
                           std::to_string(budget_bytes) + " (" + detail + ")"),
        required_(required_bytes) {}

  std::uint64_t required_bytes() const noexcept { return required_; }

 private:
  std::uint64_t required_;
};

// A statistic that is undefined for its input (e.g. zero variance).
class StatsError : public Error {
 public:
  explicit StatsError(const std::string& message) : Error("bench", message) {}
};

}  // namespace mapreplay
