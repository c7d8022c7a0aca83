#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace blpsim {

// Bad or inconsistent configuration. Always raised before cycle 0.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A simulator invariant was broken (illegal command/state pairing etc).
class ContractViolation : public std::logic_error {
 public:
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Malformed trace input; offset is the byte (binary) or line (csv) position.
class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

#define BLPSIM_REQUIRE(cond, msg)                                  \
  do {                                                             \
    if (!(cond)) throw ::blpsim::ContractViolation(std::string(msg)); \
  } while (0)

}  // namespace blpsim
