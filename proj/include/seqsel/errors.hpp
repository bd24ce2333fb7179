#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace seqsel {

/// Raised when an argument violates a documented precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for requests the library deliberately does not support (e.g. multi-subband ESSFM).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Configuration problem tied to a key and (when known) a 1-based line number.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": key '" + key + "': " + what
                                    : "key '" + key + "': " + what),
        key_(std::move(key)),
        reason_(what),
        line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string key_;
  std::string reason_;
  int line_;
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw ParameterError(msg);
}

}  // namespace seqsel
