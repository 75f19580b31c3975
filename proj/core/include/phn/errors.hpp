#pragma once

#include <stdexcept>
#include <string>

namespace phn {

// Operation inputs do not conform (tensor shapes, parameter layouts, simplex
// membership, ...). Message names the offending operation and shapes.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Bad value passed to a numeric routine (non-finite gradients, alpha <= 0, ...).
class ValueError : public std::runtime_error {
 public:
  explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid experiment configuration. Carries the key and, when parsed from a
// file, the line it came from.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, std::string key = {}, int line = 0)
      : std::runtime_error(what), key_(std::move(key)), line_(line) {}
  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

// Filesystem / data ingestion failures with location info where available.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace phn
