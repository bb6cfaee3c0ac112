#pragma once

#include <stdexcept>
#include <string>

namespace decnn {

// Error taxonomy shared across the library. The CLI maps these onto
// fixed exit codes (see tools/decnn_cli.cpp).
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeError : Error {
  using Error::Error;
};

struct ParamError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Malformed file contents (bad magic, truncation, inconsistent header).
struct FormatError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct GeometryError : Error {
  using Error::Error;
};

struct DataError : Error {
  using Error::Error;
};

struct StateError : Error {
  using Error::Error;
};

}  // namespace decnn
