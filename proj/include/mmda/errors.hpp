#pragma once

#include <stdexcept>
#include <string>

namespace mmda {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error { using Error::Error; };
struct ArgumentError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
// File parsing / corruption; message carries the offending path.
struct FormatError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace mmda
