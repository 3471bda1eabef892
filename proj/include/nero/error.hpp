#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace nero {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class TreeError : public Error {
 public:
  using Error::Error;
};

class DemandError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class OracleLimitError : public Error {
 public:
  using Error::Error;
};

class TimeLimitError : public Error {
 public:
  using Error::Error;
};

// Checked 64-bit arithmetic. Costs and flows never wrap silently.
inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) throw OverflowError("integer overflow in addition");
  return r;
}

inline std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) throw OverflowError("integer overflow in subtraction");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) throw OverflowError("integer overflow in multiplication");
  return r;
}

}  // namespace nero
