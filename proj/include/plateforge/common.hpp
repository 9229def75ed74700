// Shared types and error hierarchy for the plateforge library.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace plateforge {

// Spatial grids are (Ny x Nx), row index = y, column index = x.
// Row-major storage so that flattening gives index j = iy * Nx + ix.
using Grid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Complex = std::complex<double>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid parameter or precondition violation (maps to CLI exit 3).
struct ValidationError : Error {
  using Error::Error;
};

// Bad configuration file or option combination (maps to CLI exit 2).
struct ConfigError : Error {
  using Error::Error;
};

// Array dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Malformed or truncated file.
struct FormatError : Error {
  using Error::Error;
};

// Numerical blow-up during time integration (maps to CLI exit 4).
struct InstabilityError : Error {
  long step_index = -1;
  InstabilityError(const std::string& msg, long step) : Error(msg), step_index(step) {}
};

// Dynamical regime outside what the closed-form solution supports.
struct RegimeError : Error {
  using Error::Error;
};

// Metric undefined for the given inputs (e.g. zero-norm ground truth).
struct MetricError : Error {
  using Error::Error;
};

inline Eigen::Map<const Eigen::VectorXd> flatten(const Grid& g) {
  return {g.data(), g.size()};
}

inline Eigen::Map<Eigen::VectorXd> flatten(Grid& g) {
  return {g.data(), g.size()};
}

// FNV-1a, used for config hashes and file integrity summaries.
inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

}  // namespace plateforge
