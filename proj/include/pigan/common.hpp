#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace pigan {

/// A point of the physical domain, (x1, x2).
struct Coord2 {
  double x1 = 0.0;
  double x2 = 0.0;

  friend bool operator==(const Coord2&, const Coord2&) = default;
};

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent, order-free seeds.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for the `index`-th draw of logical stream `stream` under a run seed.
/// Streams never depend on evaluation order, so results are identical for
/// any thread count and across resumed runs.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

/// Invalid configuration or argument detected before any compute.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: singular system, non-finite loss, failed eigensolve.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File-system or format problem.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pigan
