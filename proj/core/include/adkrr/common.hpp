#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adkrr {

/// Matrix/vector shapes or point dimensions disagree.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument lies outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A factorization or solve produced non-finite results.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV cell, schema document).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure, carries the offending path in the message.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside one simulated machine, tagged with its index.
class MachineError : public std::runtime_error {
 public:
  MachineError(int machine, const std::string& what)
      : std::runtime_error("machine " + std::to_string(machine) + ": " + what),
        machine_(machine) {}
  int machine() const { return machine_; }

 private:
  int machine_;
};

namespace rng {

/// SplitMix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive an independent stream seed from a master seed and a stream index.
/// Used so per-machine and per-trial work is reproducible regardless of
/// execution order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix(master ^ mix(stream + 1));
}

/// Uniform double in [0, 1) using the top 53 bits of the engine output.
/// Fixed mapping (not std::uniform_real_distribution) so streams are
/// identical across standard library implementations.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard normal deviate via Box-Muller; one engine draw pair per value,
/// cosine branch only, so the stream layout is fully determined.
inline double gaussian(std::mt19937_64& eng) {
  const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(eng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

/// Uniform integer in [0, bound) by 128-bit multiply-shift. Avoids
/// std::uniform_int_distribution, whose draw sequence varies across standard
/// libraries.
inline std::uint64_t bounded(std::mt19937_64& eng, std::uint64_t bound) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(eng()) * bound) >> 64);
}

/// Fisher-Yates permutation of 0..n-1. std::shuffle leaves the algorithm to
/// the library, so it is avoided for the same reason as above.
template <typename Index>
std::vector<Index> shuffled_indices(Index n, std::uint64_t seed) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 eng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[bounded(eng, i)]);
  }
  return idx;
}

}  // namespace rng
}  // namespace adkrr
