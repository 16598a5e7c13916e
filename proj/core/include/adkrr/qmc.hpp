#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "adkrr/common.hpp"

namespace adkrr {

enum class CenterKind { Sobol, Halton, Random };

/// The shared center set spanning the basis every machine expands in.
/// Sobol and Halton points are a pure function of (n, d); Random points of
/// (n, d, seed).
struct CenterSet {
  CenterKind kind = CenterKind::Sobol;
  Eigen::MatrixXd points;  // n x d, all coordinates in [0, 1)
  std::uint64_t seed = 0;  // meaningful for Random only
};

/// Highest dimension covered by the bundled direction-number table.
Eigen::Index sobol_max_dimension();

/// Generate n points in [0,1)^d.
///  - Sobol: Gray-code construction from the bundled Joe-Kuo direction
///    numbers, with the initial all-zeros point skipped.
///  - Halton: radical inverse in the first d primes, unscrambled, starting
///    at index 1.
///  - Random: i.i.d. uniform draws from a seeded mt19937_64 (53-bit
///    mantissa mapping), filled point by point.
CenterSet generate_centers(CenterKind kind, Eigen::Index n, Eigen::Index d,
                           std::optional<std::uint64_t> seed = std::nullopt);

/// How many centers a run uses.
struct CenterCountPolicy {
  bool adaptive = true;
  Eigen::Index fixed_n = 0;

  static CenterCountPolicy fixed(Eigen::Index n) { return {false, n}; }
  static CenterCountPolicy per_machine_average() { return {true, 0}; }
};

/// Fixed policy returns its n; adaptive returns floor(total_n / machines),
/// clamped to at least 1.
Eigen::Index center_count(const CenterCountPolicy& policy,
                          Eigen::Index total_n, Eigen::Index machines);

}  // namespace adkrr
