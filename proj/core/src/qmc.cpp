#include "adkrr/qmc.hpp"

#include <cstdlib>
#include <mutex>
#include <random>
#include <vector>

namespace adkrr {

namespace detail {
const char* embedded_direction_table();  // defined in the generated TU
}

namespace {

// Parsed form of the published direction-number table: one row per dimension
// >= 2 holding the primitive-polynomial degree, its coefficient word, and the
// initial direction numbers.
struct DirectionTable {
  struct Row {
    std::uint32_t degree = 0;
    std::uint32_t coeff = 0;
    std::uint32_t m_offset = 0;
  };
  std::vector<Row> rows;        // rows[i] describes dimension i + 2
  std::vector<std::uint32_t> m  // flattened initial direction numbers
      ;
};

DirectionTable parse_direction_table(const char* text) {
  DirectionTable table;
  table.rows.reserve(21200);
  table.m.reserve(21200 * 14);
  const char* p = text;
  // Skip the header line ("d s a m_i").
  while (*p != '\0' && *p != '\n') ++p;
  while (*p != '\0') {
    char* end = nullptr;
    const long dim = std::strtol(p, &end, 10);
    if (end == p) break;  // trailing whitespace
    p = end;
    const long degree = std::strtol(p, &end, 10);
    p = end;
    const long coeff = std::strtol(p, &end, 10);
    p = end;
    DirectionTable::Row row;
    row.degree = static_cast<std::uint32_t>(degree);
    row.coeff = static_cast<std::uint32_t>(coeff);
    row.m_offset = static_cast<std::uint32_t>(table.m.size());
    for (long i = 0; i < degree; ++i) {
      const long mi = std::strtol(p, &end, 10);
      p = end;
      table.m.push_back(static_cast<std::uint32_t>(mi));
    }
    if (dim != static_cast<long>(table.rows.size()) + 2) {
      throw ParseError("direction-number table rows out of order at dimension " +
                       std::to_string(dim));
    }
    table.rows.push_back(row);
  }
  return table;
}

const DirectionTable& direction_table() {
  static const DirectionTable table =
      parse_direction_table(detail::embedded_direction_table());
  return table;
}

constexpr int kSobolBits = 32;

// Direction integers for one dimension, scaled so bit k of a point index
// maps to v[k] / 2^32.
std::vector<std::uint64_t> direction_integers(Eigen::Index dim_index) {
  std::vector<std::uint64_t> v(kSobolBits + 1, 0);
  if (dim_index == 0) {
    for (int k = 1; k <= kSobolBits; ++k) {
      v[k] = 1ULL << (kSobolBits - k);
    }
    return v;
  }
  const DirectionTable& table = direction_table();
  const auto& row = table.rows[static_cast<std::size_t>(dim_index - 1)];
  const int s = static_cast<int>(row.degree);
  for (int k = 1; k <= s && k <= kSobolBits; ++k) {
    v[k] = static_cast<std::uint64_t>(table.m[row.m_offset + k - 1])
           << (kSobolBits - k);
  }
  for (int k = s + 1; k <= kSobolBits; ++k) {
    std::uint64_t value = v[k - s] ^ (v[k - s] >> s);
    for (int i = 1; i < s; ++i) {
      if ((row.coeff >> (s - 1 - i)) & 1U) value ^= v[k - i];
    }
    v[k] = value;
  }
  return v;
}

// Position (1-based) of the lowest zero bit of i.
int lowest_zero_bit(std::uint64_t i) {
  int c = 1;
  while (i & 1ULL) {
    i >>= 1;
    ++c;
  }
  return c;
}

Eigen::MatrixXd sobol_points(Eigen::Index n, Eigen::Index d) {
  constexpr double scale = 0x1.0p-32;
  Eigen::MatrixXd points(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::vector<std::uint64_t> v = direction_integers(j);
    std::uint64_t x = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // Gray-code step; emitting from internal index 1 skips the zero point.
      x ^= v[static_cast<std::size_t>(lowest_zero_bit(static_cast<std::uint64_t>(i)))];
      points(i, j) = static_cast<double>(x) * scale;
    }
  }
  return points;
}

std::vector<std::uint32_t> first_primes(Eigen::Index count) {
  std::vector<std::uint32_t> primes;
  primes.reserve(static_cast<std::size_t>(count));
  std::uint32_t candidate = 2;
  while (primes.size() < static_cast<std::size_t>(count)) {
    bool prime = true;
    for (std::uint32_t q : primes) {
      if (q * q > candidate) break;
      if (candidate % q == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(candidate);
    ++candidate;
  }
  return primes;
}

double radical_inverse(std::uint64_t index, std::uint32_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double factor = inv;
  double value = 0.0;
  while (index) {
    value += static_cast<double>(index % base) * factor;
    index /= base;
    factor *= inv;
  }
  return value;
}

Eigen::MatrixXd halton_points(Eigen::Index n, Eigen::Index d) {
  const std::vector<std::uint32_t> bases = first_primes(d);
  Eigen::MatrixXd points(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      points(i, j) = radical_inverse(static_cast<std::uint64_t>(i) + 1,
                                     bases[static_cast<std::size_t>(j)]);
    }
  }
  return points;
}

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d,
                              std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  Eigen::MatrixXd points(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      points(i, j) = rng::uniform01(eng);
    }
  }
  return points;
}

}  // namespace

Eigen::Index sobol_max_dimension() {
  return static_cast<Eigen::Index>(direction_table().rows.size()) + 1;
}

CenterSet generate_centers(CenterKind kind, Eigen::Index n, Eigen::Index d,
                           std::optional<std::uint64_t> seed) {
  if (n < 1 || d < 1) {
    throw DomainError("generate_centers: n and d must be at least 1");
  }
  CenterSet set;
  set.kind = kind;
  switch (kind) {
    case CenterKind::Sobol:
      if (d > sobol_max_dimension()) {
        throw DomainError("generate_centers: dimension " + std::to_string(d) +
                          " exceeds the bundled direction-number table (max " +
                          std::to_string(sobol_max_dimension()) + ")");
      }
      set.points = sobol_points(n, d);
      break;
    case CenterKind::Halton:
      set.points = halton_points(n, d);
      break;
    case CenterKind::Random:
      if (!seed.has_value()) {
        throw DomainError("generate_centers: Random centers require a seed");
      }
      set.seed = *seed;
      set.points = random_points(n, d, *seed);
      break;
  }
  return set;
}

Eigen::Index center_count(const CenterCountPolicy& policy, Eigen::Index total_n,
                          Eigen::Index machines) {
  if (machines < 1 || total_n < 1) {
    throw DomainError("center_count: need total_n >= 1 and machines >= 1");
  }
  if (!policy.adaptive) {
    if (policy.fixed_n < 1) {
      throw DomainError("center_count: fixed center count must be positive");
    }
    return policy.fixed_n;
  }
  return std::max<Eigen::Index>(1, total_n / machines);
}

}  // namespace adkrr
