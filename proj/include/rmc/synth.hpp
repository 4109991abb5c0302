#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rmc/matrix.hpp"
#include "rmc/obsmat.hpp"
#include "rmc/outlier.hpp"

namespace rmc {

struct InstanceSpec {
  std::size_t d_rows = 0;
  std::size_t d_cols = 0;
  std::size_t r = 0;
  double p = 0.0;    // observation probability, (0, 1]
  double rho = 0.0;  // corruption probability, [0, 1)
  std::uint64_t seed = 0;
  // enforce exactly floor(rho * d_cols) corruptions per row instead of the
  // Bernoulli model (theory-facing variant)
  bool strict_per_row = false;
  // materialize the dense low-rank matrix only up to this many entries
  std::size_t dense_cap = 10'000'000;
};

struct GroundTruth {
  Matrix u_star;                    // m x r, orthonormal
  std::vector<double> sigma_star;   // length r, positive
  Matrix v_star;                    // n x r, orthonormal
  std::optional<Matrix> l_star;     // dense low-rank matrix, desk scale only
  SparseCorrection s_star;          // planted corruption
  // above the dense cap only corruptions landing on observed entries are
  // stored (the rest are invisible to any solver anyway)
  bool s_star_restricted_to_omega = false;
  std::size_t rows = 0, cols = 0, rank = 0;
  double p = 0.0, rho = 0.0;
  std::uint64_t seed = 0;
};

// Instance under the Gaussian-factor data model: L = A B^T with A, B entries
// N(0, 1/d), d = max(m, n); corruption support Bernoulli(rho) with values
// uniform on [-r/2d, r/2d]; observations Bernoulli(p). Factor, corruption and
// mask draws come from independent substreams of the seed, so changing rho
// leaves the mask untouched.
std::pair<ObservedMatrix, GroundTruth> generate(const InstanceSpec& spec);

// (m/r) * max_i ||row i of u||^2 for an orthonormal u.
double incoherence(const Matrix& u);

}  // namespace rmc
