#pragma once

#include <cstddef>
#include <vector>

#include "rmc/matrix.hpp"

namespace rmc {

// Current rank-r model of the low-rank component: x diag(sigma) y^T with
// orthonormal x (m x r) and y (n x r), sigma nonincreasing and nonnegative.
struct FactorTriple {
  Matrix x;
  std::vector<double> sigma;
  Matrix y;

  std::size_t rank() const { return sigma.size(); }
};

}  // namespace rmc
