#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "rmc/matrix.hpp"

namespace rmc {

struct QrResult {
  Matrix q;  // m x k, orthonormal columns
  Matrix r;  // k x k, upper triangular with nonnegative diagonal
};

struct SvdResult {
  Matrix u;                   // k x k orthogonal
  std::vector<double> sigma;  // nonincreasing, >= 0
  Matrix v;                   // k x k orthogonal
};

// Thin Householder QR of a tall matrix (rows >= cols). Rank deficiency shows
// up as small diagonal entries of r, never as an error.
QrResult qr_thin(const Matrix& a);

// Full SVD of a small square matrix by one-sided Jacobi (cap 30 sweeps).
SvdResult svd_small(const Matrix& a);

// argmin_x ||coeff x - rhs||_2. Pivoted Householder QR; rank is declared
// where a pivot drops below 1e-12 times the leading pivot, and the deficient
// part is completed with the minimum-norm solution.
std::vector<double> lsq_solve(const Matrix& coeff, std::span<const double> rhs);

struct TruncatedSvd {
  Matrix u;                   // m x r0, orthonormal columns
  std::vector<double> sigma;  // length r0, nonincreasing
  Matrix v;                   // n x r0, orthonormal columns
};

// y = A x (or A^T x); both callables must be pure.
using LinearOp = std::function<void(std::span<const double>, std::span<double>)>;

// Rank-r0 approximate SVD of an m x n operator: seeded Gaussian start block,
// fixed budget of subspace-iteration passes, re-orthonormalized after each
// pass, Rayleigh-Ritz extraction at the end. Deterministic per seed.
TruncatedSvd truncated_svd(std::size_t rows, std::size_t cols, const LinearOp& apply,
                           const LinearOp& apply_transpose, std::size_t r0,
                           std::uint64_t seed);

}  // namespace rmc
