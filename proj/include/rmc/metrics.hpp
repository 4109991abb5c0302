#pragma once

#include <cstddef>
#include <vector>

#include "rmc/factors.hpp"
#include "rmc/matrix.hpp"
#include "rmc/synth.hpp"

namespace rmc {

struct AngleReport {
  double theta_max = 0.0;      // largest canonical angle, radians in [0, pi/2]
  std::vector<double> sines;   // all sin(theta_j), nonincreasing
};

// Canonical angles between the column spans of two orthonormal bases of the
// same shape, via the singular values of u^T v (sines clamped to [0, 1]).
AngleReport sin_theta(const Matrix& u, const Matrix& v);

// ||a||_F^2 / ||a||_2^2
double stable_rank(const Matrix& a);

// Spectral norm: exact small-square SVD when possible, otherwise seeded
// power iteration (cap 1000, relative tolerance 1e-10). Deterministic.
double spectral_norm(const Matrix& a);

struct Theorem1Report {
  double cond_a_lhs = 0.0;  // ||(I - U U^T) S (I - V V^T)||
  double cond_a_rhs = 0.0;  // smallest positive singular value of the low-rank part
  double cond_b_lhs = 0.0;  // max(||S V||, ||S^T U||)
  double cond_b_rhs = 0.0;  // sigma_r(M) - sigma_{r+1}(M)
  double eta = 0.0;         // b_lhs / (b_rhs - b_lhs), +inf when the gap closes
  bool holds = false;
  double theta_u = 0.0;     // ||sin Theta|| between M's top left subspace and U
  double theta_v = 0.0;
  double top_r_error_fro = 0.0;  // ||M_r - L||_F for the best rank-r approximation of M
};

// Checks the sufficient conditions for the top-r SVD of M = L + S to recover
// L's subspaces. Needs the dense desk-scale ground truth.
Theorem1Report theorem1_check(const GroundTruth& gt);

struct RecoveryError {
  double rel_frobenius = 0.0;  // ||X S Y^T - L|| _F / ||L||_F, factor-form
  double max_norm = 0.0;       // entrywise max error; NaN above the dense cap
  AngleReport angle_x;
  AngleReport angle_y;
  bool rank_mismatch = false;  // angles then compare leading min-rank columns
};

RecoveryError recovery_error(const FactorTriple& factors, const GroundTruth& gt);

}  // namespace rmc
