#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rmc/densela.hpp"
#include "rmc/factors.hpp"
#include "rmc/obsmat.hpp"
#include "rmc/outlier.hpp"

namespace rmc {

struct SolverConfig {
  std::size_t s = 0;                   // sparsity budget for the correction
  std::size_t r0 = 1;                  // initial (over)estimated rank
  double kappa = 1e6;                  // condition-number cap; drop sigma_j with kappa*sigma_j < sigma_1
  double tol = 1e-7;                   // termination threshold on tau
  std::size_t max_iters = 500;
  std::size_t stagnation_window = 5;   // w in the stagnation test tau_t / tau_{t-w}
  double stagnation_ratio = 0.9;       // stagnating when the window ratio exceeds this
  std::size_t rank_check_period = 5;   // rank-deficiency test runs every this many iterations
  double min_row_obs_factor = 2.0;     // rows with fewer than factor*r observations get flagged
  std::uint64_t seed = 0;
  std::size_t subsample_per_row = 0;   // 0 = off; else cap on observations used per row solve
  int threads = 1;                     // 1 = serial (bitwise reproducible)
  OutlierStrategy strategy = OutlierStrategy::GlobalTopS;
  std::size_t rowcol_k = 1;            // per-row/column depth for RowColIntersect
};

struct TraceRecord {
  std::size_t iter;
  double tau;
  std::size_t rank;
  std::size_t dropped;  // entries newly entering the correction support
  double wall_ms;
};

struct SolverState {
  std::size_t iter = 0;
  FactorTriple factors;
  SparseCorrection correction;
  double tau = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> rank_history;  // (iter, rank) at changes
  std::vector<std::size_t> drop_events;  // stagnation remedies that had to fall back to
                                         // outlier recomputation (no rank deficiency found)
  std::vector<TraceRecord> trace;
  std::size_t thin_row_warnings = 0;   // rows/cols solved with fewer than factor*r observations
  std::size_t empty_row_warnings = 0;  // rows/cols with no effective observations at all
};

enum class SolveOutcome { Converged, MaxIters };

struct RunResult {
  SolveOutcome outcome = SolveOutcome::MaxIters;
  SolverState state;
};

enum class SolveSide { ForX, ForY };

struct RowSolveStats {
  std::size_t thin_rows = 0;
  std::size_t empty_rows = 0;
};

// One least-squares solve per row (ForX) or per column (ForY) of M against
// the fixed basis; rows are independent. Straight serial loop, kept as the
// reference the parallel kernel is checked against.
Matrix solve_rows_reference(const MaskedView& view, const Matrix& basis, SolveSide side,
                            const SolverConfig& cfg, RowSolveStats* stats = nullptr,
                            std::uint64_t subsample_seed = 0);

// OpenMP version of the same kernel. Each row's system is assembled and
// solved in a fixed order, so the output matches the reference bitwise for
// any thread count.
Matrix solve_rows(const MaskedView& view, const Matrix& basis, SolveSide side,
                  const SolverConfig& cfg, RowSolveStats* stats = nullptr,
                  std::uint64_t subsample_seed = 0);

struct ReorthResult {
  Matrix basis;       // m x rank, orthonormal columns
  SvdResult svd;      // SVD of the triangular factor of the input
  std::size_t rank;   // columns kept after the condition-number cut
};

// QR of xt, SVD of its triangular factor, and removal of every direction
// with kappa * sigma_j < sigma_1.
ReorthResult reorthonormalize_and_truncate(const Matrix& xt, double kappa);

// Lines 1-5: initial correction from the raw observed values, scaled
// truncated SVD of the cleaned observations, then the first residual pass.
SolverState initialize(const ObservedMatrix& obs, const SolverConfig& cfg);

// One full sweep: X solve, re-orthonormalization, Y solve, assembly,
// residual, thresholding, tau. The rank-deficiency test runs only when
// force_rank_check is set or the iteration hits rank_check_period.
void step(SolverState& state, const ObservedMatrix& obs, const SolverConfig& cfg,
          bool force_rank_check = false);

// Full loop with stagnation handling: when tau stalls, a rank check is
// forced first; if that drops nothing, the outlier recomputation is the
// remedy and the event is recorded.
RunResult run(const ObservedMatrix& obs, const SolverConfig& cfg);

}  // namespace rmc
