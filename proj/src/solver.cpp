#include "rmc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "rmc/errors.hpp"
#include "rmc/rng.hpp"

namespace rmc {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void validate_config(const ObservedMatrix& obs, const SolverConfig& cfg) {
  if (cfg.r0 == 0 || cfg.r0 > std::min(obs.rows(), obs.cols()))
    throw std::invalid_argument("solver: r0 must be in [1, min(m, n)]");
  if (cfg.tol <= 0.0) throw std::invalid_argument("solver: tol must be positive");
  if (cfg.kappa <= 1.0) throw std::invalid_argument("solver: kappa must exceed 1");
  if (cfg.stagnation_ratio <= 0.0 || cfg.stagnation_ratio >= 1.0)
    throw std::invalid_argument("solver: stagnation_ratio must lie in (0, 1)");
  if (cfg.stagnation_window == 0) throw std::invalid_argument("solver: stagnation_window >= 1");
  if (cfg.rank_check_period == 0) throw std::invalid_argument("solver: rank_check_period >= 1");
  if (cfg.min_row_obs_factor < 1.0)
    throw std::invalid_argument("solver: min_row_obs_factor must be >= 1");
  if (obs.nnz() <= cfg.s)
    throw std::invalid_argument("solver: budget consumes all observations (|Omega| <= s)");
}

// id list for one system's equations: row i's entries (ForX) or column j's
// entries (ForY), minus the view's exclusions, optionally subsampled.
void gather_ids(const MaskedView& view, SolveSide side, std::size_t i,
                std::vector<std::size_t>& ids, std::size_t subsample,
                std::uint64_t subsample_seed) {
  const ObservedMatrix& base = view.base();
  ids.clear();
  if (side == SolveSide::ForX) {
    auto [lo, hi] = base.row_range(i);
    for (std::size_t id = lo; id < hi; ++id)
      if (!view.excluded(id)) ids.push_back(id);
  } else {
    for (std::size_t id : base.col_ids(i))
      if (!view.excluded(id)) ids.push_back(id);
  }
  if (subsample > 0 && ids.size() > subsample) {
    // deterministic per-row draw; partial Fisher-Yates, then restore order
    Rng rng(split_seed(subsample_seed, i));
    for (std::size_t t = 0; t < subsample; ++t)
      std::swap(ids[t], ids[t + rng.index(ids.size() - t)]);
    ids.resize(subsample);
    std::sort(ids.begin(), ids.end());
  }
}

// Solves one row/column system against the basis; writes the result row.
void solve_one(const MaskedView& view, const Matrix& basis, SolveSide side, std::size_t i,
               Matrix& out, std::vector<std::size_t>& ids, std::size_t* thin,
               std::size_t* empty, const SolverConfig& cfg, std::uint64_t subsample_seed) {
  const ObservedMatrix& base = view.base();
  const std::size_t r = basis.cols();
  gather_ids(view, side, i, ids, cfg.subsample_per_row, subsample_seed);

  if (ids.empty()) {
    ++*empty;
    for (std::size_t c = 0; c < r; ++c) out(i, c) = 0.0;
    return;
  }
  if (static_cast<double>(ids.size()) < cfg.min_row_obs_factor * static_cast<double>(r))
    ++*thin;  // lsq_solve falls back to the minimum-norm solution on deficiency

  Matrix coeff(ids.size(), r);
  std::vector<double> rhs(ids.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const Entry& e = base.entry(ids[t]);
    std::size_t other = (side == SolveSide::ForX) ? e.col : e.row;
    for (std::size_t c = 0; c < r; ++c) coeff(t, c) = basis(other, c);
    rhs[t] = e.value;
  }
  std::vector<double> sol = lsq_solve(coeff, rhs);
  for (std::size_t c = 0; c < r; ++c) out(i, c) = sol[c];
}

}  // namespace

Matrix solve_rows_reference(const MaskedView& view, const Matrix& basis, SolveSide side,
                            const SolverConfig& cfg, RowSolveStats* stats,
                            std::uint64_t subsample_seed) {
  const ObservedMatrix& base = view.base();
  const std::size_t count = (side == SolveSide::ForX) ? base.rows() : base.cols();
  if ((side == SolveSide::ForX && basis.rows() != base.cols()) ||
      (side == SolveSide::ForY && basis.rows() != base.rows()))
    throw std::invalid_argument("solve_rows: basis dimension mismatch");

  Matrix out(count, basis.cols());
  std::vector<std::size_t> ids;
  std::size_t thin = 0, empty = 0;
  for (std::size_t i = 0; i < count; ++i)
    solve_one(view, basis, side, i, out, ids, &thin, &empty, cfg, subsample_seed);
  if (stats) {
    stats->thin_rows += thin;
    stats->empty_rows += empty;
  }
  return out;
}

Matrix solve_rows(const MaskedView& view, const Matrix& basis, SolveSide side,
                  const SolverConfig& cfg, RowSolveStats* stats,
                  std::uint64_t subsample_seed) {
  const ObservedMatrix& base = view.base();
  const std::size_t count = (side == SolveSide::ForX) ? base.rows() : base.cols();
  if ((side == SolveSide::ForX && basis.rows() != base.cols()) ||
      (side == SolveSide::ForY && basis.rows() != base.rows()))
    throw std::invalid_argument("solve_rows: basis dimension mismatch");

  Matrix out(count, basis.cols());
  std::size_t thin = 0, empty = 0;
  const long n = static_cast<long>(count);
#pragma omp parallel num_threads(cfg.threads) if (cfg.threads > 1)
  {
    std::vector<std::size_t> ids;  // per-thread scratch
    std::size_t local_thin = 0, local_empty = 0;
#pragma omp for schedule(dynamic, 8) nowait
    for (long i = 0; i < n; ++i)
      solve_one(view, basis, side, static_cast<std::size_t>(i), out, ids, &local_thin,
                &local_empty, cfg, subsample_seed);
#pragma omp critical
    {
      thin += local_thin;
      empty += local_empty;
    }
  }
  if (stats) {
    stats->thin_rows += thin;
    stats->empty_rows += empty;
  }
  return out;
}

ReorthResult reorthonormalize_and_truncate(const Matrix& xt, double kappa) {
  QrResult qr = qr_thin(xt);
  SvdResult svd = svd_small(qr.r);
  if (svd.sigma[0] <= 0.0)
    throw NumericalError("reorthonormalize_and_truncate: model collapsed (all singular values zero)", 0);
  std::size_t keep = 0;
  for (double s : svd.sigma)
    if (kappa * s >= svd.sigma[0]) ++keep;
  Matrix rotated = matmul(qr.q, svd.u);
  ReorthResult out;
  out.basis = (keep == rotated.cols()) ? std::move(rotated) : left_columns(rotated, keep);
  out.svd = std::move(svd);
  out.rank = keep;
  return out;
}

namespace {

SparseCorrection apply_threshold(const ObservedMatrix& obs, std::span<const double> residual,
                                 const SolverConfig& cfg) {
  if (cfg.strategy == OutlierStrategy::RowColIntersect)
    return threshold_rowcol(obs, residual, cfg.rowcol_k, cfg.s);
  return threshold_global(obs, residual, cfg.s);
}

// tau over Omega \ supp(correction), accumulated in entry-id order; the
// same values and order a masked project_residual pass would use.
double tau_from_residual(std::span<const double> values,
                         const std::vector<std::size_t>& excluded_ids) {
  double s = 0.0;
  std::size_t next = 0;
  for (std::size_t id = 0; id < values.size(); ++id) {
    if (next < excluded_ids.size() && excluded_ids[next] == id) {
      ++next;
      continue;
    }
    s += values[id] * values[id];
  }
  return std::sqrt(s);
}

std::size_t count_new_support(const std::vector<std::size_t>& prev,
                              const std::vector<std::size_t>& cur) {
  std::size_t fresh = 0, p = 0;
  for (std::size_t id : cur) {
    while (p < prev.size() && prev[p] < id) ++p;
    if (p >= prev.size() || prev[p] != id) ++fresh;
  }
  return fresh;
}

}  // namespace

SolverState initialize(const ObservedMatrix& obs, const SolverConfig& cfg) {
  validate_config(obs, cfg);
  auto t0 = Clock::now();

  // correction seeded from the raw observed values
  std::vector<double> raw(obs.nnz());
  for (std::size_t id = 0; id < obs.nnz(); ++id) raw[id] = obs.entry(id).value;
  SparseCorrection s0 = apply_threshold(obs, raw, cfg);

  const double p_prime = static_cast<double>(obs.nnz() - cfg.s) /
                         (static_cast<double>(obs.rows()) * static_cast<double>(obs.cols()));
  MaskedView clean(obs, s0.entry_ids);

  // (M - S_0) / p' as an operator; S_0 zeroes its own support
  const double scale = 1.0 / p_prime;
  auto apply = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t id = 0; id < obs.nnz(); ++id) {
      if (clean.excluded(id)) continue;
      const Entry& e = obs.entry(id);
      out[e.row] += scale * e.value * in[e.col];
    }
  };
  auto apply_t = [&](std::span<const double> in, std::span<double> out) {
    for (std::size_t id = 0; id < obs.nnz(); ++id) {
      if (clean.excluded(id)) continue;
      const Entry& e = obs.entry(id);
      out[e.col] += scale * e.value * in[e.row];
    }
  };
  TruncatedSvd init = truncated_svd(obs.rows(), obs.cols(), apply, apply_t, cfg.r0, cfg.seed);

  SolverState state;
  state.iter = 1;
  state.factors = FactorTriple{std::move(init.u), std::move(init.sigma), std::move(init.v)};

  ProjectedResidual res = project_residual(MaskedView(obs), state.factors.x,
                                           state.factors.sigma, state.factors.y, cfg.threads);
  state.correction = apply_threshold(obs, res.values, cfg);
  state.tau = tau_from_residual(res.values, state.correction.entry_ids);
  state.rank_history.push_back({1, cfg.r0});
  state.trace.push_back(
      {1, state.tau, cfg.r0, state.correction.entry_ids.size(), ms_since(t0)});
  return state;
}

void step(SolverState& state, const ObservedMatrix& obs, const SolverConfig& cfg,
          bool force_rank_check) {
  auto t0 = Clock::now();
  const std::size_t t = state.iter + 1;
  const bool check_rank = force_rank_check || (t % cfg.rank_check_period == 0);
  const std::size_t rank_before = state.factors.rank();

  MaskedView view(obs, state.correction.entry_ids);
  RowSolveStats stats;

  // X side
  Matrix xt = solve_rows(view, state.factors.y, SolveSide::ForX, cfg, &stats,
                         split_seed(cfg.seed, 2 * t));
  Matrix xhat;
  if (check_rank) {
    ReorthResult rr = reorthonormalize_and_truncate(xt, cfg.kappa);
    xhat = std::move(rr.basis);
  } else {
    xhat = qr_thin(xt).q;
  }

  // Y side; the SVD of the triangular factor doubles as the assembly step
  Matrix yt = solve_rows(view, xhat, SolveSide::ForY, cfg, &stats,
                         split_seed(cfg.seed, 2 * t + 1));
  QrResult yqr = qr_thin(yt);
  SvdResult ysvd = svd_small(yqr.r);
  if (ysvd.sigma[0] <= 0.0) throw NumericalError("step: model collapsed", t);

  std::size_t rank = xhat.cols();
  if (check_rank) {
    std::size_t keep = 0;
    for (double s : ysvd.sigma)
      if (cfg.kappa * s >= ysvd.sigma[0]) ++keep;
    rank = keep;
  }

  // x_t sigma_t y_t^T == xhat ytilde^T by construction: the right singular
  // vectors of the triangular factor rotate xhat, the left ones rotate yhat
  Matrix xr = matmul(xhat, ysvd.v);
  Matrix yr = matmul(yqr.q, ysvd.u);
  state.factors.x = (rank == xr.cols()) ? std::move(xr) : left_columns(xr, rank);
  state.factors.y = (rank == yr.cols()) ? std::move(yr) : left_columns(yr, rank);
  state.factors.sigma.assign(ysvd.sigma.begin(), ysvd.sigma.begin() + rank);

  ProjectedResidual res = project_residual(MaskedView(obs), state.factors.x,
                                           state.factors.sigma, state.factors.y, cfg.threads);
  SparseCorrection next = apply_threshold(obs, res.values, cfg);
  std::size_t dropped = count_new_support(state.correction.entry_ids, next.entry_ids);
  state.correction = std::move(next);
  state.tau = tau_from_residual(res.values, state.correction.entry_ids);

  state.iter = t;
  state.thin_row_warnings += stats.thin_rows;
  state.empty_row_warnings += stats.empty_rows;
  if (rank != rank_before) state.rank_history.push_back({t, rank});
  state.trace.push_back({t, state.tau, rank, dropped, ms_since(t0)});
}

RunResult run(const ObservedMatrix& obs, const SolverConfig& cfg) {
  RunResult result;
  result.state = initialize(obs, cfg);
  SolverState& state = result.state;

  std::vector<double> tau_hist{state.tau};
  std::size_t last_remedy = 1;
  bool pending_force = false;

  while (state.tau > cfg.tol && state.iter < cfg.max_iters) {
    bool force = pending_force;
    pending_force = false;
    std::size_t rank_before = state.factors.rank();
    step(state, obs, cfg, force);
    tau_hist.push_back(state.tau);

    if (force) {
      if (state.factors.rank() == rank_before) state.drop_events.push_back(state.iter);
      last_remedy = state.iter;
    }

    const std::size_t w = cfg.stagnation_window;
    if (state.tau > cfg.tol && tau_hist.size() > w && state.iter - last_remedy >= w) {
      double old = tau_hist[tau_hist.size() - 1 - w];
      if (old > 0.0 && state.tau / old > cfg.stagnation_ratio) pending_force = true;
    }
  }
  result.outcome = (state.tau <= cfg.tol) ? SolveOutcome::Converged : SolveOutcome::MaxIters;
  return result;
}

}  // namespace rmc
