#include "rmc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "rmc/densela.hpp"
#include "rmc/rng.hpp"

namespace rmc {

namespace {

constexpr std::uint64_t kFactorStream = 0x66616374;  // "fact"
constexpr std::uint64_t kCorruptStream = 0x636f7272;  // "corr"
constexpr std::uint64_t kMaskStream = 0x6d61736b;     // "mask"

}  // namespace

std::pair<ObservedMatrix, GroundTruth> generate(const InstanceSpec& spec) {
  const std::size_t m = spec.d_rows, n = spec.d_cols, r = spec.r;
  if (m == 0 || n == 0) throw std::invalid_argument("generate: dimensions must be >= 1");
  if (r == 0 || r > std::min(m, n))
    throw std::invalid_argument("generate: rank must be in [1, min(m, n)]");
  if (spec.p <= 0.0 || spec.p > 1.0) throw std::invalid_argument("generate: p must be in (0, 1]");
  if (spec.rho < 0.0 || spec.rho >= 1.0)
    throw std::invalid_argument("generate: rho must be in [0, 1)");
  if (spec.p * static_cast<double>(n) < 2.0 * static_cast<double>(r))
    std::cerr << "generate: warning: expected observations per row (" << spec.p * n
              << ") is below 2r = " << 2 * r << "; row systems will be thin\n";

  const double d = static_cast<double>(std::max(m, n));
  const double sd = std::sqrt(1.0 / d);
  const double corr_halfwidth = static_cast<double>(r) / (2.0 * d);
  const bool desk_scale = m * n <= spec.dense_cap;

  Rng factor_rng(split_seed(spec.seed, kFactorStream));
  Matrix a(m, r), b(n, r);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < r; ++k) a(i, k) = sd * factor_rng.normal();
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t k = 0; k < r; ++k) b(j, k) = sd * factor_rng.normal();

  // observation mask, one row at a time
  Rng mask_rng(split_seed(spec.seed, kMaskStream));
  std::vector<std::vector<std::size_t>> omega_cols(m);
  std::size_t omega_count = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j)
      if (mask_rng.uniform() < spec.p) omega_cols[i].push_back(j);
    omega_count += omega_cols[i].size();
  }

  // corruption; stored fully at desk scale, restricted to the mask above it
  Rng corrupt_rng(split_seed(spec.seed, kCorruptStream));
  GroundTruth gt;
  gt.s_star.strategy_used = OutlierStrategy::GlobalTopS;
  gt.s_star_restricted_to_omega = !desk_scale;
  std::vector<std::vector<std::pair<std::size_t, double>>> s_on_omega(m);
  auto place_corruption = [&](std::size_t i, std::size_t j, double value) {
    const auto& cols = omega_cols[i];
    bool observed = std::binary_search(cols.begin(), cols.end(), j);
    if (desk_scale || observed) gt.s_star.entries.push_back({i, j, value});
    if (observed) s_on_omega[i].push_back({j, value});
  };
  if (spec.strict_per_row) {
    const std::size_t per_row = static_cast<std::size_t>(spec.rho * static_cast<double>(n));
    std::vector<std::size_t> cols_pool(n);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) cols_pool[j] = j;
      for (std::size_t t = 0; t < per_row; ++t)
        std::swap(cols_pool[t], cols_pool[t + corrupt_rng.index(n - t)]);
      std::sort(cols_pool.begin(), cols_pool.begin() + per_row);
      for (std::size_t t = 0; t < per_row; ++t)
        place_corruption(i, cols_pool[t], corrupt_rng.uniform(-corr_halfwidth, corr_halfwidth));
    }
  } else if (spec.rho > 0.0) {
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (corrupt_rng.uniform() < spec.rho)
          place_corruption(i, j, corrupt_rng.uniform(-corr_halfwidth, corr_halfwidth));
  }

  // observed entries of M = L + S
  std::vector<Entry> triplets;
  triplets.reserve(omega_count);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t snext = 0;
    const auto& srow = s_on_omega[i];
    for (std::size_t j : omega_cols[i]) {
      double v = 0.0;
      for (std::size_t k = 0; k < r; ++k) v += a(i, k) * b(j, k);
      while (snext < srow.size() && srow[snext].first < j) ++snext;
      if (snext < srow.size() && srow[snext].first == j) v += srow[snext].second;
      triplets.push_back({i, j, v});
    }
  }
  ObservedMatrix obs = ObservedMatrix::from_triplets(m, n, std::move(triplets));

  // economy SVD of A B^T without forming it: QR both factors, SVD the core
  QrResult qa = qr_thin(a);
  QrResult qb = qr_thin(b);
  SvdResult core = svd_small(matmul(qa.r, transposed(qb.r)));
  gt.u_star = matmul(qa.q, core.u);
  gt.v_star = matmul(qb.q, core.v);
  gt.sigma_star = std::move(core.sigma);

  if (desk_scale) {
    Matrix l(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double v = 0.0;
        for (std::size_t k = 0; k < r; ++k) v += a(i, k) * b(j, k);
        l(i, j) = v;
      }
    gt.l_star = std::move(l);
  }

  gt.rows = m;
  gt.cols = n;
  gt.rank = r;
  gt.p = spec.p;
  gt.rho = spec.rho;
  gt.seed = spec.seed;
  return {std::move(obs), std::move(gt)};
}

double incoherence(const Matrix& u) {
  if (orthonormality_defect(u) > 1e-8)
    throw std::invalid_argument("incoherence: input is not orthonormal");
  double worst = 0.0;
  for (std::size_t i = 0; i < u.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.cols(); ++k) s += u(i, k) * u(i, k);
    worst = std::max(worst, s);
  }
  return worst * static_cast<double>(u.rows()) / static_cast<double>(u.cols());
}

}  // namespace rmc
