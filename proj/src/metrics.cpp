#include "rmc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rmc/densela.hpp"
#include "rmc/errors.hpp"
#include "rmc/rng.hpp"

namespace rmc {

namespace {

constexpr std::size_t kJacobiCap = 400;  // largest square handed to svd_small

Matrix dense_from_correction(std::size_t m, std::size_t n, const SparseCorrection& s) {
  Matrix out(m, n);
  for (const Entry& e : s.entries) out(e.row, e.col) = e.value;
  return out;
}

}  // namespace

AngleReport sin_theta(const Matrix& u, const Matrix& v) {
  if (u.rows() != v.rows() || u.cols() != v.cols())
    throw std::invalid_argument("sin_theta: shape mismatch");
  if (orthonormality_defect(u) > 1e-8 || orthonormality_defect(v) > 1e-8)
    throw std::invalid_argument("sin_theta: inputs must be orthonormal");

  SvdResult g = svd_small(matmul(transposed(u), v));
  AngleReport rep;
  rep.sines.resize(g.sigma.size());
  // g.sigma is nonincreasing, so these sines come out nondecreasing
  for (std::size_t i = 0; i < g.sigma.size(); ++i) {
    double w = std::clamp(g.sigma[i], 0.0, 1.0);
    rep.sines[g.sigma.size() - 1 - i] = std::sqrt(std::max(0.0, 1.0 - w * w));
  }
  rep.theta_max = std::asin(std::clamp(rep.sines.empty() ? 0.0 : rep.sines[0], 0.0, 1.0));
  return rep;
}

double spectral_norm(const Matrix& a) {
  if (a.rows() == a.cols() && a.rows() <= kJacobiCap) return svd_small(a).sigma[0];

  double fro = frobenius_norm(a);
  if (fro == 0.0) return 0.0;

  // power iteration on a^T a with a fixed seeded start
  Rng rng(0x73706563);  // "spec"
  std::vector<double> v(a.cols());
  for (double& x : v) x = rng.normal();
  double sigma = 0.0;
  std::vector<double> av(a.rows());
  for (int it = 0; it < 1000; ++it) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
      av[i] = s;
    }
    std::vector<double> w(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) w[j] += a(i, j) * av[i];
    double nw = 0.0;
    for (double x : w) nw += x * x;
    nw = std::sqrt(nw);
    if (nw == 0.0) return 0.0;
    double next = std::sqrt(nw);  // ||a^T a v|| ~ sigma^2 for unit v
    for (std::size_t j = 0; j < a.cols(); ++j) v[j] = w[j] / nw;
    if (it > 0 && std::abs(next - sigma) <= 1e-10 * std::max(next, 1e-300)) {
      sigma = next;
      break;
    }
    sigma = next;
  }
  return sigma;
}

double stable_rank(const Matrix& a) {
  double fro = frobenius_norm(a);
  if (fro == 0.0) throw std::invalid_argument("stable_rank: zero matrix");
  double spec = spectral_norm(a);
  return (fro * fro) / (spec * spec);
}

Theorem1Report theorem1_check(const GroundTruth& gt) {
  if (!gt.l_star.has_value())
    throw UnsupportedAtScale("theorem1_check: dense ground truth not materialized");
  const Matrix& l = *gt.l_star;
  const std::size_t m = l.rows(), n = l.cols(), r = gt.rank;
  if (std::min(m, n) > kJacobiCap)
    throw UnsupportedAtScale("theorem1_check: instance too large for the dense SVD path");

  Matrix s = dense_from_correction(m, n, gt.s_star);
  Matrix mm(m, n);
  for (std::size_t i = 0; i < m * n; ++i) mm.data()[i] = l.data()[i] + s.data()[i];

  Theorem1Report rep;

  // condition (a): corruption energy outside both ground-truth subspaces
  Matrix ut_s = matmul(transposed(gt.u_star), s);           // r x n
  Matrix s_v = matmul(s, gt.v_star);                        // m x r
  Matrix proj = s;
  {
    Matrix u_uts = matmul(gt.u_star, ut_s);                 // U U^T S
    Matrix sv_vt = matmul(s_v, transposed(gt.v_star));      // S V V^T
    Matrix uts_v = matmul(gt.u_star, matmul(ut_s, matmul(gt.v_star, transposed(gt.v_star))));
    for (std::size_t i = 0; i < m * n; ++i)
      proj.data()[i] += -u_uts.data()[i] - sv_vt.data()[i] + uts_v.data()[i];
  }
  rep.cond_a_lhs = spectral_norm(proj);
  rep.cond_a_rhs = gt.sigma_star.back();

  // condition (b): corruption aligned with the subspaces vs the spectral gap
  rep.cond_b_lhs = std::max(std::sqrt(svd_small(matmul(transposed(s_v), s_v)).sigma[0]),
                            std::sqrt(svd_small(matmul(ut_s, transposed(ut_s))).sigma[0]));

  // singular values/vectors of M through the Gram matrix of the short side
  const bool wide = m < n;
  Matrix g = wide ? matmul(mm, transposed(mm)) : matmul(transposed(mm), mm);
  SvdResult ge = svd_small(g);
  std::vector<double> sigma_m(ge.sigma.size());
  for (std::size_t i = 0; i < ge.sigma.size(); ++i) sigma_m[i] = std::sqrt(std::max(0.0, ge.sigma[i]));
  double sigma_r = (r <= sigma_m.size()) ? sigma_m[r - 1] : 0.0;
  double sigma_r1 = (r < sigma_m.size()) ? sigma_m[r] : 0.0;
  rep.cond_b_rhs = sigma_r - sigma_r1;

  rep.holds = (rep.cond_a_lhs < rep.cond_a_rhs) && (rep.cond_b_lhs < rep.cond_b_rhs);
  rep.eta = (rep.cond_b_rhs > rep.cond_b_lhs)
                ? rep.cond_b_lhs / (rep.cond_b_rhs - rep.cond_b_lhs)
                : std::numeric_limits<double>::infinity();

  // top-r subspaces of M: Gram eigenvectors on the short side, one
  // multiplication for the other (QR instead of dividing by sigma)
  // Gram eigenvectors give the short side's singular vectors directly; the
  // long side comes from one multiplication plus QR (no division by sigma)
  Matrix short_basis = left_columns(ge.u, r);
  Matrix long_raw = wide ? matmul(transposed(mm), short_basis) : matmul(mm, short_basis);
  Matrix long_basis = qr_thin(long_raw).q;
  const Matrix& u_top = wide ? short_basis : long_basis;
  const Matrix& v_top = wide ? long_basis : short_basis;
  AngleReport au = sin_theta(u_top, gt.u_star);
  AngleReport av = sin_theta(v_top, gt.v_star);
  rep.theta_u = au.sines.empty() ? 0.0 : au.sines[0];
  rep.theta_v = av.sines.empty() ? 0.0 : av.sines[0];

  // best rank-r approximation via the projector on the short side
  double err2 = 0.0;
  if (!wide) {
    // M_r = M V1 V1^T
    Matrix mv = matmul(mm, v_top);  // m x r
    Matrix mr = matmul(mv, transposed(v_top));
    for (std::size_t i = 0; i < m * n; ++i) {
      double d = mr.data()[i] - l.data()[i];
      err2 += d * d;
    }
  } else {
    // M_r = U1 U1^T M
    Matrix um = matmul(transposed(u_top), mm);  // r x n
    Matrix mr = matmul(u_top, um);
    for (std::size_t i = 0; i < m * n; ++i) {
      double d = mr.data()[i] - l.data()[i];
      err2 += d * d;
    }
  }
  rep.top_r_error_fro = std::sqrt(err2);
  return rep;
}

RecoveryError recovery_error(const FactorTriple& factors, const GroundTruth& gt) {
  const std::size_t r1 = factors.rank(), r2 = gt.rank;
  if (factors.x.rows() != gt.rows || factors.y.rows() != gt.cols)
    throw std::invalid_argument("recovery_error: shape mismatch");

  RecoveryError out;
  out.rank_mismatch = (r1 != r2);
  const std::size_t k = std::min(r1, r2);
  out.angle_x = sin_theta(left_columns(factors.x, k), left_columns(gt.u_star, k));
  out.angle_y = sin_theta(left_columns(factors.y, k), left_columns(gt.v_star, k));

  // || X S Y^T - U S* V^T ||_F via small triangular cores; no m x n blowup
  // and no cancellation of two large norms when the sides nearly coincide
  double l_norm = 0.0;
  for (double v : gt.sigma_star) l_norm += v * v;
  l_norm = std::sqrt(l_norm);
  const std::size_t w = r1 + r2;
  if (gt.rows >= w && gt.cols >= w) {
    QrResult ql = qr_thin(hcat(factors.x, gt.u_star));
    QrResult qr = qr_thin(hcat(factors.y, gt.v_star));
    Matrix core(w, w);
    for (std::size_t i = 0; i < w; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        double s = 0.0;
        if (r1 == r2) {
          // pairing the two sides keeps identical triples cancelling exactly
          for (std::size_t c = 0; c < r1; ++c)
            s += ql.r(i, c) * factors.sigma[c] * qr.r(j, c) -
                 ql.r(i, r1 + c) * gt.sigma_star[c] * qr.r(j, r1 + c);
        } else {
          for (std::size_t c = 0; c < r1; ++c) s += ql.r(i, c) * factors.sigma[c] * qr.r(j, c);
          for (std::size_t c = 0; c < r2; ++c)
            s -= ql.r(i, r1 + c) * gt.sigma_star[c] * qr.r(j, r1 + c);
        }
        core(i, j) = s;
      }
    out.rel_frobenius = frobenius_norm(core) / l_norm;
  } else {
    // tiny instance; the dense difference is cheaper than being clever
    double err2 = 0.0;
    for (std::size_t i = 0; i < gt.rows; ++i)
      for (std::size_t j = 0; j < gt.cols; ++j) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t c = 0; c < r1; ++c)
          lhs += factors.x(i, c) * factors.sigma[c] * factors.y(j, c);
        for (std::size_t c = 0; c < r2; ++c)
          rhs += gt.u_star(i, c) * gt.sigma_star[c] * gt.v_star(j, c);
        err2 += (lhs - rhs) * (lhs - rhs);
      }
    out.rel_frobenius = std::sqrt(err2) / l_norm;
  }

  if (static_cast<double>(gt.rows) * static_cast<double>(gt.cols) <=
      static_cast<double>(InstanceSpec{}.dense_cap)) {
    double worst = 0.0;
    for (std::size_t i = 0; i < gt.rows; ++i)
      for (std::size_t j = 0; j < gt.cols; ++j) {
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t c = 0; c < r1; ++c)
          lhs += factors.x(i, c) * factors.sigma[c] * factors.y(j, c);
        for (std::size_t c = 0; c < r2; ++c)
          rhs += gt.u_star(i, c) * gt.sigma_star[c] * gt.v_star(j, c);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    out.max_norm = worst;
  } else {
    out.max_norm = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace rmc
