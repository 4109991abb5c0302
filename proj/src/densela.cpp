#include "rmc/densela.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

#include "rmc/errors.hpp"
#include "rmc/rng.hpp"

namespace rmc {

namespace {

// Householder reflector for w(j:m, j), stored with v0 = 1 implicit:
// v is written to w(j+1:m, j), the new diagonal value goes to *diag.
// Returns beta; beta == 0 means the column was already zero below row j.
double make_reflector(Matrix& w, std::size_t j, double* diag) {
  const std::size_t m = w.rows();
  double norm2 = 0.0;
  for (std::size_t i = j; i < m; ++i) norm2 += w(i, j) * w(i, j);
  double norm = std::sqrt(norm2);
  if (norm == 0.0) {
    *diag = 0.0;
    return 0.0;
  }
  double x0 = w(j, j);
  double alpha = (x0 >= 0.0) ? -norm : norm;
  double v0 = x0 - alpha;
  for (std::size_t i = j + 1; i < m; ++i) w(i, j) /= v0;
  *diag = alpha;
  return -v0 / alpha;
}

// Applies (I - beta v v^T) to column c of w, rows j..m-1.
void apply_reflector_col(const Matrix& w, std::size_t j, double beta, Matrix& target,
                         std::size_t c) {
  const std::size_t m = w.rows();
  double s = target(j, c);
  for (std::size_t i = j + 1; i < m; ++i) s += w(i, j) * target(i, c);
  s *= beta;
  target(j, c) -= s;
  for (std::size_t i = j + 1; i < m; ++i) target(i, c) -= s * w(i, j);
}

void apply_reflector_vec(const Matrix& w, std::size_t j, double beta,
                         std::vector<double>& target) {
  const std::size_t m = w.rows();
  double s = target[j];
  for (std::size_t i = j + 1; i < m; ++i) s += w(i, j) * target[i];
  s *= beta;
  target[j] -= s;
  for (std::size_t i = j + 1; i < m; ++i) target[i] -= s * w(i, j);
}

}  // namespace

QrResult qr_thin(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  if (m < k) throw std::invalid_argument("qr_thin: rows must be >= cols");

  Matrix w = a;  // reflectors accumulate below the diagonal
  std::vector<double> beta(k, 0.0), diag(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    beta[j] = make_reflector(w, j, &diag[j]);
    if (beta[j] == 0.0) continue;
    for (std::size_t c = j + 1; c < k; ++c) apply_reflector_col(w, j, beta[j], w, c);
  }

  Matrix r(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    r(i, i) = diag[i];
    for (std::size_t j = i + 1; j < k; ++j) r(i, j) = w(i, j);
  }

  // Q = H_0 ... H_{k-1} applied to the first k columns of I
  Matrix q(m, k);
  for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
  for (std::size_t j = k; j-- > 0;) {
    if (beta[j] == 0.0) continue;
    for (std::size_t c = 0; c < k; ++c) apply_reflector_col(w, j, beta[j], q, c);
  }

  // normalize signs so the diagonal of R is nonnegative
  for (std::size_t j = 0; j < k; ++j) {
    if (r(j, j) < 0.0) {
      for (std::size_t c = j; c < k; ++c) r(j, c) = -r(j, c);
      for (std::size_t i = 0; i < m; ++i) q(i, j) = -q(i, j);
    }
  }
  return {std::move(q), std::move(r)};
}

SvdResult svd_small(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("svd_small: input must be square");
  const std::size_t k = a.rows();
  const std::size_t kMaxSweeps = 30;
  const double kPairTol = 1e-14;

  Matrix w = a;  // columns are orthogonalized in place: w = a * v
  Matrix v = Matrix::identity(k);

  bool converged = false;
  std::size_t sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        double gii = 0.0, gjj = 0.0, gij = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
          gii += w(p, i) * w(p, i);
          gjj += w(p, j) * w(p, j);
          gij += w(p, i) * w(p, j);
        }
        if (gii == 0.0 || gjj == 0.0) continue;
        if (std::abs(gij) <= kPairTol * std::sqrt(gii * gjj)) continue;

        double zeta = (gjj - gii) / (2.0 * gij);
        double t;
        if (std::abs(zeta) > 1e154) {
          t = 1.0 / (2.0 * zeta);  // avoid overflow in zeta^2
        } else {
          t = ((zeta >= 0.0) ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        }
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (std::size_t p = 0; p < k; ++p) {
          double wi = w(p, i), wj = w(p, j);
          w(p, i) = c * wi - s * wj;
          w(p, j) = s * wi + c * wj;
          double vi = v(p, i), vj = v(p, j);
          v(p, i) = c * vi - s * vj;
          v(p, j) = s * vi + c * vj;
        }
        rotated = true;
      }
    }
    if (!rotated) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NumericalError("svd_small: Jacobi sweep cap exceeded", kMaxSweeps);

  std::vector<double> norms(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += w(p, j) * w(p, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult out;
  out.u = Matrix(k, k);
  out.v = Matrix(k, k);
  out.sigma.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t src = order[j];
    out.sigma[j] = norms[src];
    for (std::size_t p = 0; p < k; ++p) out.v(p, j) = v(p, src);
    if (norms[src] > 0.0) {
      for (std::size_t p = 0; p < k; ++p) out.u(p, j) = w(p, src) / norms[src];
    }
  }

  // complete u where sigma == 0 (rank-deficient input)
  for (std::size_t j = 0; j < k; ++j) {
    if (out.sigma[j] > 0.0) continue;
    // candidate axis with the largest component outside the current span
    std::size_t best = 0;
    double best_res = -1.0;
    for (std::size_t cand = 0; cand < k; ++cand) {
      double proj2 = 0.0;
      for (std::size_t c = 0; c < j; ++c) proj2 += out.u(cand, c) * out.u(cand, c);
      double res = 1.0 - proj2;
      if (res > best_res) {
        best_res = res;
        best = cand;
      }
    }
    std::vector<double> col(k, 0.0);
    col[best] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t c = 0; c < j; ++c) {
        double dot = 0.0;
        for (std::size_t p = 0; p < k; ++p) dot += out.u(p, c) * col[p];
        for (std::size_t p = 0; p < k; ++p) col[p] -= dot * out.u(p, c);
      }
    }
    double nrm = 0.0;
    for (double x : col) nrm += x * x;
    nrm = std::sqrt(nrm);
    for (std::size_t p = 0; p < k; ++p) out.u(p, j) = col[p] / nrm;
  }
  return out;
}

std::vector<double> lsq_solve(const Matrix& coeff, std::span<const double> rhs) {
  const std::size_t q = coeff.rows();
  const std::size_t k = coeff.cols();
  if (rhs.size() != q) throw std::invalid_argument("lsq_solve: rhs length mismatch");
  const double kPivotCut = 1e-12;

  Matrix w = coeff;
  std::vector<double> qtb(rhs.begin(), rhs.end());
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> diag(k, 0.0);

  const std::size_t steps = std::min(q, k);
  std::size_t rank = 0;
  double lead_pivot = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    // column pivot: largest trailing norm (recomputed; sizes here are small)
    std::size_t piv = j;
    double best = -1.0;
    for (std::size_t c = j; c < k; ++c) {
      double s = 0.0;
      for (std::size_t i = j; i < q; ++i) s += w(i, c) * w(i, c);
      if (s > best) {
        best = s;
        piv = c;
      }
    }
    double pivot = std::sqrt(std::max(best, 0.0));
    if (j == 0) lead_pivot = pivot;
    if (pivot == 0.0 || pivot <= kPivotCut * lead_pivot) break;
    if (piv != j) {
      for (std::size_t i = 0; i < q; ++i) std::swap(w(i, j), w(i, piv));
      std::swap(perm[j], perm[piv]);
    }
    double beta = make_reflector(w, j, &diag[j]);
    if (beta != 0.0) {
      for (std::size_t c = j + 1; c < k; ++c) apply_reflector_col(w, j, beta, w, c);
      apply_reflector_vec(w, j, beta, qtb);
    }
    ++rank;
  }

  std::vector<double> x(k, 0.0);
  if (rank == 0) return x;

  std::vector<double> xp(k, 0.0);
  if (rank == k) {
    // full column rank: plain back substitution on the k x k triangle
    for (std::size_t i = k; i-- > 0;) {
      double s = qtb[i];
      for (std::size_t c = i + 1; c < k; ++c) s -= w(i, c) * xp[c];
      xp[i] = s / diag[i];
    }
  } else {
    // minimum-norm completion: thin QR of the transposed rank x k triangle
    Matrix rt(k, rank);
    for (std::size_t i = 0; i < rank; ++i) {
      rt(i, i) = diag[i];
      for (std::size_t c = i + 1; c < k; ++c) rt(c, i) = w(i, c);
    }
    QrResult zt = qr_thin(rt);  // rt = z * t
    // row space basis z, so x = z * u with t^T u = qtb(0:rank)
    std::vector<double> u(rank, 0.0);
    for (std::size_t i = 0; i < rank; ++i) {
      double s = qtb[i];
      for (std::size_t l = 0; l < i; ++l) s -= zt.r(l, i) * u[l];
      u[i] = s / zt.r(i, i);
    }
    for (std::size_t c = 0; c < k; ++c) {
      double s = 0.0;
      for (std::size_t l = 0; l < rank; ++l) s += zt.q(c, l) * u[l];
      xp[c] = s;
    }
  }
  for (std::size_t c = 0; c < k; ++c) x[perm[c]] = xp[c];
  return x;
}

TruncatedSvd truncated_svd(std::size_t rows, std::size_t cols, const LinearOp& apply,
                           const LinearOp& apply_transpose, std::size_t r0,
                           std::uint64_t seed) {
  if (r0 == 0 || r0 > std::min(rows, cols)) throw std::invalid_argument("truncated_svd: bad r0");
  // Pass budget sized so modest spectral gaps still resolve; each pass is one
  // application of A^T A to the block followed by re-orthonormalization.
  const int kPasses = 8;

  Rng rng(seed);
  Matrix y(cols, r0);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = 0; j < r0; ++j) y(i, j) = rng.normal();

  std::vector<double> yin(cols), mid(rows), yout(cols);
  for (int pass = 0; pass < kPasses; ++pass) {
    Matrix next(cols, r0);
    for (std::size_t j = 0; j < r0; ++j) {
      for (std::size_t i = 0; i < cols; ++i) yin[i] = y(i, j);
      std::fill(mid.begin(), mid.end(), 0.0);
      apply(yin, mid);
      std::fill(yout.begin(), yout.end(), 0.0);
      apply_transpose(mid, yout);
      for (std::size_t i = 0; i < cols; ++i) next(i, j) = yout[i];
    }
    y = qr_thin(next).q;
  }

  Matrix b(rows, r0);
  for (std::size_t j = 0; j < r0; ++j) {
    for (std::size_t i = 0; i < cols; ++i) yin[i] = y(i, j);
    std::fill(mid.begin(), mid.end(), 0.0);
    apply(yin, mid);
    for (std::size_t i = 0; i < rows; ++i) b(i, j) = mid[i];
  }
  QrResult bqr = qr_thin(b);
  SvdResult core = svd_small(bqr.r);

  TruncatedSvd out;
  out.u = matmul(bqr.q, core.u);
  out.v = matmul(y, core.v);
  out.sigma = std::move(core.sigma);
  return out;
}

}  // namespace rmc
