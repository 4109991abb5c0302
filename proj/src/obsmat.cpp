#include "rmc/obsmat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rmc/errors.hpp"

namespace rmc {

ObservedMatrix ObservedMatrix::from_triplets(std::size_t m, std::size_t n,
                                             std::vector<Entry> triplets) {
  if (m == 0 || n == 0) throw std::invalid_argument("from_triplets: dimensions must be >= 1");
  for (const Entry& e : triplets) {
    if (e.row >= m || e.col >= n)
      throw std::invalid_argument("from_triplets: index (" + std::to_string(e.row) + ", " +
                                  std::to_string(e.col) + ") out of range for " +
                                  std::to_string(m) + "x" + std::to_string(n));
    if (!std::isfinite(e.value))
      throw std::invalid_argument("from_triplets: non-finite value at (" +
                                  std::to_string(e.row) + ", " + std::to_string(e.col) + ")");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Entry& a, const Entry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  for (std::size_t i = 1; i < triplets.size(); ++i) {
    if (triplets[i].row == triplets[i - 1].row && triplets[i].col == triplets[i - 1].col)
      throw std::invalid_argument("from_triplets: duplicate entry (" +
                                  std::to_string(triplets[i].row) + ", " +
                                  std::to_string(triplets[i].col) + ")");
  }

  ObservedMatrix obs;
  obs.m_ = m;
  obs.n_ = n;
  obs.entries_ = std::move(triplets);

  obs.row_ptr_.assign(m + 1, 0);
  for (const Entry& e : obs.entries_) ++obs.row_ptr_[e.row + 1];
  for (std::size_t i = 0; i < m; ++i) obs.row_ptr_[i + 1] += obs.row_ptr_[i];

  obs.col_ptr_.assign(n + 1, 0);
  for (const Entry& e : obs.entries_) ++obs.col_ptr_[e.col + 1];
  for (std::size_t j = 0; j < n; ++j) obs.col_ptr_[j + 1] += obs.col_ptr_[j];
  obs.col_ids_.resize(obs.entries_.size());
  std::vector<std::size_t> cursor(obs.col_ptr_.begin(), obs.col_ptr_.end() - 1);
  // entry ids ascend in row order, so each column's list comes out row-sorted
  for (std::size_t id = 0; id < obs.entries_.size(); ++id)
    obs.col_ids_[cursor[obs.entries_[id].col]++] = id;
  return obs;
}

MaskedView::MaskedView(const ObservedMatrix& base, std::span<const std::size_t> excluded_ids)
    : base_(&base), excluded_(base.nnz(), 0), excluded_count_(0) {
  for (std::size_t id : excluded_ids) {
    if (id >= base.nnz()) throw std::invalid_argument("MaskedView: excluded id out of range");
    if (!excluded_[id]) {
      excluded_[id] = 1;
      ++excluded_count_;
    }
  }
}

ProjectedResidual project_residual(const MaskedView& view, const Matrix& x,
                                   std::span<const double> sigma, const Matrix& y,
                                   int threads) {
  const ObservedMatrix& base = view.base();
  const std::size_t r = sigma.size();
  if (x.rows() != base.rows() || y.rows() != base.cols() || x.cols() != r || y.cols() != r)
    throw std::invalid_argument("project_residual: dimension mismatch");

  // fold sigma into x once
  Matrix xs = x;
  for (std::size_t i = 0; i < xs.rows(); ++i)
    for (std::size_t c = 0; c < r; ++c) xs(i, c) *= sigma[c];

  ProjectedResidual out;
  out.values.resize(base.nnz());
  const long m = static_cast<long>(base.rows());
#pragma omp parallel for schedule(dynamic, 64) num_threads(threads) if (threads > 1)
  for (long i = 0; i < m; ++i) {
    auto [lo, hi] = base.row_range(static_cast<std::size_t>(i));
    std::span<const double> xrow = xs.row(static_cast<std::size_t>(i));
    for (std::size_t id = lo; id < hi; ++id) {
      const Entry& e = base.entry(id);
      double dot = 0.0;
      std::span<const double> yrow = y.row(e.col);
      for (std::size_t c = 0; c < r; ++c) dot += xrow[c] * yrow[c];
      out.values[id] = e.value - dot;
    }
  }

  // norm over the effective set, fixed entry-id order
  double s = 0.0;
  for (std::size_t id = 0; id < out.values.size(); ++id)
    if (!view.excluded(id)) s += out.values[id] * out.values[id];
  out.norm = std::sqrt(s);
  return out;
}

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

ObservedMatrix read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file", 1);
  ++lineno;
  {
    std::istringstream hs(line);
    std::string banner, object, format, field, symmetry;
    hs >> banner >> object >> format >> field >> symmetry;
    if (banner != "%%MatrixMarket") throw ParseError(path + ": missing MatrixMarket banner", lineno);
    if (lower(object) != "matrix" || lower(format) != "coordinate")
      throw ParseError(path + ": only coordinate matrices are supported", lineno);
    if (lower(field) != "real" || lower(symmetry) != "general")
      throw ParseError(path + ": only real general matrices are supported", lineno);
  }

  std::size_t m = 0, n = 0, nnz = 0;
  bool have_size = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    std::istringstream ls(line);
    if (!(ls >> m >> n >> nnz)) throw ParseError(path + ": malformed size line", lineno);
    have_size = true;
    break;
  }
  if (!have_size) throw ParseError(path + ": missing size line", lineno + 1);

  std::vector<Entry> triplets;
  triplets.reserve(nnz);
  while (triplets.size() < nnz) {
    if (!std::getline(in, line))
      throw ParseError(path + ": expected " + std::to_string(nnz) + " entries, got " +
                           std::to_string(triplets.size()),
                       lineno + 1);
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    long long i1 = 0, j1 = 0;
    double v = 0.0;
    if (!(ls >> i1 >> j1 >> v)) throw ParseError(path + ": malformed entry", lineno);
    if (i1 < 1 || j1 < 1 || static_cast<std::size_t>(i1) > m || static_cast<std::size_t>(j1) > n)
      throw ParseError(path + ": entry index (" + std::to_string(i1) + ", " +
                           std::to_string(j1) + ") out of bounds for " + std::to_string(m) +
                           "x" + std::to_string(n),
                       lineno);
    triplets.push_back({static_cast<std::size_t>(i1 - 1), static_cast<std::size_t>(j1 - 1), v});
  }
  return ObservedMatrix::from_triplets(m, n, std::move(triplets));
}

void write_matrix_market(std::size_t m, std::size_t n, std::span<const Entry> entries,
                         const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  std::fprintf(f, "%%%%MatrixMarket matrix coordinate real general\n");
  std::fprintf(f, "%zu %zu %zu\n", m, n, entries.size());
  for (const Entry& e : entries)
    std::fprintf(f, "%zu %zu %.17g\n", e.row + 1, e.col + 1, e.value);
  if (std::fclose(f) != 0) throw std::runtime_error("write failed for " + path);
}

void write_matrix_market(const ObservedMatrix& obs, const std::string& path) {
  write_matrix_market(obs.rows(), obs.cols(), obs.entries(), path);
}

}  // namespace rmc
