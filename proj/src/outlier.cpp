#include "rmc/outlier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rmc {

namespace {

// Total order: larger |residual| first, then smaller (row, col). Entry ids
// are already (row, col)-sorted, so the id breaks ties.
struct ByMagnitude {
  std::span<const double> residual;
  bool operator()(std::size_t a, std::size_t b) const {
    double ma = std::abs(residual[a]), mb = std::abs(residual[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  }
};

SparseCorrection finish(const ObservedMatrix& base, std::span<const double> residual,
                        std::vector<std::size_t> ids, OutlierStrategy strategy) {
  std::sort(ids.begin(), ids.end());
  SparseCorrection out;
  out.strategy_used = strategy;
  out.entry_ids = std::move(ids);
  out.entries.reserve(out.entry_ids.size());
  for (std::size_t id : out.entry_ids) {
    const Entry& e = base.entry(id);
    out.entries.push_back({e.row, e.col, residual[id]});
  }
  return out;
}

}  // namespace

SparseCorrection threshold_global(const ObservedMatrix& base, std::span<const double> residual,
                                  std::size_t s) {
  if (residual.size() != base.nnz())
    throw std::invalid_argument("threshold_global: residual length mismatch");
  if (s > base.nnz())
    throw std::invalid_argument("threshold_global: budget exceeds observation count");

  std::vector<std::size_t> cand;
  cand.reserve(base.nnz());
  for (std::size_t id = 0; id < residual.size(); ++id)
    if (residual[id] != 0.0) cand.push_back(id);

  ByMagnitude cmp{residual};
  if (cand.size() > s) {
    std::nth_element(cand.begin(), cand.begin() + s, cand.end(), cmp);
    cand.resize(s);
  }
  return finish(base, residual, std::move(cand), OutlierStrategy::GlobalTopS);
}

SparseCorrection threshold_rowcol(const ObservedMatrix& base, std::span<const double> residual,
                                  std::size_t k, std::size_t cap) {
  if (residual.size() != base.nnz())
    throw std::invalid_argument("threshold_rowcol: residual length mismatch");
  if (k == 0) throw std::invalid_argument("threshold_rowcol: k must be >= 1");

  ByMagnitude cmp{residual};
  std::vector<std::uint8_t> in_row_top(base.nnz(), 0);
  std::vector<std::size_t> scratch;
  for (std::size_t i = 0; i < base.rows(); ++i) {
    auto [lo, hi] = base.row_range(i);
    scratch.clear();
    for (std::size_t id = lo; id < hi; ++id)
      if (residual[id] != 0.0) scratch.push_back(id);
    if (scratch.size() > k) {
      std::nth_element(scratch.begin(), scratch.begin() + k, scratch.end(), cmp);
      scratch.resize(k);
    }
    for (std::size_t id : scratch) in_row_top[id] = 1;
  }

  std::vector<std::size_t> selected;
  for (std::size_t j = 0; j < base.cols(); ++j) {
    auto ids = base.col_ids(j);
    scratch.clear();
    for (std::size_t id : ids)
      if (residual[id] != 0.0) scratch.push_back(id);
    if (scratch.size() > k) {
      std::nth_element(scratch.begin(), scratch.begin() + k, scratch.end(), cmp);
      scratch.resize(k);
    }
    for (std::size_t id : scratch)
      if (in_row_top[id]) selected.push_back(id);
  }

  if (selected.size() > cap) {
    std::nth_element(selected.begin(), selected.begin() + cap, selected.end(), cmp);
    selected.resize(cap);
  }
  return finish(base, residual, std::move(selected), OutlierStrategy::RowColIntersect);
}

}  // namespace rmc
