#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmc/matrix.hpp"

namespace rmc {

struct Entry {
  std::size_t row;
  std::size_t col;
  double value;
};

// Sparse store of the observed entries of M. Entries are canonicalized to
// (row, col) order, so an entry id doubles as its rank in that order; the two
// index views let per-row and per-column systems be assembled in O(observed).
// Immutable after construction and safe to share across threads.
class ObservedMatrix {
 public:
  static ObservedMatrix from_triplets(std::size_t m, std::size_t n, std::vector<Entry> triplets);

  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }
  std::size_t nnz() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  const Entry& entry(std::size_t id) const { return entries_[id]; }

  // entry ids of row i, ascending column (contiguous by construction)
  std::pair<std::size_t, std::size_t> row_range(std::size_t i) const {
    return {row_ptr_[i], row_ptr_[i + 1]};
  }
  // entry ids of column j, ascending row
  std::span<const std::size_t> col_ids(std::size_t j) const {
    return {col_ids_.data() + col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]};
  }
  std::size_t row_count(std::size_t i) const { return row_ptr_[i + 1] - row_ptr_[i]; }
  std::size_t col_count(std::size_t j) const { return col_ptr_[j + 1] - col_ptr_[j]; }

 private:
  std::size_t m_ = 0, n_ = 0;
  std::vector<Entry> entries_;         // sorted by (row, col); index == entry id
  std::vector<std::size_t> row_ptr_;   // size m+1
  std::vector<std::size_t> col_ptr_;   // size n+1
  std::vector<std::size_t> col_ids_;   // entry ids grouped by column, rows ascending
};

// The working index set: base observations minus the current outlier support.
// A cheap value over an immutable base; concurrent reads are safe.
class MaskedView {
 public:
  explicit MaskedView(const ObservedMatrix& base)
      : base_(&base), excluded_(base.nnz(), 0), excluded_count_(0) {}
  MaskedView(const ObservedMatrix& base, std::span<const std::size_t> excluded_ids);

  const ObservedMatrix& base() const { return *base_; }
  bool excluded(std::size_t id) const { return excluded_[id] != 0; }
  std::size_t excluded_count() const { return excluded_count_; }
  std::size_t effective_count() const { return base_->nnz() - excluded_count_; }

 private:
  const ObservedMatrix* base_;
  std::vector<std::uint8_t> excluded_;
  std::size_t excluded_count_;
};

struct ProjectedResidual {
  // One value per base entry: M_ij - x_i^T diag(sigma) y_j. The values do not
  // depend on the mask; only the norm does.
  std::vector<double> values;
  // Frobenius norm over the view's effective set, accumulated in entry-id
  // order (deterministic for any thread count).
  double norm = 0.0;
};

ProjectedResidual project_residual(const MaskedView& view, const Matrix& x,
                                   std::span<const double> sigma, const Matrix& y,
                                   int threads = 1);

// Matrix Market "coordinate real general"; 1-based on disk, 0-based here.
// Values are printed with 17 significant digits, so round-trips are exact.
ObservedMatrix read_matrix_market(const std::string& path);
void write_matrix_market(const ObservedMatrix& obs, const std::string& path);
void write_matrix_market(std::size_t m, std::size_t n, std::span<const Entry> entries,
                         const std::string& path);

}  // namespace rmc
