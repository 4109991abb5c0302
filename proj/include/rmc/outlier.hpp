#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rmc/obsmat.hpp"

namespace rmc {

enum class OutlierStrategy { GlobalTopS, RowColIntersect };

// Current sparse-corruption estimate. For thresholding output the support is
// a subset of the residual's index set and entries carry the residual value,
// so the corrected residual vanishes exactly on the support.
struct SparseCorrection {
  std::vector<Entry> entries;          // sorted by (row, col)
  std::vector<std::size_t> entry_ids;  // ids into the source ObservedMatrix; aligned
  OutlierStrategy strategy_used = OutlierStrategy::GlobalTopS;
};

// The s entries of largest |residual|; ties broken by smallest (row, col).
// Zero residuals are never selected, so fewer than s entries may come back.
SparseCorrection threshold_global(const ObservedMatrix& base, std::span<const double> residual,
                                  std::size_t s);

// An entry qualifies iff its |residual| ranks in the top k of its row and the
// top k of its column; if more than cap qualify, the cap largest are kept.
SparseCorrection threshold_rowcol(const ObservedMatrix& base, std::span<const double> residual,
                                  std::size_t k, std::size_t cap);

}  // namespace rmc
