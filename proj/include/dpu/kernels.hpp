#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dpu/dataset.hpp"
#include "dpu/losses.hpp"
#include "dpu/model.hpp"

namespace dpu {

/// Per-dataset sample averages needed by every risk estimator:
///   mean_pos = mean l(g(x)),  mean_neg = mean l(-g(x)),
/// plus, when requested, their gradients with respect to (w, b). Gradient
/// vectors have dim + 1 entries with the bias derivative last.
struct SetMoments {
  double mean_pos = 0.0;
  double mean_neg = 0.0;
  std::vector<double> grad_pos;
  std::vector<double> grad_neg;
};

/// Rows per reduction block. Block partials are combined in a fixed pairwise
/// order, so results do not depend on the thread count.
inline constexpr std::size_t kBlockRows = 256;

/// OpenMP kernel. Rows are split into kBlockRows blocks, each block is summed
/// serially, and block partials are merged by pairwise summation in block
/// order. Throws DataError on an empty matrix or dimension mismatch, and
/// rethrows the first (lowest-row) loss error.
SetMoments accumulate_moments(const FeatureMatrix& x, const LinearScorer& model,
                              SurrogateLoss loss, bool with_gradient);

/// Scores every row, in parallel.
std::vector<double> score_rows(const FeatureMatrix& x, const LinearScorer& model);

/// Pairwise (cascade) sum with a fixed split order.
double pairwise_sum(std::span<const double> values) noexcept;

namespace reference {

/// Serial reference for accumulate_moments: one pass over the rows with
/// Neumaier-compensated sums. Kept for testing and benchmarking.
SetMoments accumulate_moments(const FeatureMatrix& x, const LinearScorer& model,
                              SurrogateLoss loss, bool with_gradient);

std::vector<double> score_rows(const FeatureMatrix& x, const LinearScorer& model);

}  // namespace reference

/// Number of threads OpenMP would use (1 without OpenMP).
int max_threads() noexcept;

}  // namespace dpu
