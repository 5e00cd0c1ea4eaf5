#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dpu {

/// Dense row-major feature matrix (one individual per row).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of `values`, which must hold a multiple of `cols` entries.
  FeatureMatrix(std::size_t cols, std::vector<double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept {
    return {values_.data() + i * cols_, cols_};
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    return values_[i * cols_ + j];
  }
  std::span<const double> values() const noexcept { return values_; }

  /// Appends a row; the first row fixes the column count when cols() == 0.
  void append_row(std::span<const double> x);

  /// Copy of the selected rows, in the given order.
  FeatureMatrix gather(std::span<const std::size_t> indices) const;

  /// Throws DataError if any entry is NaN or infinite. `what` names the set.
  void require_finite(const char* what) const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// One fully labeled individual. y = interest, z = loyalty, both in {-1, +1}.
struct LabeledSample {
  std::vector<double> x;
  int y = -1;
  int z = -1;

  /// Potential-customer label: +1 iff (y, z) = (+1, -1).
  int w() const noexcept { return (y == 1 && z == -1) ? 1 : -1; }

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

/// The three observed samples: positive-interest (J rows), unlabeled (K rows)
/// and positive-loyal (L rows).
struct PuTriple {
  FeatureMatrix positive_interest;
  FeatureMatrix unlabeled;
  FeatureMatrix positive_loyal;

  std::size_t dim() const noexcept { return unlabeled.cols(); }

  /// J, K, L >= 1, equal dimensions, finite entries. Throws DataError.
  void validate() const;
};

/// Stacks sample features into a matrix.
FeatureMatrix features_of(std::span<const LabeledSample> samples);

/// Splits samples into (W = +1 features, W = -1 features).
std::pair<FeatureMatrix, FeatureMatrix> partition_by_w(
    std::span<const LabeledSample> samples);

}  // namespace dpu
