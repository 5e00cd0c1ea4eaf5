#include "dpu/dataset.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dpu/error.hpp"

namespace dpu {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

FeatureMatrix::FeatureMatrix(std::size_t cols, std::vector<double> values)
    : cols_(cols), values_(std::move(values)) {
  if (cols_ == 0) {
    if (!values_.empty()) throw DataError("feature matrix with zero columns");
    return;
  }
  if (values_.size() % cols_ != 0) {
    throw DataError(fmt::format("{} values do not fill rows of {} columns",
                                values_.size(), cols_));
  }
  rows_ = values_.size() / cols_;
}

void FeatureMatrix::append_row(std::span<const double> x) {
  if (rows_ == 0 && cols_ == 0) cols_ = x.size();
  if (x.size() != cols_) {
    throw DataError(fmt::format("row of dimension {} appended to a matrix with {} columns",
                                x.size(), cols_));
  }
  values_.insert(values_.end(), x.begin(), x.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::gather(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (const std::size_t i : indices) {
    const auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  if (cols_ == 0) return {};
  return FeatureMatrix(cols_, std::move(out));
}

void FeatureMatrix::require_finite(const char* what) const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw DataError(fmt::format("{}: non-finite feature at row {}, column {}", what,
                                  k / cols_, k % cols_));
    }
  }
}

void PuTriple::validate() const {
  const struct {
    const FeatureMatrix& m;
    const char* name;
  } sets[] = {{positive_interest, "positive-interest data"},
              {unlabeled, "unlabeled data"},
              {positive_loyal, "positive-loyal data"}};
  for (const auto& s : sets) {
    if (s.m.empty()) throw DataError(fmt::format("{} is empty", s.name));
    if (s.m.cols() != unlabeled.cols()) {
      throw DataError(fmt::format("{} has dimension {} but unlabeled data has {}", s.name,
                                  s.m.cols(), unlabeled.cols()));
    }
    s.m.require_finite(s.name);
  }
}

FeatureMatrix features_of(std::span<const LabeledSample> samples) {
  FeatureMatrix m;
  for (const auto& s : samples) m.append_row(s.x);
  return m;
}

std::pair<FeatureMatrix, FeatureMatrix> partition_by_w(
    std::span<const LabeledSample> samples) {
  FeatureMatrix positive, negative;
  for (const auto& s : samples) (s.w() == 1 ? positive : negative).append_row(s.x);
  return {std::move(positive), std::move(negative)};
}

}  // namespace dpu
