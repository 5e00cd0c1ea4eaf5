#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace dpu {

/// Linear scorer g(x) = w.x + b.
class LinearScorer {
 public:
  LinearScorer() = default;
  /// Zero weights and bias.
  explicit LinearScorer(std::size_t dim);
  /// Throws DataError on non-finite parameters.
  LinearScorer(std::vector<double> weights, double bias);

  std::size_t dim() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double bias() const noexcept { return bias_; }

  /// w.x + b. Throws DataError when x has the wrong dimension.
  double score(std::span<const double> x) const;

  /// Same as score() without the dimension check; x must have dim() entries.
  double score_unchecked(const double* x) const noexcept {
    double s = bias_;
    for (std::size_t j = 0; j < weights_.size(); ++j) s += weights_[j] * x[j];
    return s;
  }

  /// +1 if score > threshold, -1 otherwise (ties go to -1).
  int predict(std::span<const double> x, double threshold = 0.0) const;

  /// sigma(score): the logistic-link posterior p(w = +1 | x).
  double posterior(std::span<const double> x) const;

  friend bool operator==(const LinearScorer&, const LinearScorer&) = default;

 private:
  std::vector<double> weights_;
  double bias_ = 0.0;
};

/// Logistic sigmoid, stable for large |s|.
double sigmoid(double s) noexcept;

/// Writes the `dpu-linear v1` text format. A non-empty `comment` is emitted
/// first as a `# ...` line.
void save_model(std::ostream& out, const LinearScorer& model,
                std::string_view comment = {});
void save_model(const std::filesystem::path& path, const LinearScorer& model,
                std::string_view comment = {});

/// Reads the `dpu-linear v1` format, skipping leading `#` lines.
LinearScorer load_model(std::istream& in);
LinearScorer load_model(const std::filesystem::path& path);

}  // namespace dpu
