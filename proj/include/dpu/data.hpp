#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dpu/dataset.hpp"
#include "dpu/risk.hpp"

namespace dpu {

/// One Gaussian component of a synthetic population, tagged with its (y, z).
struct GaussianComponent {
  std::string name;
  std::vector<double> mean;
  std::vector<double> covariance;  ///< row-major d x d, symmetric positive definite
  std::size_t count = 0;
  int y = -1;
  int z = -1;
};

struct MixtureConfig {
  std::vector<GaussianComponent> components;
  std::uint64_t seed = 0;

  /// The simulation layout: 500 (+1,-1) points around (0, 2), 1000 (+1,+1)
  /// around (2, 0) and 1000 (-1,-1) around (-2, -2), identity covariances.
  static MixtureConfig default_simulation(std::uint64_t seed = 0);

  std::size_t dim() const;
  std::size_t total_count() const;
  /// Same components with every count multiplied by `factor` (floored).
  MixtureConfig scaled(double factor) const;
  /// Population priors implied by the component counts.
  ClassPriors priors() const;
  /// Throws DataError on inconsistent dimensions, bad labels or non-SPD covariances.
  void validate() const;
};

/// Draws every component's `count` points in component order from a single
/// seeded stream (Box-Muller normals, Cholesky colouring).
std::vector<LabeledSample> generate_mixture(const MixtureConfig& config);

/// Which pool positive-loyal rows are drawn from.
enum class LoyalPool {
  LabeledPositives,  ///< (+1,+1) rows that were drawn into positive_interest
  AllInterestLoyal,  ///< every (+1,+1) row
};

struct SplitConfig {
  double y_label_frac = 0.7;
  double z_label_frac = 0.5;
  LoyalPool loyal_pool = LoyalPool::LabeledPositives;
  /// Fraction of rows set aside, fully labeled, before any labeling.
  double holdout_frac = 0.0;
  std::uint64_t seed = 0;
};

struct PuSplit {
  PuTriple triple;
  std::vector<LabeledSample> held_out;
};

/// Fraction-to-count rule: floor(frac * n), at least 1. frac = 0 or n = 0
/// is an error because every observed set needs at least one row.
std::size_t labeled_count(double frac, std::size_t n, const char* what);

/// Partial labeling of a fully labeled sample:
///  - positive_interest: y_label_frac of the y = +1 rows, uniformly at random;
///  - positive_loyal: z_label_frac of the loyal pool (see LoyalPool);
///  - unlabeled: every non-held-out row (the marginal sample).
/// y = -1 rows are never labeled. Rows keep their input order inside each set.
PuSplit split_to_pu(std::span<const LabeledSample> samples, const SplitConfig& config);

/// beta = #(y = +1) / n, gamma = #(y = +1, z = +1) / n, validated by ClassPriors.
ClassPriors empirical_priors(std::span<const LabeledSample> samples);

/// Row filters for the generic three-way split.
enum class RowFilter { Any, InterestPositive, InterestLoyalPositive };

std::string_view to_string(RowFilter filter);
/// Parses "any" | "y_pos" | "yz_pos".
RowFilter parse_row_filter(std::string_view name);

/// Train/test split followed by a three-part division of the training rows.
/// Part i keeps `fractions[i]` of the training rows, filtered by `filters[i]`,
/// and becomes positive_interest, unlabeled and positive_loyal respectively.
struct ThreeWaySplitConfig {
  double test_frac = 0.2;
  std::array<double, 3> fractions{0.1, 0.1, 0.8};
  std::array<RowFilter, 3> filters{RowFilter::InterestPositive, RowFilter::Any,
                                   RowFilter::InterestLoyalPositive};
  std::uint64_t seed = 0;
};

struct ThreeWaySplit {
  PuTriple triple;
  std::vector<LabeledSample> test;
};

ThreeWaySplit three_way_split(std::span<const LabeledSample> samples,
                              const ThreeWaySplitConfig& config);

// CSV ---------------------------------------------------------------------

enum class CsvSchema {
  FeaturesOnly,  ///< columns f0..f{d-1}; trailing y, z columns are ignored
  FullyLabeled,  ///< columns f0..f{d-1}, y, z with labels in {-1, 1}
};

struct CsvDataset {
  FeatureMatrix features;
  std::vector<int> y;  ///< empty for FeaturesOnly
  std::vector<int> z;

  std::vector<LabeledSample> labeled() const;
};

/// Comma-separated, header row, `#` comment lines skipped. Errors name the
/// file and the 1-based line number.
CsvDataset read_csv(std::istream& in, CsvSchema schema, std::string_view source = "<stream>");
CsvDataset load_csv(const std::filesystem::path& path, CsvSchema schema);

/// Writers use 17 significant digits so values round-trip exactly. A
/// non-empty `comment` is written first as a `# ...` line.
void write_features_csv(std::ostream& out, const FeatureMatrix& x, std::string_view comment = {});
void write_labeled_csv(std::ostream& out, std::span<const LabeledSample> samples,
                       std::string_view comment = {});
void save_features_csv(const std::filesystem::path& path, const FeatureMatrix& x,
                       std::string_view comment = {});
void save_labeled_csv(const std::filesystem::path& path, std::span<const LabeledSample> samples,
                      std::string_view comment = {});

}  // namespace dpu
