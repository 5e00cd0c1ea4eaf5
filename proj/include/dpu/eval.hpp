#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dpu/data.hpp"
#include "dpu/model.hpp"
#include "dpu/risk.hpp"

namespace dpu {

/// ROC-AUC as the Mann-Whitney statistic: the probability that a random
/// positive (+1) outscores a random negative (-1), ties counting 1/2. Uses
/// average ranks, O(n log n). Throws DataError on length mismatch, labels
/// other than +/-1, or a single-class input.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

/// ROC curve from (0, 0) to (1, 1). Each point after the first predicts +1
/// for scores >= threshold; tied scores enter together.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

struct EvalReport {
  std::optional<double> auc;  ///< absent when the test set has one W class
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  double cost_weighted_error = 0.0;  ///< (c_fn * fn + c_fp * fp) / n
  double zero_one_risk = 0.0;        ///< empirical zero-one risk of g on W labels

  std::size_t n() const noexcept { return tp + fp + tn + fn; }
  double accuracy() const noexcept {
    return n() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n());
  }
};

/// Scores `test` against W labels derived from (y, z). Confusion counts use
/// LinearScorer::predict's tie rule (score == threshold predicts -1).
EvalReport evaluate(const LinearScorer& model, std::span<const LabeledSample> test,
                    double threshold = 0.0, double c_fn = 1.0, double c_fp = 1.0);

struct BiasCheckOptions {
  SplitConfig split;                   ///< seed is ignored; each resample derives its own
  std::size_t resamples = 200;         ///< R, at least 30
  std::size_t oracle_size = 1'000'000; ///< labeled rows for the oracle, at least 1e5
  std::uint64_t seed = 0;
};

struct BiasCheckResult {
  double mean_risk = 0.0;
  double std_error = 0.0;  ///< sample std / sqrt(R)
  double oracle_risk = 0.0;
  double z_score = 0.0;    ///< (mean_risk - oracle_risk) / std_error
  std::vector<double> risks;
};

/// Monte-Carlo unbiasedness check. Draws R independent populations from
/// `generator`, partially labels each with `options.split`, evaluates the
/// double-PU risk of the fixed `model` on every triple (priors come from the
/// generator's component counts), and compares the mean to the oracle risk on
/// a large fully labeled draw. Resamples run in parallel on sub-seeds derived
/// from options.seed; aggregation is in resample order.
BiasCheckResult bias_check(const MixtureConfig& generator, const LinearScorer& model,
                           const RiskSpec& spec, const BiasCheckOptions& options);

}  // namespace dpu
