#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "dpu/dataset.hpp"
#include "dpu/model.hpp"
#include "dpu/risk.hpp"

namespace dpu {

enum class Init { Zeros, SeededGaussian };

struct TrainConfig {
  RiskSpec spec;
  double learning_rate = 0.1;
  std::size_t epochs = 100;
  /// Empty: full batch. Otherwise the total minibatch size, shared out over the
  /// three datasets in proportion to J:K:L with at least one row each.
  std::optional<std::size_t> minibatch_size;
  /// (l2_penalty / 2) * ||w||^2 is added to the objective; the bias is not penalised.
  double l2_penalty = 0.0;
  std::uint64_t seed = 0;
  Init init = Init::Zeros;
  double init_scale = 0.01;

  void validate() const;
};

/// State after one epoch, always evaluated on the full datasets.
struct TraceEntry {
  std::size_t epoch = 0;
  double risk = 0.0;            ///< objective under the configured spec (no L2 term)
  double unbiased_risk = 0.0;   ///< plain unbiased double-PU risk
  double bracket = 0.0;         ///< t3 + t4 before any clamping
  double clamped_bracket = 0.0; ///< max{0, t3 + t4} for NonNegative, else t3 + t4
  double grad_norm = 0.0;       ///< full-batch gradient norm, L2 term included
};

using TrainingTrace = std::vector<TraceEntry>;

struct TrainResult {
  LinearScorer model;
  TrainingTrace trace;
};

/// Plain gradient descent on the double-PU risk for a fixed number of epochs.
/// Throws NumericalError naming the epoch if parameters become non-finite.
TrainResult train(const PuTriple& data, const ClassPriors& priors, const TrainConfig& config);

/// The same optimiser on the standard two-sample PU risk (positive-interest vs
/// unlabeled). Only the Unbiased estimator is supported.
TrainResult train_pu(const FeatureMatrix& positive_interest, const FeatureMatrix& unlabeled,
                     double beta, const TrainConfig& config);

/// Last epoch's full-batch unbiased risk. Throws DataError on an empty trace.
double train_trace_final_risk(const TrainingTrace& trace);

/// One `epoch risk grad_norm` line per epoch, after an optional `# ...` comment.
void write_trace(std::ostream& out, const TrainingTrace& trace, std::string_view comment = {});

}  // namespace dpu
