#include "dpu/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "dpu/error.hpp"
#include "dpu/kernels.hpp"
#include "dpu/rng.hpp"

namespace dpu {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels,
                  std::size_t& positives, std::size_t& negatives) {
  if (scores.size() != labels.size()) {
    throw DataError(fmt::format("{} scores but {} labels", scores.size(), labels.size()));
  }
  positives = negatives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      ++positives;
    } else if (labels[i] == -1) {
      ++negatives;
    } else {
      throw DataError(fmt::format("label {} at position {} is not -1 or 1", labels[i], i));
    }
    if (std::isnan(scores[i])) throw DataError(fmt::format("score at position {} is NaN", i));
  }
  if (positives == 0 || negatives == 0) {
    throw DataError("ROC-AUC needs both positive and negative labels");
  }
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos = 0, n_neg = 0;
  check_inputs(scores, labels, n_pos, n_neg);
  const auto order = order_by_score(scores);

  // Sum of 1-based average ranks of the positives.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += avg_rank;
    }
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  std::size_t n_pos = 0, n_neg = 0;
  check_inputs(scores, labels, n_pos, n_neg);
  auto order = order_by_score(scores);
  std::reverse(order.begin(), order.end());

  std::vector<RocPoint> curve;
  curve.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                     static_cast<double>(tp) / static_cast<double>(n_pos), threshold});
  }
  return curve;
}

EvalReport evaluate(const LinearScorer& model, std::span<const LabeledSample> test,
                    double threshold, double c_fn, double c_fp) {
  if (test.empty()) throw DataError("test set is empty");
  if (!(c_fn >= 0.0 && c_fp >= 0.0)) throw DataError("costs must be >= 0");
  EvalReport r;
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(test.size());
  labels.reserve(test.size());
  std::vector<double> zero_one;
  zero_one.reserve(test.size());
  for (const auto& s : test) {
    const double g = model.score(s.x);
    const int w = s.w();
    const int predicted = g > threshold ? 1 : -1;
    if (w == 1) {
      (predicted == 1 ? r.tp : r.fn) += 1;
      zero_one.push_back(loss_value(SurrogateLoss::ZeroOne, g));
    } else {
      (predicted == 1 ? r.fp : r.tn) += 1;
      zero_one.push_back(loss_value(SurrogateLoss::ZeroOne, -g));
    }
    scores.push_back(g);
    labels.push_back(w);
  }
  const double n = static_cast<double>(test.size());
  r.cost_weighted_error =
      (c_fn * static_cast<double>(r.fn) + c_fp * static_cast<double>(r.fp)) / n;
  r.zero_one_risk = empirical_term(zero_one);
  if (r.tp + r.fn > 0 && r.fp + r.tn > 0) r.auc = roc_auc(scores, labels);
  return r;
}

BiasCheckResult bias_check(const MixtureConfig& generator, const LinearScorer& model,
                           const RiskSpec& spec, const BiasCheckOptions& options) {
  if (options.resamples < 30) {
    throw DataError(fmt::format("bias check needs at least 30 resamples (got {})",
                                options.resamples));
  }
  if (options.oracle_size < 100'000) {
    throw DataError(fmt::format("oracle sample needs at least 100000 rows (got {})",
                                options.oracle_size));
  }
  generator.validate();
  spec.validate();
  if (generator.dim() != model.dim()) {
    throw DataError(fmt::format("generator has dimension {} but the model expects {}",
                                generator.dim(), model.dim()));
  }
  const ClassPriors priors = generator.priors();

  // Oracle on a large labeled draw with the generator's proportions.
  MixtureConfig oracle_config = generator.scaled(
      static_cast<double>(options.oracle_size) / static_cast<double>(generator.total_count()));
  oracle_config.seed = derive_seed(options.seed, 0);
  const auto oracle_sample = generate_mixture(oracle_config);
  const auto [pos_w, neg_w] = partition_by_w(oracle_sample);

  BiasCheckResult result;
  result.oracle_risk = oracle_risk(model, pos_w, neg_w, priors.alpha(), spec.loss);
  if (spec.estimator == Estimator::CostSensitive) {
    // Cost-weighted population risk: c_fn alpha E+[l(g)] + c_fp (1 - alpha) E-[l(-g)].
    const double alpha = priors.alpha();
    const auto pos = accumulate_moments(pos_w, model, spec.loss, false);
    const auto neg = accumulate_moments(neg_w, model, spec.loss, false);
    result.oracle_risk =
        spec.c_fn * alpha * pos.mean_pos + spec.c_fp * (1.0 - alpha) * neg.mean_neg;
  }
  result.risks.assign(options.resamples, 0.0);
  std::vector<std::exception_ptr> errors(options.resamples);

  const auto resamples = static_cast<std::ptrdiff_t>(options.resamples);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < resamples; ++r) {
    const auto ur = static_cast<std::uint64_t>(r);
    try {
      MixtureConfig draw = generator;
      draw.seed = derive_seed(options.seed, 2 * ur + 1);
      SplitConfig split = options.split;
      split.seed = derive_seed(options.seed, 2 * ur + 2);
      const auto pu = split_to_pu(generate_mixture(draw), split);
      result.risks[static_cast<std::size_t>(r)] =
          double_pu_risk(model, pu.triple, priors, spec).value;
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const double R = static_cast<double>(options.resamples);
  result.mean_risk = empirical_term(result.risks);
  std::vector<double> sq(result.risks.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double dev = result.risks[i] - result.mean_risk;
    sq[i] = dev * dev;
  }
  const double sd = std::sqrt(pairwise_sum(sq) / (R - 1.0));
  result.std_error = sd / std::sqrt(R);
  const double gap = result.mean_risk - result.oracle_risk;
  if (result.std_error > 0.0) {
    result.z_score = gap / result.std_error;
  } else {
    result.z_score = gap == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), gap);
  }
  return result;
}

}  // namespace dpu
