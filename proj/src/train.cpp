#include "dpu/train.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dpu/error.hpp"
#include "dpu/rng.hpp"

namespace dpu {

void TrainConfig::validate() const {
  spec.validate();
  if (!is_trainable(spec.loss)) detail::throw_not_trainable(spec.loss);
  if (!(std::isfinite(learning_rate) && learning_rate >= 0.0)) {
    throw DataError(fmt::format("learning rate must be finite and >= 0 (got {})", learning_rate));
  }
  if (epochs == 0) throw DataError("epochs must be >= 1");
  if (minibatch_size && *minibatch_size == 0) throw DataError("minibatch size must be >= 1");
  if (!(std::isfinite(l2_penalty) && l2_penalty >= 0.0)) {
    throw DataError(fmt::format("l2 penalty must be finite and >= 0 (got {})", l2_penalty));
  }
  if (init == Init::SeededGaussian && !(std::isfinite(init_scale) && init_scale >= 0.0)) {
    throw DataError(fmt::format("init scale must be finite and >= 0 (got {})", init_scale));
  }
}

namespace {

LinearScorer initial_model(std::size_t dim, const TrainConfig& config) {
  if (config.init == Init::Zeros) return LinearScorer(dim);
  Rng rng(derive_seed(config.seed, 0));
  std::vector<double> w(dim);
  for (auto& v : w) v = config.init_scale * rng.normal();
  return LinearScorer(std::move(w), 0.0);
}

// Objective gradient on a batch, L2 term included.
using GradientFn = std::function<RiskGradient(const LinearScorer&, bool full_batch)>;

void add_l2(RiskGradient& g, const LinearScorer& model, double l2) {
  if (l2 == 0.0) return;
  for (std::size_t j = 0; j < g.weights.size(); ++j) g.weights[j] += l2 * model.weights()[j];
}

LinearScorer step(const LinearScorer& model, const RiskGradient& g, double lr,
                  std::size_t epoch) {
  std::vector<double> w(model.weights().begin(), model.weights().end());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g.weights[j];
  const double b = model.bias() - lr * g.bias;
  const bool finite = std::isfinite(b) && std::all_of(w.begin(), w.end(), [](double v) {
                        return std::isfinite(v);
                      });
  if (!finite) {
    throw NumericalError(fmt::format(
        "training diverged at epoch {}: parameters became non-finite "
        "(try a smaller learning rate or an L2 penalty)",
        epoch));
  }
  return LinearScorer(std::move(w), b);
}

struct TraceSource {
  std::function<RiskGradient(const LinearScorer&)> full_gradient;
  std::function<double(const RiskGradient&)> unbiased;
  Estimator estimator;
};

TraceEntry make_entry(std::size_t epoch, const RiskGradient& g, const TraceSource& src) {
  TraceEntry e;
  e.epoch = epoch;
  e.risk = g.risk.value;
  e.unbiased_risk = src.unbiased(g);
  e.bracket = g.risk.terms.unlabeled_bracket();
  e.clamped_bracket =
      src.estimator == Estimator::NonNegative ? std::max(0.0, e.bracket) : e.bracket;
  e.grad_norm = g.norm();
  if (!std::isfinite(e.risk) || !std::isfinite(e.grad_norm)) {
    throw NumericalError(fmt::format("training diverged at epoch {}: risk or gradient is not finite",
                                     epoch));
  }
  return e;
}

// Gradient descent loop shared by the double-PU and standard PU trainers.
// `minibatch_gradient(model, rng)` is only called when minibatches are on.
TrainResult descend(LinearScorer model, const TrainConfig& config, const TraceSource& src,
                    std::size_t steps_per_epoch,
                    const std::function<RiskGradient(const LinearScorer&, Rng&)>& minibatch_gradient) {
  TrainResult result;
  result.trace.reserve(config.epochs);
  RiskGradient current = src.full_gradient(model);
  Rng rng(derive_seed(config.seed, 1));
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (!config.minibatch_size) {
      model = step(model, current, config.learning_rate, epoch);
    } else {
      for (std::size_t s = 0; s < steps_per_epoch; ++s) {
        model = step(model, minibatch_gradient(model, rng), config.learning_rate, epoch);
      }
    }
    current = src.full_gradient(model);
    result.trace.push_back(make_entry(epoch, current, src));
  }
  result.model = std::move(model);
  return result;
}

// Independent per-dataset minibatch sampling without replacement.
class BatchSampler {
 public:
  BatchSampler(const FeatureMatrix& data, std::size_t batch) : data_(data), batch_(batch) {
    order_.resize(data.rows());
    std::iota(order_.begin(), order_.end(), 0);
    cursor_ = order_.size();
  }

  FeatureMatrix next(Rng& rng) {
    std::vector<std::size_t> idx;
    idx.reserve(batch_);
    while (idx.size() < batch_) {
      if (cursor_ == order_.size()) {
        rng.shuffle(std::span<std::size_t>(order_));
        cursor_ = 0;
      }
      idx.push_back(order_[cursor_++]);
    }
    return data_.gather(idx);
  }

 private:
  const FeatureMatrix& data_;
  std::size_t batch_;
  std::vector<std::size_t> order_;
  std::size_t cursor_;
};

std::size_t share(std::size_t total_batch, std::size_t rows, std::size_t all_rows) {
  const auto k = static_cast<std::size_t>(std::floor(
      static_cast<double>(total_batch) * static_cast<double>(rows) / static_cast<double>(all_rows)));
  return std::clamp<std::size_t>(k, 1, rows);
}

std::size_t steps_for(std::size_t all_rows, std::optional<std::size_t> batch) {
  if (!batch) return 1;
  return std::max<std::size_t>(1, (all_rows + *batch - 1) / *batch);
}

}  // namespace

TrainResult train(const PuTriple& data, const ClassPriors& priors, const TrainConfig& config) {
  config.validate();
  data.validate();
  const RiskSpec spec = config.spec;
  const RiskSpec unbiased = RiskSpec::unbiased(spec.loss);

  TraceSource src;
  src.estimator = spec.estimator;
  src.full_gradient = [&](const LinearScorer& m) {
    RiskGradient g = risk_gradient(m, data, priors, spec);
    add_l2(g, m, config.l2_penalty);
    return g;
  };
  src.unbiased = [&](const RiskGradient& g) { return combine_terms(g.risk.terms, unbiased); };

  const std::size_t all_rows =
      data.positive_interest.rows() + data.unlabeled.rows() + data.positive_loyal.rows();
  std::optional<BatchSampler> p, u, l;
  if (config.minibatch_size) {
    const std::size_t b = *config.minibatch_size;
    p.emplace(data.positive_interest, share(b, data.positive_interest.rows(), all_rows));
    u.emplace(data.unlabeled, share(b, data.unlabeled.rows(), all_rows));
    l.emplace(data.positive_loyal, share(b, data.positive_loyal.rows(), all_rows));
  }
  auto minibatch = [&](const LinearScorer& m, Rng& rng) {
    PuTriple batch{p->next(rng), u->next(rng), l->next(rng)};
    RiskGradient g = risk_gradient(m, batch, priors, spec);
    add_l2(g, m, config.l2_penalty);
    return g;
  };
  return descend(initial_model(data.dim(), config), config, src,
                 steps_for(all_rows, config.minibatch_size), minibatch);
}

TrainResult train_pu(const FeatureMatrix& positive_interest, const FeatureMatrix& unlabeled,
                     double beta, const TrainConfig& config) {
  config.validate();
  if (config.spec.estimator != Estimator::Unbiased) {
    throw DataError("the standard PU trainer only supports the unbiased estimator");
  }
  const SurrogateLoss loss = config.spec.loss;

  TraceSource src;
  src.estimator = Estimator::Unbiased;
  src.full_gradient = [&](const LinearScorer& m) {
    RiskGradient g = pu_risk_gradient(m, positive_interest, unlabeled, beta, loss);
    add_l2(g, m, config.l2_penalty);
    return g;
  };
  src.unbiased = [](const RiskGradient& g) { return g.risk.value; };

  const std::size_t all_rows = positive_interest.rows() + unlabeled.rows();
  std::optional<BatchSampler> p, u;
  if (config.minibatch_size && !positive_interest.empty() && !unlabeled.empty()) {
    const std::size_t b = *config.minibatch_size;
    p.emplace(positive_interest, share(b, positive_interest.rows(), all_rows));
    u.emplace(unlabeled, share(b, unlabeled.rows(), all_rows));
  }
  auto minibatch = [&](const LinearScorer& m, Rng& rng) {
    const FeatureMatrix bp = p->next(rng);
    const FeatureMatrix bu = u->next(rng);
    RiskGradient g = pu_risk_gradient(m, bp, bu, beta, loss);
    add_l2(g, m, config.l2_penalty);
    return g;
  };
  return descend(initial_model(unlabeled.cols(), config), config, src,
                 steps_for(all_rows, config.minibatch_size), minibatch);
}

double train_trace_final_risk(const TrainingTrace& trace) {
  if (trace.empty()) throw DataError("training trace is empty");
  return trace.back().unbiased_risk;
}

void write_trace(std::ostream& out, const TrainingTrace& trace, std::string_view comment) {
  if (!comment.empty()) fmt::print(out, "# {}\n", comment);
  for (const auto& e : trace) {
    fmt::print(out, "{} {:.17g} {:.17g}\n", e.epoch, e.risk, e.grad_norm);
  }
}

}  // namespace dpu
