#include "dpu/risk.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "dpu/error.hpp"
#include "dpu/kernels.hpp"

namespace dpu {

ClassPriors::ClassPriors(double beta, double gamma) : beta_(beta), gamma_(gamma) {
  if (!(gamma > 0.0 && gamma <= beta && beta < 1.0)) {
    throw DataError(fmt::format(
        "invalid class priors beta = {:.17g}, gamma = {:.17g} (need 0 < gamma <= beta < 1)",
        beta, gamma));
  }
}

ClassPriors ClassPriors::standard_pu(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw DataError(fmt::format("invalid class prior beta = {:.17g} (need 0 < beta < 1)", beta));
  }
  ClassPriors p;
  p.beta_ = beta;
  p.gamma_ = 0.0;
  return p;
}

std::string_view to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::Unbiased: return "unbiased";
    case Estimator::NonNegative: return "non_negative";
    case Estimator::CostSensitive: return "cost_sensitive";
  }
  return "unknown";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "unbiased") return Estimator::Unbiased;
  if (name == "non_negative") return Estimator::NonNegative;
  if (name == "cost_sensitive") return Estimator::CostSensitive;
  throw DataError(fmt::format(
      "unknown estimator '{}' (expected unbiased, non_negative or cost_sensitive)", name));
}

RiskSpec RiskSpec::unbiased(SurrogateLoss loss) {
  return RiskSpec{Estimator::Unbiased, loss, 1.0, 1.0, false};
}

RiskSpec RiskSpec::non_negative(SurrogateLoss loss, bool clamp_positive_part) {
  return RiskSpec{Estimator::NonNegative, loss, 1.0, 1.0, clamp_positive_part};
}

RiskSpec RiskSpec::cost_sensitive(SurrogateLoss loss, double c_fn, double c_fp) {
  return RiskSpec{Estimator::CostSensitive, loss, c_fn, c_fp, false};
}

void RiskSpec::validate() const {
  if (estimator == Estimator::CostSensitive) {
    if (!(std::isfinite(c_fn) && c_fn >= 0.0 && std::isfinite(c_fp) && c_fp >= 0.0)) {
      throw DataError(fmt::format("costs must be finite and >= 0 (c_fn = {}, c_fp = {})",
                                  c_fn, c_fp));
    }
  } else if (c_fn != 1.0 || c_fp != 1.0) {
    throw DataError(fmt::format("{} risk requires c_fn = c_fp = 1 (got {}, {})",
                                to_string(estimator), c_fn, c_fp));
  }
  if (clamp_positive_part && estimator != Estimator::NonNegative) {
    throw DataError("clamp_positive_part only applies to the non_negative estimator");
  }
}

double RiskGradient::norm() const noexcept {
  double s = bias * bias;
  for (const double g : weights) s += g * g;
  return std::sqrt(s);
}

double empirical_term(std::span<const double> values) {
  if (values.empty()) throw DataError("empirical average over an empty sample");
  return pairwise_sum(values) / static_cast<double>(values.size());
}

double combine_terms(const TermBreakdown& t, const RiskSpec& spec) {
  switch (spec.estimator) {
    case Estimator::Unbiased:
      return t.total();
    case Estimator::NonNegative: {
      const double interest =
          spec.clamp_positive_part ? std::max(0.0, t.interest_bracket()) : t.interest_bracket();
      return interest + (std::max(0.0, t.unlabeled_bracket()) + t.t5);
    }
    case Estimator::CostSensitive:
      return spec.c_fn * t.interest_bracket() + spec.c_fp * (t.unlabeled_bracket() + t.t5);
  }
  return t.total();
}

namespace {

struct TripleMoments {
  SetMoments positive, unlabeled, loyal;
};

TripleMoments triple_moments(const LinearScorer& model, const PuTriple& data,
                             const RiskSpec& spec, bool with_gradient) {
  spec.validate();
  data.validate();
  return {accumulate_moments(data.positive_interest, model, spec.loss, with_gradient),
          accumulate_moments(data.unlabeled, model, spec.loss, with_gradient),
          accumulate_moments(data.positive_loyal, model, spec.loss, with_gradient)};
}

TermBreakdown terms_of(const TripleMoments& m, const ClassPriors& priors) {
  const double beta = priors.beta();
  const double gamma = priors.gamma();
  return {beta * m.positive.mean_pos, -gamma * m.loyal.mean_pos, m.unlabeled.mean_neg,
          -beta * m.positive.mean_neg, gamma * m.loyal.mean_neg};
}

void check_beta_pu(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw DataError(fmt::format("invalid class prior beta = {:.17g} (need 0 <= beta < 1)", beta));
  }
}

void check_pair(const FeatureMatrix& a, const char* a_name, const FeatureMatrix& b,
                const char* b_name) {
  if (a.empty()) throw DataError(fmt::format("{} is empty", a_name));
  if (b.empty()) throw DataError(fmt::format("{} is empty", b_name));
  if (a.cols() != b.cols()) {
    throw DataError(fmt::format("{} has dimension {} but {} has {}", a_name, a.cols(), b_name,
                                b.cols()));
  }
}

}  // namespace

RiskValue double_pu_risk(const LinearScorer& model, const PuTriple& data,
                         const ClassPriors& priors, const RiskSpec& spec) {
  const auto m = triple_moments(model, data, spec, false);
  const TermBreakdown terms = terms_of(m, priors);
  return {combine_terms(terms, spec), terms};
}

double pu_risk(const LinearScorer& model, const FeatureMatrix& positive_interest,
               const FeatureMatrix& unlabeled, double beta, SurrogateLoss loss) {
  check_beta_pu(beta);
  check_pair(positive_interest, "positive-interest data", unlabeled, "unlabeled data");
  const auto p = accumulate_moments(positive_interest, model, loss, false);
  const auto u = accumulate_moments(unlabeled, model, loss, false);
  return beta * p.mean_pos + (u.mean_neg + -beta * p.mean_neg);
}

double oracle_risk(const LinearScorer& model, const FeatureMatrix& positive_w,
                   const FeatureMatrix& negative_w, double alpha, SurrogateLoss loss) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DataError(fmt::format("invalid class prior alpha = {:.17g} (need 0 < alpha < 1)", alpha));
  }
  check_pair(positive_w, "W = +1 sample", negative_w, "W = -1 sample");
  const auto pos = accumulate_moments(positive_w, model, loss, false);
  const auto neg = accumulate_moments(negative_w, model, loss, false);
  return alpha * pos.mean_pos + (1.0 - alpha) * neg.mean_neg;
}

RiskGradient risk_gradient(const LinearScorer& model, const PuTriple& data,
                           const ClassPriors& priors, const RiskSpec& spec) {
  if (!is_trainable(spec.loss)) detail::throw_not_trainable(spec.loss);
  const auto m = triple_moments(model, data, spec, true);
  const TermBreakdown terms = terms_of(m, priors);
  const double beta = priors.beta();
  const double gamma = priors.gamma();

  // Gates for the clamped brackets; the unclamped branch is active at zero.
  double interest_gate = 1.0;
  double unlabeled_gate = 1.0;
  if (spec.estimator == Estimator::NonNegative) {
    if (spec.clamp_positive_part && terms.interest_bracket() < 0.0) interest_gate = 0.0;
    if (terms.unlabeled_bracket() < 0.0) unlabeled_gate = 0.0;
  }
  const double c_fn = spec.estimator == Estimator::CostSensitive ? spec.c_fn : 1.0;
  const double c_fp = spec.estimator == Estimator::CostSensitive ? spec.c_fp : 1.0;

  const std::size_t d = model.dim();
  std::vector<double> grad(d + 1);
  for (std::size_t j = 0; j <= d; ++j) {
    const double g1 = beta * m.positive.grad_pos[j];
    const double g2 = -gamma * m.loyal.grad_pos[j];
    const double g3 = m.unlabeled.grad_neg[j];
    const double g4 = -beta * m.positive.grad_neg[j];
    const double g5 = gamma * m.loyal.grad_neg[j];
    const double interest = interest_gate == 0.0 ? 0.0 : (g1 + g2);
    const double unlabeled = unlabeled_gate == 0.0 ? 0.0 : (g3 + g4);
    if (spec.estimator == Estimator::CostSensitive) {
      grad[j] = c_fn * interest + c_fp * (unlabeled + g5);
    } else {
      grad[j] = interest + (unlabeled + g5);
    }
  }
  RiskGradient out;
  out.bias = grad[d];
  grad.pop_back();
  out.weights = std::move(grad);
  out.risk = {combine_terms(terms, spec), terms};
  return out;
}

RiskGradient pu_risk_gradient(const LinearScorer& model, const FeatureMatrix& positive_interest,
                              const FeatureMatrix& unlabeled, double beta, SurrogateLoss loss) {
  check_beta_pu(beta);
  check_pair(positive_interest, "positive-interest data", unlabeled, "unlabeled data");
  if (!is_trainable(loss)) detail::throw_not_trainable(loss);
  const auto p = accumulate_moments(positive_interest, model, loss, true);
  const auto u = accumulate_moments(unlabeled, model, loss, true);
  const std::size_t d = model.dim();
  std::vector<double> grad(d + 1);
  for (std::size_t j = 0; j <= d; ++j) {
    grad[j] = beta * p.grad_pos[j] + (u.grad_neg[j] + -beta * p.grad_neg[j]);
  }
  RiskGradient out;
  out.bias = grad[d];
  grad.pop_back();
  out.weights = std::move(grad);
  const double value = beta * p.mean_pos + (u.mean_neg + -beta * p.mean_neg);
  out.risk.value = value;
  out.risk.terms = {beta * p.mean_pos, 0.0, u.mean_neg, -beta * p.mean_neg, 0.0};
  return out;
}

}  // namespace dpu
