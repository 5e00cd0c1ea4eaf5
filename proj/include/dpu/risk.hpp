#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "dpu/dataset.hpp"
#include "dpu/losses.hpp"
#include "dpu/model.hpp"

namespace dpu {

/// beta = p(y = +1), gamma = p(y = +1, z = +1); alpha = beta - gamma = p(w = +1).
class ClassPriors {
 public:
  /// Requires 0 < gamma <= beta < 1. Throws DataError otherwise.
  ClassPriors(double beta, double gamma);

  /// gamma = 0: the loyalty terms vanish and the double-PU risk reduces to the
  /// standard PU risk. Requires 0 < beta < 1.
  static ClassPriors standard_pu(double beta);

  double beta() const noexcept { return beta_; }
  double gamma() const noexcept { return gamma_; }
  double alpha() const noexcept { return beta_ - gamma_; }

 private:
  ClassPriors() = default;
  double beta_ = 0.0;
  double gamma_ = 0.0;
};

enum class Estimator { Unbiased, NonNegative, CostSensitive };

std::string_view to_string(Estimator estimator);
/// Parses "unbiased" | "non_negative" | "cost_sensitive".
Estimator parse_estimator(std::string_view name);

/// Which estimator to evaluate, with which loss and costs.
struct RiskSpec {
  Estimator estimator = Estimator::Unbiased;
  SurrogateLoss loss = SurrogateLoss::Logistic;
  double c_fn = 1.0;
  double c_fp = 1.0;
  /// NonNegative only: also clamp the interest bracket t1 + t2 at zero.
  bool clamp_positive_part = false;

  static RiskSpec unbiased(SurrogateLoss loss);
  static RiskSpec non_negative(SurrogateLoss loss, bool clamp_positive_part = false);
  static RiskSpec cost_sensitive(SurrogateLoss loss, double c_fn, double c_fp);

  /// Costs must be 1 unless CostSensitive, finite and >= 0 otherwise.
  void validate() const;
};

/// The five sample-average terms of the double-PU risk:
///   t1 =  beta  * E_P[l(g)]     t2 = -gamma * E_L[l(g)]
///   t3 =          E_U[l(-g)]    t4 = -beta  * E_P[l(-g)]
///   t5 =  gamma * E_L[l(-g)]
/// P = positive-interest, U = unlabeled, L = positive-loyal.
struct TermBreakdown {
  double t1 = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double t4 = 0.0;
  double t5 = 0.0;

  /// t1 + t2: the part charged to false negatives.
  double interest_bracket() const noexcept { return t1 + t2; }
  /// t3 + t4: the bracket the non-negative correction clamps.
  double unlabeled_bracket() const noexcept { return t3 + t4; }
  /// Unbiased total, summed as (t1 + t2) + ((t3 + t4) + t5).
  double total() const noexcept { return interest_bracket() + (unlabeled_bracket() + t5); }
};

struct RiskValue {
  double value = 0.0;
  TermBreakdown terms;
};

/// Gradient of a risk with respect to the scorer parameters.
struct RiskGradient {
  std::vector<double> weights;
  double bias = 0.0;
  RiskValue risk;

  double norm() const noexcept;
};

/// Arithmetic mean (pairwise summation). Throws DataError when empty.
double empirical_term(std::span<const double> values);

/// Combines the five terms according to spec.estimator:
///   Unbiased       (t1 + t2) + ((t3 + t4) + t5)
///   NonNegative    (t1 + t2) + (max{0, t3 + t4} + t5)
///                  with clamp_positive_part: max{0, t1 + t2} in the first bracket
///   CostSensitive  c_fn (t1 + t2) + c_fp ((t3 + t4) + t5)
double combine_terms(const TermBreakdown& terms, const RiskSpec& spec);

/// Double-PU empirical risk of `model` on `data` under `spec`, with its
/// five-term breakdown.
RiskValue double_pu_risk(const LinearScorer& model, const PuTriple& data,
                         const ClassPriors& priors, const RiskSpec& spec);

/// Standard unbiased PU risk t1 + (t3 + t4), i.e.
/// beta E_P[l(g)] + (E_U[l(-g)] - beta E_P[l(-g)]). Accepts 0 <= beta < 1.
double pu_risk(const LinearScorer& model, const FeatureMatrix& positive_interest,
               const FeatureMatrix& unlabeled, double beta, SurrogateLoss loss);

/// Risk on ground-truth W labels:
/// alpha E_{W=+1}[l(g)] + (1 - alpha) E_{W=-1}[l(-g)]. Requires 0 < alpha < 1.
double oracle_risk(const LinearScorer& model, const FeatureMatrix& positive_w,
                   const FeatureMatrix& negative_w, double alpha, SurrogateLoss loss);

/// Exact gradient of double_pu_risk. For NonNegative a clamped bracket
/// contributes zero gradient while it is strictly negative; at exactly zero the
/// unclamped branch is used.
RiskGradient risk_gradient(const LinearScorer& model, const PuTriple& data,
                           const ClassPriors& priors, const RiskSpec& spec);

/// Gradient of pu_risk.
RiskGradient pu_risk_gradient(const LinearScorer& model, const FeatureMatrix& positive_interest,
                              const FeatureMatrix& unlabeled, double beta, SurrogateLoss loss);

}  // namespace dpu
