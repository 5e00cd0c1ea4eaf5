#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "dpu/error.hpp"

namespace dpu {

/// Margin losses. Squared, Log, Logistic and Hinge are surrogates; ZeroOne is
/// the evaluation loss and cannot be trained on.
enum class SurrogateLoss { Squared, Log, Logistic, Hinge, ZeroOne };

std::string_view to_string(SurrogateLoss loss);

/// Parses "squared" | "log" | "logistic" | "hinge" | "zero_one".
SurrogateLoss parse_loss(std::string_view name);

/// Losses accepted by the trainer (Squared, Logistic, Hinge).
bool is_trainable(SurrogateLoss loss);

namespace detail {
[[noreturn]] void throw_nan_margin(SurrogateLoss loss);
[[noreturn]] void throw_log_domain(double z);
[[noreturn]] void throw_not_trainable(SurrogateLoss loss);
}  // namespace detail

/// l(z). Log loss is only defined on (0, 1); NaN margins are rejected for
/// every loss.
inline double loss_value(SurrogateLoss loss, double z) {
  if (std::isnan(z)) detail::throw_nan_margin(loss);
  switch (loss) {
    case SurrogateLoss::Squared:
      return (z - 1.0) * (z - 1.0);
    case SurrogateLoss::Log:
      if (!(z > 0.0 && z < 1.0)) detail::throw_log_domain(z);
      return -std::log(z);
    case SurrogateLoss::Logistic:
      // log(1 + e^{-z}) without overflow for large |z|.
      return z >= 0.0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    case SurrogateLoss::Hinge:
      return z < 1.0 ? 1.0 - z : 0.0;
    case SurrogateLoss::ZeroOne:
      // (sgn(-z) + 1) / 2 with sgn(0) = 0.
      if (z < 0.0) return 1.0;
      if (z > 0.0) return 0.0;
      return 0.5;
  }
  return 0.0;
}

/// dl/dz. Hinge uses subgradient 0 at the kink z = 1.
inline double loss_grad(SurrogateLoss loss, double z) {
  if (std::isnan(z)) detail::throw_nan_margin(loss);
  switch (loss) {
    case SurrogateLoss::Squared:
      return 2.0 * (z - 1.0);
    case SurrogateLoss::Log:
      if (!(z > 0.0 && z < 1.0)) detail::throw_log_domain(z);
      return -1.0 / z;
    case SurrogateLoss::Logistic:
      if (z >= 0.0) {
        const double e = std::exp(-z);
        return -e / (1.0 + e);
      }
      return -1.0 / (1.0 + std::exp(z));
    case SurrogateLoss::Hinge:
      return z < 1.0 ? -1.0 : 0.0;
    case SurrogateLoss::ZeroOne:
      detail::throw_not_trainable(loss);
  }
  return 0.0;
}

}  // namespace dpu
