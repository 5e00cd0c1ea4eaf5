#include "dpu/losses.hpp"

#include <fmt/format.h>

namespace dpu {

std::string_view to_string(SurrogateLoss loss) {
  switch (loss) {
    case SurrogateLoss::Squared: return "squared";
    case SurrogateLoss::Log: return "log";
    case SurrogateLoss::Logistic: return "logistic";
    case SurrogateLoss::Hinge: return "hinge";
    case SurrogateLoss::ZeroOne: return "zero_one";
  }
  return "unknown";
}

SurrogateLoss parse_loss(std::string_view name) {
  if (name == "squared") return SurrogateLoss::Squared;
  if (name == "log") return SurrogateLoss::Log;
  if (name == "logistic") return SurrogateLoss::Logistic;
  if (name == "hinge") return SurrogateLoss::Hinge;
  if (name == "zero_one") return SurrogateLoss::ZeroOne;
  throw DataError(fmt::format(
      "unknown loss '{}' (expected squared, log, logistic, hinge or zero_one)", name));
}

bool is_trainable(SurrogateLoss loss) {
  return loss == SurrogateLoss::Squared || loss == SurrogateLoss::Logistic ||
         loss == SurrogateLoss::Hinge;
}

namespace detail {

void throw_nan_margin(SurrogateLoss loss) {
  throw DomainError(fmt::format("{} loss evaluated at a NaN margin", to_string(loss)));
}

void throw_log_domain(double z) {
  throw DomainError(
      fmt::format("log loss is only defined on (0, 1); got z = {:.17g}", z));
}

void throw_not_trainable(SurrogateLoss loss) {
  throw DomainError(fmt::format(
      "{} loss has no usable derivative and cannot be used for training",
      to_string(loss)));
}

}  // namespace detail
}  // namespace dpu
