#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpu/data.hpp"
#include "dpu/risk.hpp"
#include "dpu/train.hpp"

namespace dpu {

/// Plain-text `key = value` experiment configuration. `#` starts a comment;
/// blank lines are ignored. Later assignments override earlier ones, across
/// files as well as within one.
///
///   seed = 7
///   mixture.potential.mean = 0, 2
///   mixture.potential.cov  = 1, 0, 0, 1
///   mixture.potential.count = 500
///   mixture.potential.y = 1
///   mixture.potential.z = -1
///   split.y_label_frac = 0.7
///   risk.loss = logistic
///   train.epochs = 500
class KeyValueConfig {
 public:
  void load(const std::filesystem::path& path);
  void parse(std::istream& in, std::string_view source);
  void set(std::string key, std::string value);

  bool has(std::string_view key) const;
  std::optional<std::string> find(std::string_view key) const;

  std::string get_string(std::string_view key, std::string_view fallback) const;
  double get_double(std::string_view key, double fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  int get_int(std::string_view key, int fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_doubles(std::string_view key) const;
  std::vector<std::string> get_strings(std::string_view key) const;

  /// Keys in first-assignment order.
  const std::vector<std::string>& keys() const noexcept { return order_; }

  /// Throws DataError naming the first key that no command understands.
  void check_known_keys() const;

 private:
  std::string where(std::string_view key) const;

  std::vector<std::string> order_;
  std::vector<std::pair<std::string, std::string>> values_;
  std::vector<std::pair<std::string, std::string>> origins_;
};

/// `mixture.<name>.*` components in declaration order, or the default
/// simulation layout when none are declared.
MixtureConfig mixture_config(const KeyValueConfig& cfg, std::uint64_t seed);
SplitConfig split_config(const KeyValueConfig& cfg, std::uint64_t seed);
ThreeWaySplitConfig three_way_config(const KeyValueConfig& cfg, std::uint64_t seed);
RiskSpec risk_spec(const KeyValueConfig& cfg);
TrainConfig train_config(const KeyValueConfig& cfg, std::uint64_t seed);
/// priors.beta and priors.gamma, or nothing if neither is set.
std::optional<ClassPriors> class_priors(const KeyValueConfig& cfg);

/// Writes `priors.beta` / `priors.gamma` lines readable by KeyValueConfig.
void write_priors(std::ostream& out, const ClassPriors& priors, std::string_view comment = {});

}  // namespace dpu
