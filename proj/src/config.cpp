#include "dpu/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dpu/error.hpp"

namespace dpu {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

constexpr std::array kKnownKeys = {
    "seed",
    "test.scale",
    "split.protocol",
    "split.y_label_frac",
    "split.z_label_frac",
    "split.loyal_pool",
    "split.holdout_frac",
    "split.test_frac",
    "split.fractions",
    "split.filters",
    "priors.beta",
    "priors.gamma",
    "risk.loss",
    "risk.estimator",
    "risk.c_fn",
    "risk.c_fp",
    "risk.clamp_positive_part",
    "train.learning_rate",
    "train.epochs",
    "train.minibatch_size",
    "train.l2_penalty",
    "train.init",
    "train.init_scale",
    "eval.threshold",
    "bias_check.resamples",
    "bias_check.oracle_size",
    "bias_check.model_scale",
};

constexpr std::array kComponentFields = {"mean", "cov", "count", "y", "z"};

}  // namespace

void KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open config file '{}'", path.string()));
  parse(in, path.string());
}

void KeyValueConfig::parse(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(fmt::format("{}:{}: expected 'key = value', got '{}'", source, line_no, text));
    }
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    if (key.empty()) throw DataError(fmt::format("{}:{}: empty key", source, line_no));
    set(std::string(key), std::string(value));
    origins_.back().second = fmt::format("{}:{}", source, line_no);
  }
}

void KeyValueConfig::set(std::string key, std::string value) {
  if (std::find(order_.begin(), order_.end(), key) == order_.end()) order_.push_back(key);
  values_.emplace_back(key, std::move(value));
  origins_.emplace_back(std::move(key), "command line");
}

bool KeyValueConfig::has(std::string_view key) const { return find(key).has_value(); }

std::optional<std::string> KeyValueConfig::find(std::string_view key) const {
  for (auto it = values_.rbegin(); it != values_.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

std::string KeyValueConfig::where(std::string_view key) const {
  for (auto it = origins_.rbegin(); it != origins_.rend(); ++it) {
    if (it->first == key) return fmt::format("'{}' ({})", key, it->second);
  }
  return fmt::format("'{}'", key);
}

std::string KeyValueConfig::get_string(std::string_view key, std::string_view fallback) const {
  return find(key).value_or(std::string(fallback));
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  double out = 0.0;
  const auto* end = v->data() + v->size();
  const auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end || v->empty()) {
    throw DataError(fmt::format("config key {}: '{}' is not a number", where(key), *v));
  }
  return out;
}

std::uint64_t KeyValueConfig::get_uint(std::string_view key, std::uint64_t fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto* end = v->data() + v->size();
  const auto [ptr, ec] = std::from_chars(v->data(), end, out);
  if (ec != std::errc() || ptr != end || v->empty()) {
    throw DataError(fmt::format("config key {}: '{}' is not a non-negative integer", where(key), *v));
  }
  return out;
}

int KeyValueConfig::get_int(std::string_view key, int fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  std::string_view text = *v;
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  int out = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw DataError(fmt::format("config key {}: '{}' is not an integer", where(key), *v));
  }
  return out;
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "on" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "off" || *v == "no") return false;
  throw DataError(fmt::format("config key {}: '{}' is not a boolean", where(key), *v));
}

std::vector<double> KeyValueConfig::get_doubles(std::string_view key) const {
  const auto v = find(key);
  if (!v) return {};
  std::vector<double> out;
  for (const auto item : split_list(*v)) {
    double x = 0.0;
    const auto* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, x);
    if (ec != std::errc() || ptr != end || item.empty()) {
      throw DataError(fmt::format("config key {}: '{}' is not a number", where(key), item));
    }
    out.push_back(x);
  }
  return out;
}

std::vector<std::string> KeyValueConfig::get_strings(std::string_view key) const {
  const auto v = find(key);
  if (!v) return {};
  std::vector<std::string> out;
  for (const auto item : split_list(*v)) out.emplace_back(item);
  return out;
}

void KeyValueConfig::check_known_keys() const {
  for (const auto& key : order_) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end()) continue;
    if (key.rfind("mixture.", 0) == 0) {
      const auto dot = key.rfind('.');
      const auto field = std::string_view(key).substr(dot + 1);
      if (dot > 8 && std::find(kComponentFields.begin(), kComponentFields.end(), field) !=
                         kComponentFields.end()) {
        continue;
      }
    }
    throw DataError(fmt::format("unknown config key {}", where(key)));
  }
}

MixtureConfig mixture_config(const KeyValueConfig& cfg, std::uint64_t seed) {
  std::vector<std::string> names;
  for (const auto& key : cfg.keys()) {
    if (key.rfind("mixture.", 0) != 0) continue;
    const auto dot = key.rfind('.');
    if (dot <= 8) continue;
    auto name = key.substr(8, dot - 8);
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  }
  if (names.empty()) return MixtureConfig::default_simulation(seed);

  MixtureConfig m;
  m.seed = seed;
  for (const auto& name : names) {
    const std::string prefix = "mixture." + name + ".";
    for (const char* field : {"mean", "cov", "count", "y", "z"}) {
      if (!cfg.has(prefix + field)) {
        throw DataError(fmt::format("mixture component '{}' is missing '{}{}'", name, prefix, field));
      }
    }
    GaussianComponent c;
    c.name = name;
    c.mean = cfg.get_doubles(prefix + "mean");
    c.covariance = cfg.get_doubles(prefix + "cov");
    c.count = cfg.get_uint(prefix + "count", 0);
    c.y = cfg.get_int(prefix + "y", 0);
    c.z = cfg.get_int(prefix + "z", 0);
    m.components.push_back(std::move(c));
  }
  m.validate();
  return m;
}

SplitConfig split_config(const KeyValueConfig& cfg, std::uint64_t seed) {
  SplitConfig s;
  s.seed = seed;
  s.y_label_frac = cfg.get_double("split.y_label_frac", s.y_label_frac);
  s.z_label_frac = cfg.get_double("split.z_label_frac", s.z_label_frac);
  s.holdout_frac = cfg.get_double("split.holdout_frac", s.holdout_frac);
  const auto pool = cfg.get_string("split.loyal_pool", "labeled");
  if (pool == "labeled") {
    s.loyal_pool = LoyalPool::LabeledPositives;
  } else if (pool == "all") {
    s.loyal_pool = LoyalPool::AllInterestLoyal;
  } else {
    throw DataError(fmt::format("config key 'split.loyal_pool': '{}' is not 'labeled' or 'all'", pool));
  }
  return s;
}

ThreeWaySplitConfig three_way_config(const KeyValueConfig& cfg, std::uint64_t seed) {
  ThreeWaySplitConfig t;
  t.seed = seed;
  t.test_frac = cfg.get_double("split.test_frac", t.test_frac);
  if (cfg.has("split.fractions")) {
    const auto f = cfg.get_doubles("split.fractions");
    if (f.size() != 3) throw DataError("config key 'split.fractions' needs exactly 3 values");
    std::copy(f.begin(), f.end(), t.fractions.begin());
  }
  if (cfg.has("split.filters")) {
    const auto f = cfg.get_strings("split.filters");
    if (f.size() != 3) throw DataError("config key 'split.filters' needs exactly 3 values");
    for (std::size_t i = 0; i < 3; ++i) t.filters[i] = parse_row_filter(f[i]);
  }
  return t;
}

RiskSpec risk_spec(const KeyValueConfig& cfg) {
  RiskSpec spec;
  spec.loss = parse_loss(cfg.get_string("risk.loss", "logistic"));
  spec.estimator = parse_estimator(cfg.get_string("risk.estimator", "unbiased"));
  spec.c_fn = cfg.get_double("risk.c_fn", 1.0);
  spec.c_fp = cfg.get_double("risk.c_fp", 1.0);
  spec.clamp_positive_part = cfg.get_bool("risk.clamp_positive_part", false);
  spec.validate();
  return spec;
}

TrainConfig train_config(const KeyValueConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.spec = risk_spec(cfg);
  t.seed = seed;
  t.learning_rate = cfg.get_double("train.learning_rate", t.learning_rate);
  t.epochs = cfg.get_uint("train.epochs", t.epochs);
  if (const auto b = cfg.get_uint("train.minibatch_size", 0); b > 0) t.minibatch_size = b;
  t.l2_penalty = cfg.get_double("train.l2_penalty", t.l2_penalty);
  const auto init = cfg.get_string("train.init", "zeros");
  if (init == "zeros") {
    t.init = Init::Zeros;
  } else if (init == "gaussian") {
    t.init = Init::SeededGaussian;
  } else {
    throw DataError(fmt::format("config key 'train.init': '{}' is not 'zeros' or 'gaussian'", init));
  }
  t.init_scale = cfg.get_double("train.init_scale", t.init_scale);
  t.validate();
  return t;
}

std::optional<ClassPriors> class_priors(const KeyValueConfig& cfg) {
  const bool beta = cfg.has("priors.beta");
  const bool gamma = cfg.has("priors.gamma");
  if (!beta && !gamma) return std::nullopt;
  if (!beta || !gamma) {
    throw DataError(fmt::format("priors.beta and priors.gamma must be given together (missing {})",
                                beta ? "priors.gamma" : "priors.beta"));
  }
  return ClassPriors(cfg.get_double("priors.beta", 0.0), cfg.get_double("priors.gamma", 0.0));
}

void write_priors(std::ostream& out, const ClassPriors& priors, std::string_view comment) {
  if (!comment.empty()) fmt::print(out, "# {}\n", comment);
  fmt::print(out, "priors.beta = {:.17g}\npriors.gamma = {:.17g}\n", priors.beta(), priors.gamma());
}

}  // namespace dpu
