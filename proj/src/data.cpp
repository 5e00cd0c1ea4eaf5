#include "dpu/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dpu/error.hpp"
#include "dpu/rng.hpp"

namespace dpu {

// Mixture -------------------------------------------------------------------

MixtureConfig MixtureConfig::default_simulation(std::uint64_t seed) {
  const std::vector<double> identity{1.0, 0.0, 0.0, 1.0};
  MixtureConfig c;
  c.seed = seed;
  c.components = {
      {"potential", {0.0, 2.0}, identity, 500, 1, -1},
      {"loyal", {2.0, 0.0}, identity, 1000, 1, 1},
      {"uninterested", {-2.0, -2.0}, identity, 1000, -1, -1},
  };
  return c;
}

std::size_t MixtureConfig::dim() const {
  return components.empty() ? 0 : components.front().mean.size();
}

std::size_t MixtureConfig::total_count() const {
  std::size_t n = 0;
  for (const auto& c : components) n += c.count;
  return n;
}

MixtureConfig MixtureConfig::scaled(double factor) const {
  MixtureConfig out = *this;
  for (auto& c : out.components) {
    c.count = static_cast<std::size_t>(std::floor(static_cast<double>(c.count) * factor));
  }
  return out;
}

ClassPriors MixtureConfig::priors() const {
  const double n = static_cast<double>(total_count());
  if (n == 0.0) throw DataError("mixture has no samples; priors are undefined");
  double y_pos = 0.0, yz_pos = 0.0;
  for (const auto& c : components) {
    if (c.y == 1) y_pos += static_cast<double>(c.count);
    if (c.y == 1 && c.z == 1) yz_pos += static_cast<double>(c.count);
  }
  return ClassPriors(y_pos / n, yz_pos / n);
}

namespace {

// Lower Cholesky factor of a row-major d x d matrix; empty when not SPD.
std::vector<double> cholesky(std::span<const double> a, std::size_t d) {
  std::vector<double> l(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
      if (i == j) {
        if (!(s > 0.0)) return {};
        l[i * d + i] = std::sqrt(s);
      } else {
        l[i * d + j] = s / l[j * d + j];
      }
    }
  }
  return l;
}

bool is_label(int v) { return v == 1 || v == -1; }

}  // namespace

void MixtureConfig::validate() const {
  const std::size_t d = dim();
  for (const auto& c : components) {
    if (c.mean.size() != d || d == 0) {
      throw DataError(fmt::format("mixture component '{}' has mean of dimension {} (expected {})",
                                  c.name, c.mean.size(), d));
    }
    if (c.covariance.size() != d * d) {
      throw DataError(fmt::format("mixture component '{}' needs a {}x{} covariance ({} values given)",
                                  c.name, d, d, c.covariance.size()));
    }
    if (!is_label(c.y) || !is_label(c.z)) {
      throw DataError(fmt::format("mixture component '{}' has labels (y, z) = ({}, {}); expected +/-1",
                                  c.name, c.y, c.z));
    }
    for (const double v : c.mean) {
      if (!std::isfinite(v)) {
        throw DataError(fmt::format("mixture component '{}' has a non-finite mean", c.name));
      }
    }
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        if (c.covariance[i * d + j] != c.covariance[j * d + i]) {
          throw DataError(fmt::format("mixture component '{}' covariance is not symmetric", c.name));
        }
      }
    }
    if (cholesky(c.covariance, d).empty()) {
      throw DataError(
          fmt::format("mixture component '{}' covariance is not positive definite", c.name));
    }
  }
}

std::vector<LabeledSample> generate_mixture(const MixtureConfig& config) {
  config.validate();
  const std::size_t d = config.dim();
  Rng rng(config.seed);
  std::vector<LabeledSample> out;
  out.reserve(config.total_count());
  std::vector<double> noise(d);
  for (const auto& c : config.components) {
    const auto l = cholesky(c.covariance, d);
    for (std::size_t n = 0; n < c.count; ++n) {
      for (auto& e : noise) e = rng.normal();
      LabeledSample s{c.mean, c.y, c.z};
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k <= i; ++k) s.x[i] += l[i * d + k] * noise[k];
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

// PU split ------------------------------------------------------------------

std::size_t labeled_count(double frac, std::size_t n, const char* what) {
  if (!(frac >= 0.0 && frac <= 1.0)) {
    throw DataError(fmt::format("{} fraction {} is outside [0, 1]", what, frac));
  }
  if (frac == 0.0 || n == 0) {
    throw DataError(fmt::format("{} would be empty (fraction {} of {} rows)", what, frac, n));
  }
  // The small guard keeps products like 0.7 * 1500 from flooring to 1049.
  const auto k = static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

namespace {

// Chooses k of `pool` uniformly at random and returns them in ascending order.
std::vector<std::size_t> choose(std::vector<std::size_t> pool, std::size_t k, Rng& rng) {
  rng.shuffle(std::span<std::size_t>(pool));
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

FeatureMatrix rows_of(std::span<const LabeledSample> samples, std::span<const std::size_t> idx,
                      std::size_t dim) {
  std::vector<double> values;
  values.reserve(idx.size() * dim);
  for (const std::size_t i : idx) values.insert(values.end(), samples[i].x.begin(), samples[i].x.end());
  return FeatureMatrix(dim, std::move(values));
}

std::size_t common_dim(std::span<const LabeledSample> samples) {
  if (samples.empty()) throw DataError("sample list is empty");
  const std::size_t d = samples.front().x.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].x.size() != d) {
      throw DataError(fmt::format("sample {} has dimension {} (expected {})", i,
                                  samples[i].x.size(), d));
    }
    if (!is_label(samples[i].y) || !is_label(samples[i].z)) {
      throw DataError(fmt::format("sample {} has labels (y, z) = ({}, {}); expected +/-1", i,
                                  samples[i].y, samples[i].z));
    }
  }
  return d;
}

}  // namespace

PuSplit split_to_pu(std::span<const LabeledSample> samples, const SplitConfig& config) {
  const std::size_t d = common_dim(samples);
  if (!(config.holdout_frac >= 0.0 && config.holdout_frac < 1.0)) {
    throw DataError(fmt::format("holdout fraction {} is outside [0, 1)", config.holdout_frac));
  }
  for (const double f : {config.y_label_frac, config.z_label_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw DataError(fmt::format("label fraction {} is outside [0, 1]", f));
    }
  }
  Rng rng(config.seed);

  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> held;
  std::vector<std::size_t> train = all;
  if (config.holdout_frac > 0.0) {
    const std::size_t k = labeled_count(config.holdout_frac, samples.size(), "held-out set");
    held = choose(all, k, rng);
    train.clear();
    std::set_difference(all.begin(), all.end(), held.begin(), held.end(),
                        std::back_inserter(train));
  }

  std::vector<std::size_t> y_pool;
  for (const std::size_t i : train) {
    if (samples[i].y == 1) y_pool.push_back(i);
  }
  const auto positives = choose(
      y_pool, labeled_count(config.y_label_frac, y_pool.size(), "positive-interest data"), rng);

  std::vector<std::size_t> z_pool;
  const auto& z_source = config.loyal_pool == LoyalPool::LabeledPositives ? positives : train;
  for (const std::size_t i : z_source) {
    if (samples[i].y == 1 && samples[i].z == 1) z_pool.push_back(i);
  }
  const auto loyal = choose(
      z_pool, labeled_count(config.z_label_frac, z_pool.size(), "positive-loyal data"), rng);

  PuSplit out;
  out.triple.positive_interest = rows_of(samples, positives, d);
  out.triple.unlabeled = rows_of(samples, train, d);
  out.triple.positive_loyal = rows_of(samples, loyal, d);
  out.held_out.reserve(held.size());
  for (const std::size_t i : held) out.held_out.push_back(samples[i]);
  return out;
}

ClassPriors empirical_priors(std::span<const LabeledSample> samples) {
  if (samples.empty()) throw DataError("cannot compute priors of an empty sample");
  std::size_t y_pos = 0, yz_pos = 0;
  for (const auto& s : samples) {
    if (s.y == 1) ++y_pos;
    if (s.y == 1 && s.z == 1) ++yz_pos;
  }
  const double n = static_cast<double>(samples.size());
  return ClassPriors(static_cast<double>(y_pos) / n, static_cast<double>(yz_pos) / n);
}

// Three-way split -------------------------------------------------------------

std::string_view to_string(RowFilter filter) {
  switch (filter) {
    case RowFilter::Any: return "any";
    case RowFilter::InterestPositive: return "y_pos";
    case RowFilter::InterestLoyalPositive: return "yz_pos";
  }
  return "unknown";
}

RowFilter parse_row_filter(std::string_view name) {
  if (name == "any") return RowFilter::Any;
  if (name == "y_pos") return RowFilter::InterestPositive;
  if (name == "yz_pos") return RowFilter::InterestLoyalPositive;
  throw DataError(fmt::format("unknown row filter '{}' (expected any, y_pos or yz_pos)", name));
}

namespace {

bool keep(RowFilter filter, const LabeledSample& s) {
  switch (filter) {
    case RowFilter::Any: return true;
    case RowFilter::InterestPositive: return s.y == 1;
    case RowFilter::InterestLoyalPositive: return s.y == 1 && s.z == 1;
  }
  return false;
}

}  // namespace

ThreeWaySplit three_way_split(std::span<const LabeledSample> samples,
                              const ThreeWaySplitConfig& config) {
  const std::size_t d = common_dim(samples);
  if (!(config.test_frac >= 0.0 && config.test_frac < 1.0)) {
    throw DataError(fmt::format("test fraction {} is outside [0, 1)", config.test_frac));
  }
  double total = 0.0;
  for (const double f : config.fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw DataError(fmt::format("three-way split fraction {} is outside (0, 1]", f));
    }
    total += f;
  }
  if (total > 1.0 + 1e-9) {
    throw DataError(fmt::format("three-way split fractions sum to {} (> 1)", total));
  }

  Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t n = samples.size();
  const auto n_test = static_cast<std::size_t>(
      std::floor(config.test_frac * static_cast<double>(n) + 1e-9));
  const std::size_t n_train = n - n_test;

  ThreeWaySplit out;
  for (std::size_t i = 0; i < n_test; ++i) out.test.push_back(samples[order[i]]);

  const char* names[3] = {"positive-interest part", "unlabeled part", "positive-loyal part"};
  FeatureMatrix* targets[3] = {&out.triple.positive_interest, &out.triple.unlabeled,
                               &out.triple.positive_loyal};
  std::size_t cursor = n_test;
  for (std::size_t part = 0; part < 3; ++part) {
    std::size_t size = static_cast<std::size_t>(
        std::floor(config.fractions[part] * static_cast<double>(n_train) + 1e-9));
    // Fractions summing to one hand rounding leftovers to the last part.
    if (part == 2 && std::abs(total - 1.0) <= 1e-9) size = n - cursor;
    size = std::min(size, n - cursor);
    std::vector<std::size_t> kept;
    for (std::size_t k = cursor; k < cursor + size; ++k) {
      if (keep(config.filters[part], samples[order[k]])) kept.push_back(order[k]);
    }
    cursor += size;
    std::sort(kept.begin(), kept.end());
    if (kept.empty()) {
      throw DataError(fmt::format("{} is empty after the '{}' filter", names[part],
                                  to_string(config.filters[part])));
    }
    *targets[part] = rows_of(samples, kept, d);
  }
  return out;
}

// CSV -------------------------------------------------------------------------

std::vector<LabeledSample> CsvDataset::labeled() const {
  if (y.size() != features.rows() || z.size() != features.rows()) {
    throw DataError("dataset has no (y, z) labels");
  }
  std::vector<LabeledSample> out;
  out.reserve(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto r = features.row(i);
    out.push_back({std::vector<double>(r.begin(), r.end()), y[i], z[i]});
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_number(std::string_view text, double& out) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && !text.empty();
}

}  // namespace

CsvDataset read_csv(std::istream& in, CsvSchema schema, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t d = 0;
  std::size_t columns = 0;
  std::size_t y_col = 0, z_col = 0;
  bool has_labels = false;
  CsvDataset out;
  std::vector<double> values;
  std::vector<double> row;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto fields = split_fields(text);

    if (!have_header) {
      have_header = true;
      columns = fields.size();
      while (d < fields.size() && fields[d] == fmt::format("f{}", d)) ++d;
      const auto rest = std::span(fields).subspan(d);
      if (rest.size() == 2 && rest[0] == "y" && rest[1] == "z") {
        has_labels = true;
        y_col = d;
        z_col = d + 1;
      } else if (!rest.empty()) {
        throw DataError(fmt::format("{}:{}: unexpected column '{}' (expected f0..f{{d-1}}{})",
                                    source, line_no, rest.front(),
                                    schema == CsvSchema::FullyLabeled ? ", y, z" : ""));
      }
      if (d == 0) {
        throw DataError(fmt::format("{}:{}: header has no feature columns f0, f1, ...", source,
                                    line_no));
      }
      if (schema == CsvSchema::FullyLabeled && !has_labels) {
        throw DataError(fmt::format("{}:{}: header lacks the y and z label columns", source,
                                    line_no));
      }
      continue;
    }

    if (fields.size() != columns) {
      throw DataError(fmt::format("{}:{}: expected {} fields, found {}", source, line_no,
                                  columns, fields.size()));
    }
    row.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      if (!parse_number(fields[j], row[j]) || !std::isfinite(row[j])) {
        throw DataError(fmt::format("{}:{}: column f{} has non-numeric value '{}'", source,
                                    line_no, j, fields[j]));
      }
    }
    values.insert(values.end(), row.begin(), row.end());
    if (schema == CsvSchema::FullyLabeled) {
      const std::size_t cols[2] = {y_col, z_col};
      const char* names[2] = {"y", "z"};
      for (int k = 0; k < 2; ++k) {
        const auto f = fields[cols[k]];
        int label = 0;
        if (f == "1" || f == "+1") {
          label = 1;
        } else if (f == "-1") {
          label = -1;
        } else {
          throw DataError(fmt::format("{}:{}: label {} = '{}' is not -1 or 1", source, line_no,
                                      names[k], f));
        }
        (k == 0 ? out.y : out.z).push_back(label);
      }
    }
  }
  if (!have_header) throw DataError(fmt::format("{}: file is empty", source));
  if (values.empty()) throw DataError(fmt::format("{}: no data rows", source));
  out.features = FeatureMatrix(d, std::move(values));
  return out;
}

CsvDataset load_csv(const std::filesystem::path& path, CsvSchema schema) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open CSV file '{}'", path.string()));
  return read_csv(in, schema, path.string());
}

namespace {

void write_header(std::ostream& out, std::size_t d, bool labels, std::string_view comment) {
  if (!comment.empty()) fmt::print(out, "# {}\n", comment);
  for (std::size_t j = 0; j < d; ++j) fmt::print(out, "{}f{}", j ? "," : "", j);
  if (labels) fmt::print(out, ",y,z");
  fmt::print(out, "\n");
}

}  // namespace

void write_features_csv(std::ostream& out, const FeatureMatrix& x, std::string_view comment) {
  write_header(out, x.cols(), false, comment);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    fmt::print(out, "{:.17g}\n", fmt::join(x.row(i), ","));
  }
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledSample> samples,
                       std::string_view comment) {
  write_header(out, samples.empty() ? 0 : samples.front().x.size(), true, comment);
  for (const auto& s : samples) {
    fmt::print(out, "{:.17g},{},{}\n", fmt::join(s.x, ","), s.y, s.z);
  }
}

void save_features_csv(const std::filesystem::path& path, const FeatureMatrix& x,
                       std::string_view comment) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write CSV file '{}'", path.string()));
  write_features_csv(out, x, comment);
}

void save_labeled_csv(const std::filesystem::path& path, std::span<const LabeledSample> samples,
                      std::string_view comment) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write CSV file '{}'", path.string()));
  write_labeled_csv(out, samples, comment);
}

}  // namespace dpu
