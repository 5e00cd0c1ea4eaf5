#include "dpu/model.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dpu/error.hpp"

namespace dpu {

LinearScorer::LinearScorer(std::size_t dim) : weights_(dim, 0.0) {}

LinearScorer::LinearScorer(std::vector<double> weights, double bias)
    : weights_(std::move(weights)), bias_(bias) {
  if (!std::isfinite(bias_)) throw DataError("model bias is not finite");
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (!std::isfinite(weights_[j])) {
      throw DataError(fmt::format("model weight w{} is not finite", j));
    }
  }
}

double LinearScorer::score(std::span<const double> x) const {
  if (x.size() != weights_.size()) {
    throw DataError(fmt::format("feature vector has dimension {} but the model expects {}",
                                x.size(), weights_.size()));
  }
  return score_unchecked(x.data());
}

int LinearScorer::predict(std::span<const double> x, double threshold) const {
  return score(x) > threshold ? 1 : -1;
}

double LinearScorer::posterior(std::span<const double> x) const {
  return sigmoid(score(x));
}

double sigmoid(double s) noexcept {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

void save_model(std::ostream& out, const LinearScorer& model, std::string_view comment) {
  if (!comment.empty()) fmt::print(out, "# {}\n", comment);
  fmt::print(out, "dpu-linear v1 d={}\n", model.dim());
  fmt::print(out, "bias {:.17g}\n", model.bias());
  for (std::size_t j = 0; j < model.dim(); ++j) {
    fmt::print(out, "w{} {:.17g}\n", j, model.weights()[j]);
  }
}

void save_model(const std::filesystem::path& path, const LinearScorer& model,
                std::string_view comment) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write model file '{}'", path.string()));
  save_model(out, model, comment);
}

namespace {

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw DataError(fmt::format("model file: cannot parse {} value '{}'", what, text));
  }
  return v;
}

}  // namespace

LinearScorer load_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      return true;
    }
    return false;
  };

  if (!next_line()) throw DataError("model file is empty");
  std::size_t dim = 0;
  {
    std::istringstream header(line);
    std::string magic, version, dim_field;
    header >> magic >> version >> dim_field;
    if (magic != "dpu-linear" || version != "v1" || dim_field.rfind("d=", 0) != 0) {
      throw DataError(fmt::format("model file: bad header '{}' (expected 'dpu-linear v1 d=<dim>')",
                                  line));
    }
    try {
      dim = std::stoul(dim_field.substr(2));
    } catch (const std::exception&) {
      throw DataError(fmt::format("model file: bad dimension in header '{}'", line));
    }
  }

  auto read_field = [&](const std::string& expected) {
    if (!next_line()) {
      throw DataError(fmt::format("model file: missing '{}' line", expected));
    }
    std::istringstream fields(line);
    std::string key, value, extra;
    fields >> key >> value;
    if (key != expected || value.empty() || (fields >> extra)) {
      throw DataError(fmt::format("model file line {}: expected '{} <value>', got '{}'",
                                  line_no, expected, line));
    }
    return parse_double(value, expected);
  };

  const double bias = read_field("bias");
  std::vector<double> weights(dim);
  for (std::size_t j = 0; j < dim; ++j) weights[j] = read_field(fmt::format("w{}", j));
  if (next_line()) {
    throw DataError(fmt::format("model file line {}: unexpected trailing content '{}'",
                                line_no, line));
  }
  return LinearScorer(std::move(weights), bias);
}

LinearScorer load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open model file '{}'", path.string()));
  return load_model(in);
}

}  // namespace dpu
