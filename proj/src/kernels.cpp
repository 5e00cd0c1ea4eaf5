#include "dpu/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include <fmt/format.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "dpu/error.hpp"

namespace dpu {

namespace {

void check_shapes(const FeatureMatrix& x, const LinearScorer& model) {
  if (x.empty()) throw DataError("cannot average over an empty dataset");
  if (x.cols() != model.dim()) {
    throw DataError(fmt::format("dataset has dimension {} but the model expects {}",
                                x.cols(), model.dim()));
  }
}

// Layout of one block partial: [sum_pos, sum_neg, grad_pos(d+1), grad_neg(d+1)].
std::size_t partial_width(std::size_t dim, bool with_gradient) {
  return with_gradient ? 2 + 2 * (dim + 1) : 2;
}

void accumulate_block(const FeatureMatrix& x, const LinearScorer& model, SurrogateLoss loss,
                      bool with_gradient, std::size_t begin, std::size_t end,
                      std::span<double> acc) {
  const std::size_t d = x.cols();
  double* gpos = with_gradient ? acc.data() + 2 : nullptr;
  double* gneg = with_gradient ? acc.data() + 3 + d : nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    const double* xi = x.row(i).data();
    const double s = model.score_unchecked(xi);
    acc[0] += loss_value(loss, s);
    acc[1] += loss_value(loss, -s);
    if (with_gradient) {
      // d/dtheta l(g) = l'(g) x~,  d/dtheta l(-g) = -l'(-g) x~, with x~ = (x, 1).
      const double cp = loss_grad(loss, s);
      const double cn = -loss_grad(loss, -s);
      for (std::size_t j = 0; j < d; ++j) {
        gpos[j] += cp * xi[j];
        gneg[j] += cn * xi[j];
      }
      gpos[d] += cp;
      gneg[d] += cn;
    }
  }
}

// Merges partials[lo, hi) (each `width` wide) into out with a fixed binary tree.
void pairwise_merge(const std::vector<double>& partials, std::size_t width, std::size_t lo,
                    std::size_t hi, std::span<double> out) {
  if (hi - lo == 1) {
    for (std::size_t k = 0; k < width; ++k) out[k] = partials[lo * width + k];
    return;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::vector<double> right(width);
  pairwise_merge(partials, width, lo, mid, out);
  pairwise_merge(partials, width, mid, hi, right);
  for (std::size_t k = 0; k < width; ++k) out[k] += right[k];
}

SetMoments finish(std::span<const double> totals, std::size_t n, std::size_t dim,
                  bool with_gradient) {
  const double inv = 1.0 / static_cast<double>(n);
  SetMoments m;
  m.mean_pos = totals[0] * inv;
  m.mean_neg = totals[1] * inv;
  if (with_gradient) {
    m.grad_pos.resize(dim + 1);
    m.grad_neg.resize(dim + 1);
    for (std::size_t j = 0; j <= dim; ++j) {
      m.grad_pos[j] = totals[2 + j] * inv;
      m.grad_neg[j] = totals[3 + dim + j] * inv;
    }
  }
  return m;
}

}  // namespace

SetMoments accumulate_moments(const FeatureMatrix& x, const LinearScorer& model,
                              SurrogateLoss loss, bool with_gradient) {
  check_shapes(x, model);
  if (with_gradient && !is_trainable(loss)) detail::throw_not_trainable(loss);

  const std::size_t n = x.rows();
  const std::size_t width = partial_width(x.cols(), with_gradient);
  const std::size_t blocks = (n + kBlockRows - 1) / kBlockRows;
  std::vector<double> partials(blocks * width, 0.0);
  std::vector<std::exception_ptr> errors(blocks);

  const auto nblocks = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    const std::size_t begin = ub * kBlockRows;
    const std::size_t end = std::min(n, begin + kBlockRows);
    try {
      accumulate_block(x, model, loss, with_gradient, begin, end,
                       std::span<double>(partials.data() + ub * width, width));
    } catch (...) {
      errors[ub] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> totals(width);
  pairwise_merge(partials, width, 0, blocks, totals);
  return finish(totals, n, x.cols(), with_gradient);
}

std::vector<double> score_rows(const FeatureMatrix& x, const LinearScorer& model) {
  if (x.cols() != model.dim() && !x.empty()) {
    throw DataError(fmt::format("dataset has dimension {} but the model expects {}",
                                x.cols(), model.dim()));
  }
  std::vector<double> scores(x.rows());
  const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    scores[static_cast<std::size_t>(i)] =
        model.score_unchecked(x.row(static_cast<std::size_t>(i)).data());
  }
  return scores;
}

double pairwise_sum(std::span<const double> values) noexcept {
  if (values.size() <= 8) {
    double s = 0.0;
    for (const double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace reference {

namespace {

struct Neumaier {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) noexcept {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      carry += (sum - t) + v;
    } else {
      carry += (v - t) + sum;
    }
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

}  // namespace

SetMoments accumulate_moments(const FeatureMatrix& x, const LinearScorer& model,
                              SurrogateLoss loss, bool with_gradient) {
  check_shapes(x, model);
  if (with_gradient && !is_trainable(loss)) detail::throw_not_trainable(loss);

  const std::size_t d = x.cols();
  Neumaier pos, neg;
  std::vector<Neumaier> gpos(with_gradient ? d + 1 : 0), gneg(with_gradient ? d + 1 : 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    double s = model.bias();
    for (std::size_t j = 0; j < d; ++j) s += model.weights()[j] * xi[j];
    pos.add(loss_value(loss, s));
    neg.add(loss_value(loss, -s));
    if (!with_gradient) continue;
    const double cp = loss_grad(loss, s);
    const double cn = -loss_grad(loss, -s);
    for (std::size_t j = 0; j < d; ++j) {
      gpos[j].add(cp * xi[j]);
      gneg[j].add(cn * xi[j]);
    }
    gpos[d].add(cp);
    gneg[d].add(cn);
  }

  std::vector<double> totals(partial_width(d, with_gradient));
  totals[0] = pos.value();
  totals[1] = neg.value();
  for (std::size_t j = 0; j < gpos.size(); ++j) {
    totals[2 + j] = gpos[j].value();
    totals[3 + d + j] = gneg[j].value();
  }
  return finish(totals, x.rows(), d, with_gradient);
}

std::vector<double> score_rows(const FeatureMatrix& x, const LinearScorer& model) {
  std::vector<double> scores;
  scores.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) scores.push_back(model.score(x.row(i)));
  return scores;
}

}  // namespace reference
}  // namespace dpu
