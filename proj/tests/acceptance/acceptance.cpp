// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Lines starting with "  " are diagnostics.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "dpu/cli.hpp"
#include "dpu/config.hpp"
#include "dpu/data.hpp"
#include "dpu/eval.hpp"
#include "dpu/risk.hpp"
#include "dpu/train.hpp"
#include "test_support.hpp"

namespace {

using namespace dpu;
namespace fs = std::filesystem;

const fs::path kSourceDir = DPU_SOURCE_DIR;

struct Verdict {
  bool pass = true;
  std::string summary;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("failed: " + what);
    }
  }
};

// Runs the command-line tool in-process; throws on a non-zero exit.
std::string tool(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"dpu"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) {
    throw std::runtime_error(fmt::format("dpu {} exited with {}: {}", fmt::join(args, " "), code,
                                         err.str()));
  }
  return out.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double field(const std::string& report, const std::string& name) {
  std::istringstream in(report);
  std::string line;
  const std::string prefix = name + " = ";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return std::stod(line.substr(prefix.size()));
  }
  throw std::runtime_error("report has no field " + name);
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("dpu_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// 1 -----------------------------------------------------------------------------

Verdict unbiasedness() {
  Verdict v;
  const auto generator = MixtureConfig::default_simulation(0);
  Rng rng(derive_seed(1, 0xB1A5));
  const auto model = testing::random_model(rng, generator.dim(), 1.0);
  BiasCheckOptions options;
  options.resamples = 200;
  options.seed = 1;
  const auto start = std::chrono::steady_clock::now();
  std::string zs;
  for (SurrogateLoss loss : {SurrogateLoss::ZeroOne, SurrogateLoss::Logistic,
                             SurrogateLoss::Squared}) {
    const auto r = bias_check(generator, model, RiskSpec::unbiased(loss), options);
    v.notes.push_back(fmt::format("{}: mean {:.6f} oracle {:.6f} se {:.2e} z {:+.3f}",
                                  to_string(loss), r.mean_risk, r.oracle_risk, r.std_error,
                                  r.z_score));
    v.require(std::abs(r.z_score) < 3.0, fmt::format("|z| < 3 for {}", to_string(loss)));
    zs += fmt::format(" {}={:+.2f}", to_string(loss), r.z_score);
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(seconds < 60.0, "runtime under 60 s");
  v.summary = fmt::format("R=200, oracle n={}, z:{} ({:.1f} s)", options.oracle_size, zs, seconds);
  return v;
}

// 2 -----------------------------------------------------------------------------

Verdict reduction_identities() {
  Verdict v;
  Rng rng(2);
  constexpr SurrogateLoss kAll[] = {SurrogateLoss::Squared, SurrogateLoss::Logistic,
                                    SurrogateLoss::Hinge, SurrogateLoss::ZeroOne};
  int bit_mismatches = 0;
  double worst_decomposition = 0.0;
  double worst_closed_form = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.below(5);
    const auto data = testing::random_triple(rng, dim, 1 + rng.below(200), 1 + rng.below(200),
                                             1 + rng.below(200));
    const auto model = testing::random_model(rng, dim, 1.0);
    const double beta = 0.05 + 0.9 * rng.uniform();
    const ClassPriors priors(beta, beta * (0.01 + 0.99 * rng.uniform()));
    const auto loss = kAll[trial % 4];

    const double u = double_pu_risk(model, data, priors, RiskSpec::unbiased(loss)).value;
    const double c =
        double_pu_risk(model, data, priors, RiskSpec::cost_sensitive(loss, 1.0, 1.0)).value;
    if (std::memcmp(&u, &c, sizeof u) != 0) ++bit_mismatches;

    const auto r = double_pu_risk(model, data, priors, RiskSpec::unbiased(loss));
    const double pu = pu_risk(model, data.positive_interest, data.unlabeled, beta, loss);
    worst_decomposition =
        std::max(worst_decomposition, std::abs((r.value - pu) - (r.terms.t2 + r.terms.t5)));

    const LinearScorer always(std::vector<double>(dim, 0.0), 1.0);
    const double zero_one =
        double_pu_risk(always, data, priors, RiskSpec::unbiased(SurrogateLoss::ZeroOne)).value;
    worst_closed_form = std::max(
        worst_closed_form, std::abs(zero_one - (1.0 - priors.beta() + priors.gamma())));
  }
  v.require(bit_mismatches == 0, "(a) cost-sensitive with unit costs is bit-identical");
  v.require(worst_decomposition <= 1e-12, "(b) decomposition within 1e-12");
  v.require(worst_closed_form <= 1e-12, "(c) always-positive closed form within 1e-12");
  v.summary = fmt::format("(a) {} bit mismatches / 100, (b) max err {:.1e}, (c) max err {:.1e}",
                          bit_mismatches, worst_decomposition, worst_closed_form);
  return v;
}

// 3 -----------------------------------------------------------------------------

// Hinge is not differentiable at margin 1; finite differences are only
// meaningful away from it, so such draws are replaced.
bool near_hinge_kink(const PuTriple& data, const LinearScorer& model) {
  for (const FeatureMatrix* m : {&data.positive_interest, &data.unlabeled, &data.positive_loyal}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      const double s = model.score(m->row(i));
      if (std::abs(s - 1.0) < 1e-3 || std::abs(s + 1.0) < 1e-3) return true;
    }
  }
  return false;
}

Verdict gradient_correctness() {
  Verdict v;
  Rng rng(3);
  int checks = 0, failures = 0, below = 0, above = 0;
  double worst = 0.0;
  for (SurrogateLoss loss : {SurrogateLoss::Squared, SurrogateLoss::Logistic,
                             SurrogateLoss::Hinge}) {
    for (int trial = 0; trial < 50;) {
      const std::size_t dim = 1 + rng.below(4);
      // Half of the draws get a small unlabeled set far from the positives,
      // which puts the clamped bracket below zero.
      const bool push_negative = rng.uniform() < 0.5;
      PuTriple data = push_negative
                          ? PuTriple{testing::random_matrix(rng, 20 + rng.below(30), dim, 1.5),
                                     testing::random_matrix(rng, 2 + rng.below(4), dim, -1.5),
                                     testing::random_matrix(rng, 5 + rng.below(20), dim, 1.5)}
                          : testing::random_triple(rng, dim, 5 + rng.below(50),
                                                   5 + rng.below(50), 5 + rng.below(50));
      std::vector<double> w(dim, 0.0);
      for (auto& e : w) e = (push_negative ? 1.0 : 0.0) + 0.5 * rng.normal();
      const LinearScorer model(w, 0.3 * rng.normal());
      const ClassPriors priors(0.3 + 0.6 * rng.uniform(), 0.05 + 0.2 * rng.uniform());
      RiskSpec spec;
      switch (trial % 4) {
        case 0: spec = RiskSpec::unbiased(loss); break;
        case 1: spec = RiskSpec::non_negative(loss); break;
        case 2: spec = RiskSpec::cost_sensitive(loss, 0.5 + rng.uniform(), 1.0 + 99.0 * rng.uniform()); break;
        default: spec = RiskSpec::non_negative(loss, true); break;
      }
      const auto terms = double_pu_risk(model, data, priors, spec).terms;
      if (loss == SurrogateLoss::Hinge && near_hinge_kink(data, model)) continue;
      if (spec.estimator == Estimator::NonNegative &&
          (std::abs(terms.unlabeled_bracket()) < 1e-3 || std::abs(terms.interest_bracket()) < 1e-3)) {
        continue;
      }
      if (spec.estimator == Estimator::NonNegative) {
        (terms.unlabeled_bracket() < 0.0 ? below : above) += 1;
      }
      const auto g = risk_gradient(model, data, priors, spec);
      std::vector<double> analytic = g.weights;
      analytic.push_back(g.bias);
      const auto fd = testing::finite_difference_gradient(
          [&](const LinearScorer& m) { return double_pu_risk(m, data, priors, spec).value; },
          model, 1e-5);
      for (std::size_t j = 0; j < fd.size(); ++j) {
        ++checks;
        const double diff = std::abs(analytic[j] - fd[j]);
        if (!testing::close(analytic[j], fd[j], 1e-5, 1e-8)) {
          ++failures;
          v.notes.push_back(fmt::format("{} {} partial {}: {} vs {}", to_string(loss),
                                        to_string(spec.estimator), j, analytic[j], fd[j]));
        }
        worst = std::max(worst, diff / std::max(1.0, std::abs(fd[j])));
      }
      ++trial;
    }
  }
  v.require(failures == 0, "all partials within 1e-5 relative / 1e-8 absolute");
  v.require(below > 0 && above > 0, "non-negative specs on both sides of the clamp");
  v.summary = fmt::format(
      "150 triples, {} partials, {} mismatches (worst scaled error {:.1e}); "
      "non-negative specs with clamp active {} / inactive {}",
      checks, failures, worst, below, above);
  return v;
}

// 4 -----------------------------------------------------------------------------

// log N(x; mean, cov) up to the shared -d/2 log(2 pi) constant.
double log_density(std::span<const double> x, const GaussianComponent& c) {
  const std::size_t d = x.size();
  std::vector<double> l(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = c.covariance[i * d + j];
      for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
      l[i * d + j] = i == j ? std::sqrt(s) : s / l[j * d + j];
    }
  }
  std::vector<double> y(d);
  double quad = 0.0, log_det = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double s = x[i] - c.mean[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * d + k] * y[k];
    y[i] = s / l[i * d + i];
    quad += y[i] * y[i];
    log_det += std::log(l[i * d + i]);
  }
  return -0.5 * quad - log_det;
}

// True p(w = +1 | x) under the generating mixture.
double bayes_posterior(std::span<const double> x, const MixtureConfig& mixture) {
  double pos = 0.0, all = 0.0;
  for (const auto& c : mixture.components) {
    const double p = static_cast<double>(c.count) * std::exp(log_density(x, c));
    all += p;
    if (c.y == 1 && c.z == -1) pos += p;
  }
  return pos / all;
}

Verdict simulation_pipeline() {
  Verdict v;
  const auto dir = scratch("simulation");
  const std::string cfg = (kSourceDir / "configs" / "simulation.cfg").string();
  const auto path = [&](const char* name) { return (dir / name).string(); };
  tool({"simulate", "-c", cfg, "-o", path("train.csv"), "--test-out", path("test.csv")});
  tool({"split", "-c", cfg, "-i", path("train.csv"), "-o", path("split")});
  tool({"train", "-c", cfg, "--data-dir", path("split"), "-m", path("model.txt")});

  const auto model = load_model(path("model.txt"));
  const auto test = load_csv(path("test.csv"), CsvSchema::FullyLabeled).labeled();
  const auto report = evaluate(model, test);

  KeyValueConfig kv;
  kv.load(cfg);
  const auto mixture = mixture_config(kv, 0);
  std::size_t potential = 0, learned = 0, bayes = 0;
  for (const auto& s : test) {
    if (s.w() != 1) continue;
    ++potential;
    if (model.posterior(s.x) > 0.5) ++learned;
    if (bayes_posterior(s.x, mixture) > 0.5) ++bayes;
  }
  const double frac = static_cast<double>(learned) / static_cast<double>(potential);
  const double bayes_frac = static_cast<double>(bayes) / static_cast<double>(potential);
  v.require(report.accuracy() > 0.9, "held-out W accuracy > 0.9");
  v.require(report.auc && *report.auc > 0.95, "held-out ROC-AUC > 0.95");
  v.require(frac > 0.9, "posterior > 0.5 on > 90% of held-out (+1,-1) points");
  v.notes.push_back(fmt::format(
      "true-posterior rule on the same points: {:.4f} above 0.5 (the ceiling for any "
      "classifier that thresholds a calibrated posterior)",
      bayes_frac));
  v.summary = fmt::format("accuracy {:.4f}, AUC {:.4f}, posterior > 0.5 on {}/{} = {:.4f}",
                          report.accuracy(), report.auc.value_or(NAN), learned, potential, frac);
  return v;
}

// 5 -----------------------------------------------------------------------------

// Fully labeled surrogate with the customer-table priors: n = 11162,
// p(w = +1) = 0.4692, p(y = +1, z = +1) = 0.0046, d = 15, weak mean shifts.
MixtureConfig marketing_surrogate(std::uint64_t seed) {
  const std::size_t n = 11162;
  const auto potential = static_cast<std::size_t>(std::llround(0.4692 * n));
  const auto loyal = static_cast<std::size_t>(std::llround(0.0046 * n));
  const std::size_t d = 15;
  std::vector<double> identity(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) identity[i * d + i] = 1.0;
  MixtureConfig m;
  m.seed = seed;
  m.components.push_back({"potential", std::vector<double>(d, 0.15), identity, potential, 1, -1});
  m.components.push_back({"loyal", std::vector<double>(d, 0.3), identity, loyal, 1, 1});
  m.components.push_back(
      {"other", std::vector<double>(d, 0.0), identity, n - potential - loyal, -1, -1});
  return m;
}

Verdict marketing_pipeline() {
  Verdict v;
  const auto dir = scratch("marketing");
  const std::string cfg = (kSourceDir / "configs" / "marketing.cfg").string();
  std::string aucs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto run_dir = dir / std::to_string(seed);
    fs::create_directories(run_dir);
    const auto path = [&](const char* name) { return (run_dir / name).string(); };
    save_labeled_csv(path("customers.csv"), generate_mixture(marketing_surrogate(seed)));
    const std::string s = std::to_string(seed);
    tool({"split", "-c", cfg, "--seed", s, "-i", path("customers.csv"), "-o", path("split")});
    tool({"train", "-c", cfg, "--seed", s, "--data-dir", path("split"), "-m", path("model.txt")});
    const auto report = tool({"evaluate", "-c", cfg, "-m", path("model.txt"), "-t",
                              path("split/held_out.csv"), "--data-dir", path("split")});
    const double auc = field(report, "auc");
    const auto tp = field(report, "tp"), fn = field(report, "fn");
    const auto fp = field(report, "fp"), tn = field(report, "tn");
    const double n1 = tp + fn, n0 = fp + tn;
    // Standard deviation of the Mann-Whitney AUC under no signal.
    const double sigma = std::sqrt((n1 + n0 + 1.0) / (12.0 * n1 * n0));
    const double margin = 3.0 * sigma;
    v.notes.push_back(fmt::format("seed {}: AUC {:.4f}, test {} positive / {} negative, "
                                  "chance margin {:.4f}",
                                  seed, auc, n1, n0, margin));
    v.require(auc > 0.55, fmt::format("seed {} AUC > 0.55", seed));
    v.require(auc > 0.5 + margin, fmt::format("seed {} AUC > 0.5 + margin", seed));
    aucs += fmt::format(" {:.4f}", auc);
  }
  v.summary = fmt::format("test AUC over seeds 1-5:{}", aucs);
  return v;
}

// 6 -----------------------------------------------------------------------------

Verdict non_negative_stability() {
  Verdict v;
  const auto samples = generate_mixture(MixtureConfig::default_simulation(6));
  SplitConfig split;
  split.seed = 7;
  PuTriple data = split_to_pu(samples, split).triple;
  // Keep 5 unlabeled rows: the unbiased estimate of the negative-class risk
  // then rests on too few points and can be driven below zero.
  std::vector<std::size_t> idx(data.unlabeled.rows());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(8);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(5);
  data.unlabeled = data.unlabeled.gather(idx);
  const ClassPriors priors(0.6, 0.4);

  TrainConfig config;
  config.learning_rate = 1.0;
  config.epochs = 1000;
  config.spec = RiskSpec::unbiased(SurrogateLoss::Logistic);
  const auto unbiased = train(data, priors, config);
  config.spec = RiskSpec::non_negative(SurrogateLoss::Logistic);
  const auto nn = train(data, priors, config);

  const auto lowest = std::min_element(
      unbiased.trace.begin(), unbiased.trace.end(),
      [](const TraceEntry& a, const TraceEntry& b) { return a.risk < b.risk; });
  std::size_t negative_clamped = 0, active = 0;
  for (const auto& e : nn.trace) {
    if (e.clamped_bracket < 0.0) ++negative_clamped;
    if (e.bracket < 0.0) ++active;
  }
  v.require(lowest->risk < 0.0, "unbiased trace goes below zero (construction)");
  v.require(negative_clamped == 0, "clamped bracket >= 0 at every epoch");
  v.require(nn.trace.back().risk >= unbiased.trace.back().risk,
            "non-negative final risk >= unbiased final risk");
  v.require(nn.trace.back().risk >= nn.trace.back().unbiased_risk,
            "non-negative final risk >= its own unclamped value");
  v.notes.push_back(fmt::format("clamp active in {} of {} non-negative epochs", active,
                                nn.trace.size()));
  v.summary = fmt::format(
      "K=5; unbiased min {:.4f} (epoch {}), final {:.4f}; non-negative final {:.4f}, "
      "min clamped bracket {:.4f}",
      lowest->risk, lowest->epoch, unbiased.trace.back().risk, nn.trace.back().risk,
      std::min_element(nn.trace.begin(), nn.trace.end(),
                       [](const TraceEntry& a, const TraceEntry& b) {
                         return a.clamped_bracket < b.clamped_bracket;
                       })->clamped_bracket);
  return v;
}

// 7 -----------------------------------------------------------------------------

Verdict determinism() {
  Verdict v;
  const auto dir = scratch("determinism");
  const std::string cfg = (kSourceDir / "configs" / "simulation.cfg").string();
  const auto path = [&](const std::string& name) { return (dir / name).string(); };
  const std::vector<std::string> outputs{
      "train.csv",          "test.csv",        "split/positive_interest.csv",
      "split/unlabeled.csv", "split/positive_loyal.csv", "split/priors.cfg",
      "model.txt",          "trace.txt",       "model_mb.txt",
      "trace_mb.txt"};
  auto pipeline = [&] {
    tool({"simulate", "-c", cfg, "--seed", "11", "-o", path("train.csv"), "--test-out",
          path("test.csv")});
    tool({"split", "-c", cfg, "--seed", "12", "-i", path("train.csv"), "-o", path("split")});
    tool({"train", "-c", cfg, "--seed", "13", "--data-dir", path("split"), "-m", path("model.txt"),
          "--trace-out", path("trace.txt"), "--epochs", "100"});
    tool({"train", "-c", cfg, "--seed", "13", "--data-dir", path("split"), "--minibatch-size",
          "64", "--init", "gaussian", "-m", path("model_mb.txt"), "--trace-out",
          path("trace_mb.txt"), "--epochs", "20"});
    std::vector<std::string> bytes;
    for (const auto& f : outputs) bytes.push_back(slurp(path(f)));
    return bytes;
  };
  const auto first = pipeline();
  const auto second = pipeline();
  std::size_t identical = 0, total_bytes = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    total_bytes += first[i].size();
    if (!first[i].empty() && first[i] == second[i]) {
      ++identical;
    } else {
      v.require(false, outputs[i] + " identical across runs");
    }
  }
  v.summary = fmt::format("{}/{} output files byte-identical ({} bytes)", identical,
                          outputs.size(), total_bytes);
  return v;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<Verdict()> check;
  };
  const Entry criteria[] = {
      {1, "unbiasedness", unbiasedness},
      {2, "reduction identities", reduction_identities},
      {3, "gradient correctness", gradient_correctness},
      {4, "simulation pipeline", simulation_pipeline},
      {5, "cost-sensitive three-way pipeline", marketing_pipeline},
      {6, "non-negative stability", non_negative_stability},
      {7, "determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.summary = std::string("exception: ") + e.what();
    }
    if (!v.pass) ++failed;
    fmt::print("{} criterion {} ({}): {}\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.summary);
    for (const auto& note : v.notes) fmt::print("  {}\n", note);
    std::fflush(stdout);
  }
  fmt::print("{} of 7 criteria passed\n", 7 - failed);
  return failed == 0 ? 0 : 1;
}
