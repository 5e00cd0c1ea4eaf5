#include "dpu/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dpu/config.hpp"
#include "dpu/data.hpp"
#include "dpu/error.hpp"
#include "dpu/eval.hpp"
#include "dpu/kernels.hpp"
#include "dpu/model.hpp"
#include "dpu/risk.hpp"
#include "dpu/rng.hpp"
#include "dpu/train.hpp"
#include "dpu/version.hpp"

namespace dpu::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kPositiveFile = "positive_interest.csv";
constexpr const char* kUnlabeledFile = "unlabeled.csv";
constexpr const char* kLoyalFile = "positive_loyal.csv";
constexpr const char* kHeldOutFile = "held_out.csv";
constexpr const char* kPriorsFile = "priors.cfg";

// Options shared by every subcommand: config files, seed and key overrides.
struct Common {
  std::vector<std::string> configs;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::string command_line;

  KeyValueConfig load() const {
    KeyValueConfig cfg;
    for (const auto& path : configs) cfg.load(path);
    for (const auto& [k, v] : overrides) cfg.set(k, v);
    cfg.check_known_keys();
    return cfg;
  }

  std::uint64_t seed(const KeyValueConfig& cfg) const { return cfg.get_uint("seed", 0); }

  std::string header(std::uint64_t seed) const {
    return fmt::format("{} {} | command: {} | seed: {}", kToolName, kVersion, command_line, seed);
  }
};

void add_config(CLI::App* app, Common& common) {
  app->add_option("-c,--config", common.configs,
                  "Key-value config file(s); later files override earlier ones")
      ->check(CLI::ExistingFile);
}

// Flag that overrides a config key. Flags always win over config files.
CLI::Option* add_override(CLI::App* app, Common& common, const std::string& flag,
                          const std::string& key, const std::string& help) {
  return app->add_option_function<std::string>(
      flag, [&common, key](const std::string& v) { common.overrides.emplace_back(key, v); },
      help + " [config: " + key + "]");
}

void add_seed(CLI::App* app, Common& common) {
  add_override(app, common, "--seed", "seed", "Seed for all randomness");
}

void add_risk_overrides(CLI::App* app, Common& common) {
  add_override(app, common, "--loss", "risk.loss", "squared | log | logistic | hinge | zero_one");
  add_override(app, common, "--estimator", "risk.estimator",
               "unbiased | non_negative | cost_sensitive");
  add_override(app, common, "--c-fn", "risk.c_fn", "False-negative cost");
  add_override(app, common, "--c-fp", "risk.c_fp", "False-positive cost");
  add_override(app, common, "--beta", "priors.beta", "Class prior p(y = +1)");
  add_override(app, common, "--gamma", "priors.gamma", "Class prior p(y = +1, z = +1)");
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

struct TripleInputs {
  std::string dir;
  std::string positive;
  std::string unlabeled;
  std::string loyal;

  void add(CLI::App* app) {
    auto* d = app->add_option("--data-dir", dir,
                              "Directory holding positive_interest.csv, unlabeled.csv and "
                              "positive_loyal.csv");
    auto* p = app->add_option("--positive", positive, "Positive-interest features CSV");
    auto* u = app->add_option("--unlabeled", unlabeled, "Unlabeled features CSV");
    auto* l = app->add_option("--loyal", loyal, "Positive-loyal features CSV");
    p->excludes(d);
    u->excludes(d);
    l->excludes(d);
  }

  bool given() const {
    return !dir.empty() || !positive.empty() || !unlabeled.empty() || !loyal.empty();
  }

  PuTriple load() const {
    const fs::path p = dir.empty() ? fs::path(positive) : fs::path(dir) / kPositiveFile;
    const fs::path u = dir.empty() ? fs::path(unlabeled) : fs::path(dir) / kUnlabeledFile;
    const fs::path l = dir.empty() ? fs::path(loyal) : fs::path(dir) / kLoyalFile;
    const std::pair<const fs::path*, const char*> inputs[] = {
        {&p, "--positive"}, {&u, "--unlabeled"}, {&l, "--loyal"}};
    for (const auto& [path, flag] : inputs) {
      if (path->empty()) throw DataError(fmt::format("missing input: {} or --data-dir", flag));
      if (!fs::exists(*path)) {
        throw DataError(fmt::format("input file '{}' does not exist", path->string()));
      }
    }
    PuTriple t{load_csv(p, CsvSchema::FeaturesOnly).features,
               load_csv(u, CsvSchema::FeaturesOnly).features,
               load_csv(l, CsvSchema::FeaturesOnly).features};
    t.validate();
    return t;
  }
};

ClassPriors require_priors(const KeyValueConfig& cfg) {
  auto priors = class_priors(cfg);
  if (!priors) {
    throw DataError(
        "class priors are required: pass --beta and --gamma or set priors.beta / priors.gamma "
        "in a config file");
  }
  return *priors;
}

// simulate ------------------------------------------------------------------

struct Simulate {
  Common common;
  std::string out_path;
  std::string test_out;

  void setup(CLI::App& parent) {
    auto* app = parent.add_subcommand("simulate", "Draw a labeled Gaussian-mixture sample");
    add_config(app, common);
    add_seed(app, common);
    add_override(app, common, "--test-scale", "test.scale",
                 "Size of the --test-out draw relative to the main sample");
    app->add_option("-o,--out", out_path, "Output CSV (f0.., y, z)")->required();
    app->add_option("--test-out", test_out,
                    "Also write an independent labeled draw for evaluation");
  }

  int run(std::ostream& out) const {
    const auto cfg = common.load();
    const auto seed = common.seed(cfg);
    const auto mixture = mixture_config(cfg, seed);
    const auto samples = generate_mixture(mixture);
    const auto header = common.header(seed);
    save_labeled_csv(out_path, samples, header);
    fmt::print(out, "wrote {} samples (d = {}) to {}\n", samples.size(), mixture.dim(), out_path);
    if (!samples.empty()) {
      const auto priors = empirical_priors(samples);
      fmt::print(out, "empirical priors: beta = {:.17g}, gamma = {:.17g}, alpha = {:.17g}\n",
                 priors.beta(), priors.gamma(), priors.alpha());
    }
    if (!test_out.empty()) {
      MixtureConfig test = mixture.scaled(cfg.get_double("test.scale", 1.0));
      test.seed = derive_seed(seed, 1);
      const auto test_samples = generate_mixture(test);
      save_labeled_csv(test_out, test_samples, header);
      fmt::print(out, "wrote {} test samples to {}\n", test_samples.size(), test_out);
    }
    return kOk;
  }
};

// split ---------------------------------------------------------------------

struct Split {
  Common common;
  std::string in_path;
  std::string out_dir;

  void setup(CLI::App& parent) {
    auto* app = parent.add_subcommand("split", "Turn a labeled CSV into the three observed sets");
    add_config(app, common);
    add_seed(app, common);
    add_override(app, common, "--protocol", "split.protocol",
                 "pu (partial labeling) | three_way (train/test + three filtered parts)");
    add_override(app, common, "--y-label-frac", "split.y_label_frac",
                 "Fraction of y = +1 rows labeled as positive-interest");
    add_override(app, common, "--z-label-frac", "split.z_label_frac",
                 "Fraction of the loyal pool labeled as positive-loyal");
    app->add_option("-i,--in", in_path, "Fully labeled input CSV")->required();
    app->add_option("-o,--out-dir", out_dir, "Output directory")->required();
  }

  int run(std::ostream& out) const {
    const auto cfg = common.load();
    const auto seed = common.seed(cfg);
    if (!fs::exists(in_path)) {
      throw DataError(fmt::format("input file '{}' does not exist", in_path));
    }
    const auto samples = load_csv(in_path, CsvSchema::FullyLabeled).labeled();
    const auto protocol = cfg.get_string("split.protocol", "pu");

    PuTriple triple;
    std::vector<LabeledSample> held_out;
    if (protocol == "pu") {
      auto s = split_to_pu(samples, split_config(cfg, seed));
      triple = std::move(s.triple);
      held_out = std::move(s.held_out);
    } else if (protocol == "three_way") {
      auto s = three_way_split(samples, three_way_config(cfg, seed));
      triple = std::move(s.triple);
      held_out = std::move(s.test);
    } else {
      throw DataError(fmt::format("split.protocol '{}' is not 'pu' or 'three_way'", protocol));
    }

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    const auto header = common.header(seed);
    save_features_csv(dir / kPositiveFile, triple.positive_interest, header);
    save_features_csv(dir / kUnlabeledFile, triple.unlabeled, header);
    save_features_csv(dir / kLoyalFile, triple.positive_loyal, header);
    if (!held_out.empty()) save_labeled_csv(dir / kHeldOutFile, held_out, header);
    {
      auto priors_out = open_out(dir / kPriorsFile);
      write_priors(priors_out, empirical_priors(samples),
                   header + " | empirical priors of the input sample");
    }
    fmt::print(out, "J = {}, K = {}, L = {}, held out = {}\n", triple.positive_interest.rows(),
               triple.unlabeled.rows(), triple.positive_loyal.rows(), held_out.size());
    fmt::print(out, "wrote {}\n", out_dir);
    return kOk;
  }
};

// train ---------------------------------------------------------------------

struct Train {
  Common common;
  TripleInputs inputs;
  std::string model_out;
  std::string trace_out;

  void setup(CLI::App& parent) {
    auto* app = parent.add_subcommand("train", "Fit a linear scorer by double-PU risk minimisation");
    add_config(app, common);
    add_seed(app, common);
    add_risk_overrides(app, common);
    add_override(app, common, "--learning-rate", "train.learning_rate", "Gradient step size");
    add_override(app, common, "--epochs", "train.epochs", "Number of epochs");
    add_override(app, common, "--minibatch-size", "train.minibatch_size",
                 "Total minibatch size (0 = full batch)");
    add_override(app, common, "--l2", "train.l2_penalty", "L2 penalty on the weights");
    add_override(app, common, "--init", "train.init", "zeros | gaussian");
    inputs.add(app);
    app->add_option("-m,--model-out", model_out, "Model file to write")->required();
    app->add_option("--trace-out", trace_out, "Per-epoch trace file (epoch risk grad_norm)");
  }

  int run(std::ostream& out) const {
    const auto cfg = common.load();
    const auto seed = common.seed(cfg);
    const auto config = train_config(cfg, seed);
    const auto priors = require_priors(cfg);
    const auto data = inputs.load();
    const auto result = train(data, priors, config);
    const auto header = common.header(seed);
    save_model(model_out, result.model, header);
    if (!trace_out.empty()) {
      auto f = open_out(trace_out);
      write_trace(f, result.trace, header);
    }
    const auto& last = result.trace.back();
    fmt::print(out, "epochs = {}\nfinal risk = {:.17g}\nfinal unbiased risk = {:.17g}\n"
               "final grad norm = {:.17g}\n",
               last.epoch, last.risk, train_trace_final_risk(result.trace), last.grad_norm);
    fmt::print(out, "wrote {}\n", model_out);
    return kOk;
  }
};

// predict -------------------------------------------------------------------

struct Predict {
  Common common;
  std::string model_path;
  std::string in_path;
  std::string out_path;
  double threshold = 0.0;

  void setup(CLI::App& parent) {
    auto* app = parent.add_subcommand("predict", "Score feature rows with a trained model");
    add_config(app, common);
    app->add_option("-m,--model", model_path, "Model file")->required();
    app->add_option("-i,--in", in_path, "Features CSV (y, z columns are ignored)")->required();
    app->add_option("-o,--out", out_path, "Output CSV: score, posterior, label")->required();
    app->add_option("--threshold", threshold, "Decision threshold on the score");
  }

  int run(std::ostream& out) const {
    const auto cfg = common.load();
    const auto model = load_model(model_path);
    if (!fs::exists(in_path)) {
      throw DataError(fmt::format("input file '{}' does not exist", in_path));
    }
    const auto x = load_csv(in_path, CsvSchema::FeaturesOnly).features;
    const auto scores = score_rows(x, model);
    auto f = open_out(out_path);
    fmt::print(f, "# {}\nscore,posterior,label\n", common.header(common.seed(cfg)));
    std::size_t positives = 0;
    for (const double s : scores) {
      const int label = s > threshold ? 1 : -1;
      positives += label == 1;
      fmt::print(f, "{:.17g},{:.17g},{}\n", s, sigmoid(s), label);
    }
    fmt::print(out, "scored {} rows ({} predicted +1); wrote {}\n", scores.size(), positives,
               out_path);
    return kOk;
  }
};

// evaluate ------------------------------------------------------------------

struct Evaluate {
  Common common;
  TripleInputs inputs;
  std::string model_path;
  std::string test_path;
  std::string roc_out;
  std::string rows_out;

  void setup(CLI::App& parent) {
    auto* app = parent.add_subcommand(
        "evaluate", "Metrics on a labeled test set, plus the risk breakdown on PU data");
    add_config(app, common);
    add_risk_overrides(app, common);
    add_override(app, common, "--threshold", "eval.threshold", "Decision threshold on the score");
    inputs.add(app);
    app->add_option("-m,--model", model_path, "Model file")->required();
    app->add_option("-t,--test", test_path, "Fully labeled test CSV")->required();
    app->add_option("--roc-out", roc_out, "Write ROC points (fpr tpr threshold)");
    app->add_option("--rows-out", rows_out, "Write machine-readable field,value rows");
  }

  int run(std::ostream& out) const {
    const auto cfg = common.load();
    const auto seed = common.seed(cfg);
    const auto model = load_model(model_path);
    if (!fs::exists(test_path)) {
      throw DataError(fmt::format("test file '{}' does not exist", test_path));
    }
    const auto test = load_csv(test_path, CsvSchema::FullyLabeled).labeled();
    const double threshold = cfg.get_double("eval.threshold", 0.0);
    const RiskSpec spec = risk_spec(cfg);
    const double c_fn = spec.c_fn;
    const double c_fp = spec.c_fp;
    const auto report = evaluate(model, test, threshold, c_fn, c_fp);

    std::vector<std::pair<std::string, std::string>> rows;
    auto field = [&](const std::string& name, const std::string& value) {
      fmt::print(out, "{} = {}\n", name, value);
      rows.emplace_back(name, value);
    };
    field("n", std::to_string(report.n()));
    field("auc", report.auc ? fmt::format("{:.17g}", *report.auc) : "NA");
    field("tp", std::to_string(report.tp));
    field("fp", std::to_string(report.fp));
    field("tn", std::to_string(report.tn));
    field("fn", std::to_string(report.fn));
    field("accuracy", fmt::format("{:.17g}", report.accuracy()));
    field("cost_weighted_error", fmt::format("{:.17g}", report.cost_weighted_error));
    field("zero_one_risk", fmt::format("{:.17g}", report.zero_one_risk));

    if (inputs.given()) {
      const auto priors = require_priors(cfg);
      const auto data = inputs.load();
      const auto r = double_pu_risk(model, data, priors, spec);
      field("estimator", std::string(to_string(spec.estimator)));
      field("loss", std::string(to_string(spec.loss)));
      field("t1", fmt::format("{:.17g}", r.terms.t1));
      field("t2", fmt::format("{:.17g}", r.terms.t2));
      field("t3", fmt::format("{:.17g}", r.terms.t3));
      field("t4", fmt::format("{:.17g}", r.terms.t4));
      field("t5", fmt::format("{:.17g}", r.terms.t5));
      field("total", fmt::format("{:.17g}", r.terms.total()));
      field("risk", fmt::format("{:.17g}", r.value));
    }

    const auto header = common.header(seed);
    if (!rows_out.empty()) {
      auto f = open_out(rows_out);
      fmt::print(f, "# {}\nfield,value\n", header);
      for (const auto& [k, v] : rows) fmt::print(f, "{},{}\n", k, v);
    }
    if (!roc_out.empty()) {
      if (!report.auc) throw DataError("cannot write an ROC curve: the test set has one W class");
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& s : test) {
        scores.push_back(model.score(s.x));
        labels.push_back(s.w());
      }
      auto f = open_out(roc_out);
      fmt::print(f, "# {}\n", header);
      for (const auto& p : roc_curve(scores, labels)) {
        fmt::print(f, "{:.17g} {:.17g} {:.17g}\n", p.fpr, p.tpr, p.threshold);
      }
    }
    return kOk;
  }
};

// bias-check ----------------------------------------------------------------

struct BiasCheck {
  Common common;
  std::string model_path;

  void setup(CLI::App& parent) {
    auto* app = parent.add_subcommand(
        "bias-check", "Monte-Carlo check that the double-PU risk is unbiased for a fixed model");
    add_config(app, common);
    add_seed(app, common);
    add_override(app, common, "--loss", "risk.loss", "Loss (default zero_one)");
    add_override(app, common, "--estimator", "risk.estimator",
                 "unbiased | non_negative | cost_sensitive");
    add_override(app, common, "--c-fn", "risk.c_fn", "False-negative cost");
    add_override(app, common, "--c-fp", "risk.c_fp", "False-positive cost");
    add_override(app, common, "--resamples", "bias_check.resamples", "Number of PU resamples R");
    add_override(app, common, "--oracle-size", "bias_check.oracle_size",
                 "Labeled rows used for the oracle risk");
    app->add_option("-m,--model", model_path,
                    "Fixed model (default: seeded random linear model)");
  }

  int run(std::ostream& out) const {
    KeyValueConfig cfg = common.load();
    if (!cfg.has("risk.loss")) cfg.set("risk.loss", "zero_one");
    const auto seed = common.seed(cfg);
    const auto mixture = mixture_config(cfg, seed);
    const RiskSpec spec = risk_spec(cfg);

    LinearScorer model;
    if (!model_path.empty()) {
      model = load_model(model_path);
    } else {
      Rng rng(derive_seed(seed, 0xB1A5));
      const double scale = cfg.get_double("bias_check.model_scale", 1.0);
      std::vector<double> w(mixture.dim());
      for (auto& v : w) v = scale * rng.normal();
      model = LinearScorer(std::move(w), scale * rng.normal());
    }

    BiasCheckOptions options;
    options.split = split_config(cfg, seed);
    options.resamples = cfg.get_uint("bias_check.resamples", options.resamples);
    options.oracle_size = cfg.get_uint("bias_check.oracle_size", options.oracle_size);
    options.seed = seed;
    const auto r = bias_check(mixture, model, spec, options);
    fmt::print(out, "# {}\n", common.header(seed));
    fmt::print(out, "estimator = {}\nloss = {}\nresamples = {}\n", to_string(spec.estimator),
               to_string(spec.loss), options.resamples);
    fmt::print(out, "mean = {:.17g}\nse = {:.17g}\noracle = {:.17g}\nz = {:.17g}\n", r.mean_risk,
               r.std_error, r.oracle_risk, r.z_score);
    return kOk;
  }
};

std::string join_args(int argc, const char* const* argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double positive-unlabeled learning toolkit", kToolName};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  Simulate simulate;
  Split split;
  Train train_cmd;
  Predict predict;
  Evaluate evaluate_cmd;
  BiasCheck bias;
  simulate.setup(app);
  split.setup(app);
  train_cmd.setup(app);
  predict.setup(app);
  evaluate_cmd.setup(app);
  bias.setup(app);

  const std::string command_line = join_args(argc, argv);
  for (Common* c : {&simulate.common, &split.common, &train_cmd.common, &predict.common,
                    &evaluate_cmd.common, &bias.common}) {
    c->command_line = command_line;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      // --help / --version
      return app.exit(e, out, err);
    }
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return simulate.run(out);
    if (name == "split") return split.run(out);
    if (name == "train") return train_cmd.run(out);
    if (name == "predict") return predict.run(out);
    if (name == "evaluate") return evaluate_cmd.run(out);
    if (name == "bias-check") return bias.run(out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace dpu::cli
