#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "bear/bench.hpp"
#include "bear/data.hpp"
#include "bear/trainer.hpp"

namespace {

using bear::bench::ConfigError;
using bear::bench::DataError;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

bear::Task parse_task(const std::string& s) {
  if (s == "regression") return bear::Task::regression();
  if (s == "binary") return bear::Task::binary();
  if (s.rfind("multiclass:", 0) == 0) {
    std::size_t used = 0;
    const std::string num = s.substr(11);
    unsigned long c = 0;
    try {
      c = std::stoul(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == num.size() && c >= 2) return bear::Task::multiclass(c);
  }
  throw ConfigError("task must be regression, binary or multiclass:<C>, got '" + s + "'");
}

bear::StepSchedule::Kind parse_schedule(const std::string& s) {
  if (s == "constant") return bear::StepSchedule::Kind::kConstant;
  if (s == "invt") return bear::StepSchedule::Kind::kInverseTime;
  throw ConfigError("schedule must be constant or invt, got '" + s + "'");
}

// Raw option values; turned into an ExperimentConfig after parsing so that
// every semantic check raises ConfigError.
struct Options {
  std::string data = "synthetic";
  std::string test;
  std::string task = "regression";
  std::vector<std::string> algos;
  std::vector<double> cf;
  std::vector<double> eta;
  std::vector<std::size_t> k_grid;
  std::size_t rows = 0;
  std::size_t topk = 0;
  std::size_t tau = 5;
  std::size_t batch = 10;
  std::string schedule = "constant";
  double eta0 = 1e-2;
  double t0 = 1.0;
  std::string eta_form = "mean";
  std::size_t trials = 10;
  std::uint64_t seed = 1;
  std::string out;
  bool per_trial = false;
  std::uint64_t p = 1000;
  std::uint64_t n = 900;
  std::uint64_t k = 8;
  double noise = 0.0;
  std::size_t width = 150;
  std::size_t max_train = 0;
  std::size_t max_test = 0;
  bool auc = false;
  std::uint64_t step_cap = 0;
  double grad_tol = 1e-7;
  std::size_t threads = 0;
};

void add_experiment_options(CLI::App* app, Options& o) {
  app->add_option("--data", o.data, "VW training file or 'synthetic'");
  app->add_option("--test", o.test, "VW test file (classification experiments)");
  app->add_option("--task", o.task, "regression | binary | multiclass:<C>");
  app->add_option("--algo", o.algos, "bear, mission, sgd, olbfgs, fh")->delimiter(',');
  app->add_option("--cf", o.cf, "compression factors p/m")->delimiter(',');
  app->add_option("--eta", o.eta, "step-size grid (stepsize_sweep)")->delimiter(',');
  app->add_option("--k-grid", o.k_grid, "heap sizes (topk_sweep)")->delimiter(',');
  app->add_option("--rows", o.rows, "sketch rows d (default 3 synthetic, 5 real data)");
  app->add_option("--topk", o.topk, "heap capacity for real-data runs");
  app->add_option("--tau", o.tau, "curvature history length");
  app->add_option("--batch", o.batch, "minibatch size");
  app->add_option("--schedule", o.schedule, "constant | invt");
  app->add_option("--eta0", o.eta0, "base step size");
  app->add_option("--t0", o.t0, "inverse-time offset");
  app->add_option("--eta-form", o.eta_form,
                  "mean: step applies to the batch-mean gradient; per-example: "
                  "multiplied by the batch size first");
  app->add_option("--trials", o.trials, "trials per grid point");
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--out", o.out, "output CSV path (stdout when omitted)");
  app->add_flag("--per-trial", o.per_trial, "also write one row per trial");
  app->add_option("--p", o.p, "synthetic dimension");
  app->add_option("--n", o.n, "synthetic rows");
  app->add_option("--k", o.k, "synthetic support size");
  app->add_option("--noise", o.noise, "synthetic label noise standard deviation");
  app->add_option("--width", o.width, "fixed sketch width (stepsize_sweep)");
  app->add_option("--max-train", o.max_train, "training examples to read (0 = all)");
  app->add_option("--max-test", o.max_test, "test examples to read (0 = all)");
  app->add_flag("--auc", o.auc, "report AUC (binary tasks)");
  app->add_option("--step-cap", o.step_cap, "synthetic step cap (0 = 50 n / batch)");
  app->add_option("--grad-tol", o.grad_tol, "gradient-norm stopping threshold");
  app->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

bear::bench::ExperimentConfig to_config(bear::bench::Experiment exp, const Options& o) {
  bear::bench::ExperimentConfig cfg;
  cfg.experiment = exp;
  cfg.data = o.data;
  cfg.test_data = o.test;
  cfg.task = parse_task(o.task);
  if (!o.algos.empty()) {
    cfg.algos.clear();
    for (const auto& a : o.algos) {
      try {
        cfg.algos.push_back(bear::parse_algo(a));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  } else if (exp == bear::bench::Experiment::kClassifyVsCf) {
    cfg.algos = {bear::Algo::kBear, bear::Algo::kMission, bear::Algo::kSgd,
                 bear::Algo::kOlbfgs, bear::Algo::kFeatureHashing};
  }
  if (!o.cf.empty()) cfg.cf_grid = o.cf;
  if (!o.eta.empty()) cfg.eta_grid = o.eta;
  cfg.k_grid = o.k_grid;
  const bool synthetic = o.data == "synthetic";
  cfg.rows = o.rows ? o.rows : (synthetic ? 3 : 5);
  cfg.top_k = o.topk;
  cfg.tau = o.tau;
  cfg.batch = o.batch;
  cfg.schedule = {parse_schedule(o.schedule), o.eta0, o.t0};
  if (o.eta_form == "per-example") {
    cfg.eta_per_example = true;
  } else if (o.eta_form != "mean") {
    throw ConfigError("eta-form must be mean or per-example");
  }
  cfg.trials = o.trials;
  cfg.seed = o.seed;
  cfg.per_trial = o.per_trial;
  cfg.p = o.p;
  cfg.n = o.n;
  cfg.k = o.k;
  cfg.noise_sd = o.noise;
  cfg.fixed_width = o.width;
  cfg.max_train = o.max_train;
  cfg.max_test = o.max_test;
  cfg.use_auc = o.auc;
  cfg.step_cap = o.step_cap;
  cfg.grad_tol = o.grad_tol;
  cfg.threads = o.threads;
  cfg.validate();
  return cfg;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw std::runtime_error("cannot write " + path);
}

struct TrainOptions {
  std::string data;
  std::string task = "binary";
  std::string algo = "bear";
  std::size_t rows = 5;
  std::size_t width = 1000;
  std::size_t topk = 100;
  std::size_t tau = 5;
  std::size_t batch = 10;
  std::size_t dim = 0;
  std::string schedule = "constant";
  double eta0 = 1e-2;
  double t0 = 1.0;
  std::uint64_t seed = 1;
  std::string checkpoint;
  std::string resume;
  std::string features_out;
};

int run_train(const TrainOptions& o) {
  bear::Task task = parse_task(o.task);
  bear::Dataset data;
  try {
    data = bear::read_vw_file(o.data, task);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  std::optional<bear::Trainer> trainer;
  if (!o.resume.empty()) {
    try {
      trainer.emplace(bear::Trainer::load_checkpoint(o.resume));
    } catch (const std::runtime_error& e) {
      throw DataError(e.what());
    }
  } else {
    bear::TrainerConfig tc;
    tc.algo = bear::parse_algo(o.algo);
    tc.task = task;
    tc.sketch_rows = o.rows;
    tc.sketch_width = o.width;
    tc.top_k = o.topk;
    tc.tau = o.tau;
    const std::size_t dim = o.dim ? o.dim : data.stats.p_observed;
    tc.dense_dim = dim;
    tc.hashed_dim = o.dim ? o.dim : o.rows * o.width;
    tc.schedule = {parse_schedule(o.schedule), o.eta0, o.t0};
    tc.seed = o.seed;
    try {
      trainer.emplace(tc);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto& ex = data.examples;
  if (o.batch == 0) throw ConfigError("batch size must be positive");
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < ex.size(); i += o.batch) {
    const std::size_t len = std::min(o.batch, ex.size() - i);
    try {
      trainer->step(bear::Minibatch(ex.data() + i, len));
    } catch (const bear::TrainError&) {
      ++skipped;
    }
  }
  std::cerr << "steps=" << trainer->steps() << " skipped=" << skipped << '\n';
  if (!o.checkpoint.empty()) trainer->save_checkpoint(o.checkpoint);
  if (!o.features_out.empty()) {
    std::ofstream f(o.features_out);
    f << "class,feature,weight\n";
    const auto sel = trainer->select_features();
    for (std::size_t c = 0; c < sel.size(); ++c) {
      for (const auto& e : sel[c]) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", e.value);
        f << c << ',' << e.id << ',' << buf << '\n';
      }
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sketched feature-selection experiments"};
  app.require_subcommand(1);

  Options opts;
  std::map<CLI::App*, bear::bench::Experiment> experiments;
  for (auto e : {bear::bench::Experiment::kPhaseTransition,
                 bear::bench::Experiment::kStepsizeSweep,
                 bear::bench::Experiment::kClassifyVsCf,
                 bear::bench::Experiment::kTopkSweep,
                 bear::bench::Experiment::kGramCheck}) {
    auto* sub = app.add_subcommand(std::string(bear::bench::experiment_name(e)));
    add_experiment_options(sub, opts);
    experiments[sub] = e;
  }

  std::string stats_data, stats_task = "binary", stats_name;
  auto* stats = app.add_subcommand("stats", "Dataset statistics as one CSV row");
  stats->add_option("--data", stats_data, "VW file")->required();
  stats->add_option("--task", stats_task, "regression | binary | multiclass:<C>");
  stats->add_option("--name", stats_name, "name column (defaults to the file name)");

  TrainOptions topts;
  auto* train = app.add_subcommand("train", "Single-epoch training on a VW file");
  train->add_option("--data", topts.data, "VW file")->required();
  train->add_option("--task", topts.task, "regression | binary | multiclass:<C>");
  train->add_option("--algo", topts.algo, "bear, mission, sgd, olbfgs, fh");
  train->add_option("--rows", topts.rows, "sketch rows");
  train->add_option("--width", topts.width, "sketch width per row");
  train->add_option("--topk", topts.topk, "heap capacity");
  train->add_option("--tau", topts.tau, "curvature history length");
  train->add_option("--batch", topts.batch, "minibatch size");
  train->add_option("--dim", topts.dim, "dense or hashed dimension (default from data)");
  train->add_option("--schedule", topts.schedule, "constant | invt");
  train->add_option("--eta0", topts.eta0, "base step size");
  train->add_option("--t0", topts.t0, "inverse-time offset");
  train->add_option("--seed", topts.seed, "hash seed");
  train->add_option("--checkpoint", topts.checkpoint, "directory to write state into");
  train->add_option("--resume", topts.resume, "checkpoint directory to continue from");
  train->add_option("--features-out", topts.features_out, "CSV of selected features");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& [sub, exp] : experiments) {
      if (sub->parsed()) {
        const auto cfg = to_config(exp, opts);
        emit(bear::bench::run_experiment(cfg), opts.out);
        return 0;
      }
    }
    if (stats->parsed()) {
      bear::Dataset d;
      try {
        d = bear::read_vw_file(stats_data, parse_task(stats_task));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::runtime_error& e) {
        throw DataError(e.what());
      }
      const std::string name =
          stats_name.empty() ? std::filesystem::path(stats_data).filename().string()
                             : stats_name;
      std::cout << "name,p_observed,n,avg_active\n"
                << bear::stats_csv_row(name, d.stats) << '\n';
      return 0;
    }
    if (train->parsed()) return run_train(topts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
