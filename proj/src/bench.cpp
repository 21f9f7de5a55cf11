#include "bear/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "bear/count_sketch.hpp"
#include "bear/random.hpp"

namespace bear::bench {

namespace {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& xs, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += f(xs[i]);
  }
  return out;
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) {
  return mix64(base ^ mix64(trial + 1));
}

std::string schedule_name(const StepSchedule& s) {
  return s.kind == StepSchedule::Kind::kConstant ? "constant" : "invt";
}

std::string task_label(const Task& t) {
  switch (t.kind) {
    case TaskKind::kRegression: return "regression";
    case TaskKind::kBinary: return "binary";
    case TaskKind::kMulticlass: return "multiclass:" + std::to_string(t.num_classes);
  }
  return "?";
}

}  // namespace

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kPhaseTransition: return "phase_transition";
    case Experiment::kStepsizeSweep: return "stepsize_sweep";
    case Experiment::kClassifyVsCf: return "classify_vs_cf";
    case Experiment::kTopkSweep: return "topk_sweep";
    case Experiment::kGramCheck: return "gram_check";
  }
  return "?";
}

Experiment parse_experiment(std::string_view name) {
  for (Experiment e : {Experiment::kPhaseTransition, Experiment::kStepsizeSweep,
                       Experiment::kClassifyVsCf, Experiment::kTopkSweep,
                       Experiment::kGramCheck}) {
    if (experiment_name(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const {
  if (algos.empty()) throw ConfigError("no algorithms selected");
  if (trials == 0) throw ConfigError("trials must be positive");
  if (batch == 0) throw ConfigError("batch size must be positive");
  if (rows == 0) throw ConfigError("sketch rows must be positive");
  if (tau == 0) throw ConfigError("tau must be positive");
  if (!(schedule.eta0 > 0)) throw ConfigError("eta0 must be positive");
  if (schedule.kind == StepSchedule::Kind::kInverseTime && !(schedule.t0 > 0)) {
    throw ConfigError("t0 must be positive");
  }
  const bool synthetic = data == "synthetic";
  switch (experiment) {
    case Experiment::kPhaseTransition:
    case Experiment::kStepsizeSweep:
      if (!synthetic) throw ConfigError("this experiment requires --data synthetic");
      if (task.kind != TaskKind::kRegression) {
        throw ConfigError("synthetic recovery is a regression task");
      }
      if (k == 0 || k > p || n == 0) throw ConfigError("need 1 <= k <= p and n >= 1");
      if (!(noise_sd >= 0) || !std::isfinite(noise_sd)) {
        throw ConfigError("noise must be a finite non-negative value");
      }
      for (Algo a : algos) {
        if (a == Algo::kFeatureHashing) {
          throw ConfigError("fh cannot select features; not valid for synthetic recovery");
        }
      }
      if (experiment == Experiment::kPhaseTransition && cf_grid.empty()) {
        throw ConfigError("empty compression-factor grid");
      }
      if (experiment == Experiment::kStepsizeSweep && eta_grid.empty()) {
        throw ConfigError("empty step-size grid");
      }
      if (experiment == Experiment::kStepsizeSweep && fixed_width == 0) {
        throw ConfigError("sketch width must be positive");
      }
      break;
    case Experiment::kClassifyVsCf:
    case Experiment::kTopkSweep:
      if (synthetic) throw ConfigError("classification experiments need a VW data file");
      if (test_data.empty()) throw ConfigError("classification experiments need --test");
      if (task.kind == TaskKind::kRegression) {
        throw ConfigError("classification experiments need a binary or multiclass task");
      }
      if (use_auc && task.kind != TaskKind::kBinary) {
        throw ConfigError("AUC is only defined for binary tasks");
      }
      if (cf_grid.empty()) throw ConfigError("empty compression-factor grid");
      if (experiment == Experiment::kTopkSweep && k_grid.empty()) {
        throw ConfigError("empty top-k grid");
      }
      break;
    case Experiment::kGramCheck:
      if (p == 0 || p > 5000) throw ConfigError("gram_check needs 1 <= p <= 5000");
      if (cf_grid.empty()) throw ConfigError("empty compression-factor grid");
      break;
  }
  for (double cf : cf_grid) {
    if (!(cf > 0)) throw ConfigError("compression factors must be positive");
  }
  for (double eta : eta_grid) {
    if (!(eta > 0)) throw ConfigError("step sizes must be positive");
  }
  for (std::size_t kk : k_grid) {
    if (kk == 0) throw ConfigError("top-k values must be positive");
  }
}

std::uint64_t ExperimentConfig::effective_step_cap() const {
  if (step_cap) return step_cap;
  return std::max<std::uint64_t>(1, 50 * n / batch);
}

double ExperimentConfig::trainer_eta(double eta) const {
  return eta_per_example ? eta * static_cast<double>(batch) : eta;
}

std::string ExperimentConfig::fingerprint() const {
  std::ostringstream o;
  o << "experiment=" << experiment_name(experiment)
    << " algos=" << join(algos, [](Algo a) { return std::string(algo_name(a)); })
    << " trials=" << trials
    << " cf=" << join(cf_grid, fmt_num)
    << " eta=" << join(eta_grid, fmt_num)
    << " k_grid=" << join(k_grid, [](std::size_t v) { return std::to_string(v); })
    << " rows=" << rows << " tau=" << tau << " batch=" << batch
    << " schedule=" << schedule_name(schedule) << " eta0=" << fmt_num(schedule.eta0)
    << " t0=" << fmt_num(schedule.t0)
    << " eta_form=" << (eta_per_example ? "per_example" : "mean") << " seed=" << seed
    << " data=" << data << " test=" << test_data << " task=" << task_label(task)
    << " max_train=" << max_train << " max_test=" << max_test
    << " auc=" << (use_auc ? 1 : 0) << " p=" << p << " n=" << n << " k=" << k << " noise=" << fmt_num(noise_sd)
    << " width=" << fixed_width << " topk=" << top_k
    << " grad_tol=" << fmt_num(grad_tol) << " consecutive=" << consecutive
    << " step_cap=" << effective_step_cap();
  return o.str();
}

bool success_metric(const FeatureSet& selected, const FeatureSet& truth) {
  return is_subset(truth, selected);
}

double l2_error(const SparseVec& beta_hat, const SparseVec& beta_star) {
  return (beta_hat - beta_star).norm();
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc: scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks of the positives.
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += midrank;
        ++pos;
      } else if (labels[order[t]] != 0) {
        throw std::invalid_argument("auc: labels must be 0 or 1");
      }
    }
    i = j;
  }
  const std::size_t neg = scores.size() - pos;
  if (pos == 0 || neg == 0) {
    throw std::invalid_argument("auc: both classes must be present");
  }
  const double np = static_cast<double>(pos);
  return (rank_sum - np * (np + 1) / 2.0) / (np * static_cast<double>(neg));
}

std::size_t sketch_width_for(double cf, std::uint64_t p, std::size_t rows,
                             std::size_t classes) {
  const double m = std::round(static_cast<double>(p) / cf);
  const double per = m / static_cast<double>(classes * rows);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(per)));
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Synthetic recovery

TrainerConfig synthetic_trainer_config(const SyntheticTrial& trial) {
  TrainerConfig cfg;
  cfg.algo = trial.algo;
  cfg.task = Task::regression();
  cfg.sketch_rows = trial.rows;
  cfg.sketch_width = trial.width;
  cfg.top_k = trial.top_k;
  cfg.tau = trial.tau;
  cfg.dense_dim = trial.problem.p + 1;
  cfg.hashed_dim = trial.width * trial.rows;
  cfg.schedule = trial.schedule;
  cfg.seed = trial.hash_seed;
  return cfg;
}

namespace {

std::vector<Example> materialize(const SyntheticProblem& problem) {
  std::vector<Example> rows(problem.spec().n);
  for (std::uint64_t i = 0; i < rows.size(); ++i) rows[i] = problem.row(i);
  return rows;
}

// Minibatches are consecutive slices of the data, reshuffled every epoch, so
// a batch is a view rather than a copy of its rows.
class EpochSampler {
 public:
  EpochSampler(std::vector<Example> data, std::size_t batch, std::uint64_t seed)
      : data_(std::move(data)),
        batch_(std::min(batch, data_.size())),
        rng_(seed),
        pos_(data_.size()) {}

  Minibatch next() {
    if (pos_ + batch_ > data_.size()) {
      for (std::size_t i = data_.size(); i > 1; --i) {
        std::swap(data_[i - 1], data_[rng_.below(i)]);
      }
      pos_ = 0;
    }
    const Minibatch b(data_.data() + pos_, batch_);
    pos_ += batch_;
    return b;
  }

 private:
  std::vector<Example> data_;
  std::size_t batch_;
  Rng rng_;
  std::size_t pos_;
};

FeatureSet select_top(const Trainer& trainer, std::uint64_t p, std::size_t k) {
  if (is_sketched(trainer.config().algo)) return trainer.heap(0).members();
  TopKHeap heap(k);
  for (FeatureId id = 1; id <= p; ++id) heap.offer(id, trainer.weight(id, 0));
  return heap.members();
}

}  // namespace

SyntheticOutcome run_synthetic_trial(const SyntheticTrial& trial) {
  const SyntheticProblem problem(trial.problem);
  EpochSampler sampler(materialize(problem), trial.batch, trial.batch_seed);
  Trainer trainer(synthetic_trainer_config(trial));

  SyntheticOutcome out;
  std::size_t below = 0;
  while (out.steps < trial.step_cap) {
    StepReport report;
    try {
      report = trainer.step(sampler.next());
    } catch (const TrainError&) {
      break;  // diverged; evaluate the last finite state
    }
    ++out.steps;
    below = report.grad_norm < trial.grad_tol ? below + 1 : 0;
    if (below >= trial.consecutive) {
      out.converged = true;
      break;
    }
  }

  out.selected = select_top(trainer, trial.problem.p, trial.top_k);
  std::vector<Entry> est;
  for (FeatureId id : out.selected) {
    const double w = trainer.weight(id, 0);
    if (w != 0.0) est.push_back({id, w});
  }
  out.beta_hat = SparseVec::from_sorted(std::move(est));
  out.success = success_metric(out.selected, problem.support());
  out.l2_error = l2_error(out.beta_hat, problem.beta_star());
  return out;
}

namespace {

struct SyntheticJob {
  Algo algo;
  double cf;
  double eta;
  std::size_t trial;
  std::size_t width;
};

SyntheticTrial make_trial(const ExperimentConfig& cfg, const SyntheticJob& job) {
  const std::uint64_t ts = trial_seed(cfg.seed, job.trial);
  SyntheticTrial t;
  t.algo = job.algo;
  t.problem = {cfg.p, cfg.n, cfg.k, ts, 0.8, 1.2, cfg.noise_sd};
  t.rows = cfg.rows;
  t.width = job.width;
  t.top_k = cfg.k;
  t.tau = cfg.tau;
  t.batch = cfg.batch;
  t.schedule = cfg.schedule;
  t.schedule.eta0 = cfg.trainer_eta(job.eta);
  t.hash_seed = mix64(ts + 1);
  t.batch_seed = mix64(ts + 2);
  t.step_cap = cfg.effective_step_cap();
  t.grad_tol = cfg.grad_tol;
  t.consecutive = cfg.consecutive;
  return t;
}

std::vector<TrialResult> run_synthetic_jobs(const ExperimentConfig& cfg,
                                            const std::vector<SyntheticJob>& jobs) {
  std::vector<TrialResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const SyntheticJob& job = jobs[i];
    const auto start = std::chrono::steady_clock::now();
    const SyntheticTrial trial = make_trial(cfg, job);
    const SyntheticOutcome o = run_synthetic_trial(trial);
    TrialResult r;
    r.algo = job.algo;
    r.cf = job.cf;
    r.eta = job.eta;
    r.k = cfg.k;
    r.trial_seed = trial.problem.seed;
    r.success = o.success;
    r.l2_error = o.l2_error;
    r.steps = o.steps;
    r.converged = o.converged;
    r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    results[i] = r;
  });
  return results;
}

constexpr const char* kColumns =
    "row_type,experiment,algo,cf,eta,k,trial_seed,n_trials,success,l2_error,"
    "accuracy,auc,steps,converged";

std::string opt_num(double v) { return v < 0 ? "" : fmt_num(v); }

// Results must already be grouped: consecutive runs of equal (algo, cf, eta,
// k) form one aggregate row.
std::string write_csv(const ExperimentConfig& cfg,
                      const std::vector<TrialResult>& results) {
  std::ostringstream o;
  o << "# " << cfg.fingerprint() << '\n' << kColumns << '\n';
  const std::string exp(experiment_name(cfg.experiment));
  auto same_group = [](const TrialResult& a, const TrialResult& b) {
    return a.algo == b.algo && a.cf == b.cf && a.eta == b.eta && a.k == b.k;
  };
  for (std::size_t i = 0; i < results.size();) {
    std::size_t j = i;
    double succ = 0, l2 = 0, acc = 0, au = 0, steps = 0, conv = 0;
    std::size_t n_acc = 0, n_auc = 0;
    while (j < results.size() && same_group(results[i], results[j])) {
      const TrialResult& r = results[j];
      succ += r.success;
      l2 += r.l2_error;
      if (r.accuracy >= 0) acc += r.accuracy, ++n_acc;
      if (r.auc >= 0) au += r.auc, ++n_auc;
      steps += static_cast<double>(r.steps);
      conv += r.converged;
      ++j;
    }
    const double n = static_cast<double>(j - i);
    const TrialResult& g = results[i];
    o << "aggregate," << exp << ',' << algo_name(g.algo) << ',' << fmt_num(g.cf)
      << ',' << fmt_num(g.eta) << ',' << g.k << ",," << (j - i) << ','
      << fmt_num(succ / n) << ',' << fmt_num(l2 / n) << ','
      << (n_acc ? fmt_num(acc / static_cast<double>(n_acc)) : "") << ','
      << (n_auc ? fmt_num(au / static_cast<double>(n_auc)) : "") << ','
      << fmt_num(steps / n) << ',' << fmt_num(conv / n) << '\n';
    i = j;
  }
  if (cfg.per_trial) {
    for (const TrialResult& r : results) {
      o << "trial," << exp << ',' << algo_name(r.algo) << ',' << fmt_num(r.cf) << ','
        << fmt_num(r.eta) << ',' << r.k << ',' << r.trial_seed << ",1,"
        << (r.success ? 1 : 0) << ',' << fmt_num(r.l2_error) << ','
        << opt_num(r.accuracy) << ',' << opt_num(r.auc) << ',' << r.steps << ','
        << (r.converged ? 1 : 0) << '\n';
    }
  }
  return o.str();
}

}  // namespace

std::string run_phase_transition(const ExperimentConfig& cfg,
                                 std::vector<TrialResult>* trials_out) {
  cfg.validate();
  std::vector<SyntheticJob> jobs;
  for (Algo a : cfg.algos) {
    for (double cf : cfg.cf_grid) {
      const std::size_t width = sketch_width_for(cf, cfg.p, cfg.rows, 1);
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        jobs.push_back({a, cf, cfg.schedule.eta0, t, width});
      }
    }
  }
  auto results = run_synthetic_jobs(cfg, jobs);
  std::string csv = write_csv(cfg, results);
  if (trials_out) *trials_out = std::move(results);
  return csv;
}

std::string run_stepsize_sweep(const ExperimentConfig& cfg,
                               std::vector<TrialResult>* trials_out) {
  cfg.validate();
  const double cf = static_cast<double>(cfg.p) /
                    static_cast<double>(cfg.fixed_width * cfg.rows);
  std::vector<SyntheticJob> jobs;
  for (Algo a : cfg.algos) {
    for (double eta : cfg.eta_grid) {
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        jobs.push_back({a, cf, eta, t, cfg.fixed_width});
      }
    }
  }
  auto results = run_synthetic_jobs(cfg, jobs);
  std::string csv = write_csv(cfg, results);
  if (trials_out) *trials_out = std::move(results);
  return csv;
}

// ---------------------------------------------------------------------------
// Real-data classification

namespace {

struct LoadedData {
  Dataset train;
  Dataset test;
};

LoadedData load_data(const ExperimentConfig& cfg) {
  LoadedData d;
  try {
    d.train = read_vw_file(cfg.data, cfg.task, cfg.max_train);
    d.test = read_vw_file(cfg.test_data, cfg.task, cfg.max_test);
  } catch (const ParseError& e) {
    throw DataError(e.what());
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  if (d.train.examples.empty()) throw DataError("training set is empty");
  if (d.test.examples.empty()) throw DataError("test set is empty");
  return d;
}

struct ClassifyJob {
  Algo algo;
  double cf;
  std::size_t k;
  std::size_t trial;
};

TrialResult run_classify_job(const ExperimentConfig& cfg, const LoadedData& data,
                             std::uint64_t p, const ClassifyJob& job) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t classes = cfg.task.num_models();
  const std::uint64_t ts = trial_seed(cfg.seed, job.trial);

  TrainerConfig tc;
  tc.algo = job.algo;
  tc.task = cfg.task;
  tc.sketch_rows = cfg.rows;
  tc.sketch_width = sketch_width_for(job.cf, p, cfg.rows, classes);
  tc.top_k = job.k;
  tc.tau = cfg.tau;
  tc.dense_dim = p;
  tc.hashed_dim = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(static_cast<double>(p) / job.cf)));
  tc.schedule = cfg.schedule;
  tc.schedule.eta0 = cfg.trainer_eta(cfg.schedule.eta0);
  tc.seed = mix64(ts + 1);
  Trainer trainer(tc);

  const auto& ex = data.train.examples;
  TrialResult r;
  for (std::size_t start_i = 0; start_i < ex.size(); start_i += cfg.batch) {
    const std::size_t len = std::min(cfg.batch, ex.size() - start_i);
    try {
      trainer.step(Minibatch(ex.data() + start_i, len));
    } catch (const TrainError&) {
      break;
    }
    ++r.steps;
  }

  std::size_t correct = 0;
  std::vector<double> probs;
  std::vector<int> labels;
  for (const Example& t : data.test.examples) {
    const auto s = trainer.scores(t.x);
    if (predicted_label(cfg.task, s) == t.y) ++correct;
    if (cfg.use_auc) {
      probs.push_back(positive_probability(s));
      labels.push_back(t.y > 0.5 ? 1 : 0);
    }
  }
  r.algo = job.algo;
  r.cf = job.cf;
  r.k = job.k;
  r.trial_seed = ts;
  r.eta = cfg.schedule.eta0;
  r.accuracy = static_cast<double>(correct) /
               static_cast<double>(data.test.examples.size());
  if (cfg.use_auc) r.auc = auc(probs, labels);
  r.success = false;
  r.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - start)
                  .count();
  return r;
}

std::uint64_t ambient_dim(const LoadedData& d) {
  return std::max(d.train.stats.p_observed, d.test.stats.p_observed);
}

}  // namespace

std::string run_classify_vs_cf(const ExperimentConfig& cfg,
                               std::vector<TrialResult>* trials_out) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const std::uint64_t p = ambient_dim(data);
  const std::size_t k = cfg.top_k ? cfg.top_k : cfg.k;
  std::vector<ClassifyJob> jobs;
  for (Algo a : cfg.algos) {
    if (a == Algo::kSgd || a == Algo::kOlbfgs) {
      for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({a, 1.0, k, t});
      continue;
    }
    for (double cf : cfg.cf_grid) {
      for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({a, cf, k, t});
    }
  }
  std::vector<TrialResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    results[i] = run_classify_job(cfg, data, p, jobs[i]);
  });
  std::string csv = write_csv(cfg, results);
  if (trials_out) *trials_out = std::move(results);
  return csv;
}

std::string run_topk_sweep(const ExperimentConfig& cfg,
                           std::vector<TrialResult>* trials_out) {
  cfg.validate();
  const LoadedData data = load_data(cfg);
  const std::uint64_t p = ambient_dim(data);
  const double cf = cfg.cf_grid.front();
  std::vector<ClassifyJob> jobs;
  for (Algo a : cfg.algos) {
    if (!is_sketched(a)) continue;  // only bear and mission select features
    for (std::size_t k : cfg.k_grid) {
      for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({a, cf, k, t});
    }
  }
  if (jobs.empty()) throw ConfigError("top-k sweep needs bear and/or mission");
  std::vector<TrialResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    results[i] = run_classify_job(cfg, data, p, jobs[i]);
  });
  std::string csv = write_csv(cfg, results);
  if (trials_out) *trials_out = std::move(results);
  return csv;
}

// ---------------------------------------------------------------------------
// Gram eigenvalues of the sketch operator

GramReport run_gram_check(std::uint64_t p, std::size_t m, std::size_t d,
                          std::size_t trials, std::uint64_t seed,
                          std::size_t threads) {
  if (d == 0 || m < d || m % d != 0) {
    throw std::invalid_argument("gram check needs m to be a positive multiple of d");
  }
  const std::size_t c = m / d;
  const double scale = static_cast<double>(p) / static_cast<double>(m);
  GramReport report;
  report.p = p;
  report.m = m;
  report.d = d;
  report.trials.resize(trials);
  parallel_for(trials, threads, [&](std::size_t t) {
    const std::uint64_t s = trial_seed(seed, t);
    const CountSketch sketch(d, c, s);
    // G = S^T S accumulated feature by feature; row i of S has one entry
    // sign_j(i)/sqrt(d) in column j*c + bucket_j(i) for every row j.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                 static_cast<Eigen::Index>(m));
    std::vector<Eigen::Index> col(d);
    std::vector<double> val(d);
    const double inv_d = 1.0 / static_cast<double>(d);
    for (FeatureId i = 0; i < p; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        col[j] = static_cast<Eigen::Index>(j * c + sketch.bucket(j, i));
        val[j] = sketch.sign(j, i);
      }
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) {
          gram(col[a], col[b]) += val[a] * val[b] * inv_d;
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram,
                                                          Eigen::EigenvaluesOnly);
    const Eigen::VectorXd eig = solver.eigenvalues() / scale;
    GramTrial g;
    g.seed = s;
    g.mean_eig = eig.mean();
    g.min_eig = eig.minCoeff();
    g.max_eig = eig.maxCoeff();
    g.deviation = std::max(std::fabs(g.min_eig - 1.0), std::fabs(g.max_eig - 1.0));
    g.nonpositive = static_cast<std::size_t>((eig.array() <= 0.0).count());
    report.trials[t] = g;
  });
  for (const auto& g : report.trials) {
    report.mean_of_mean_eig += g.mean_eig;
    report.eps_emp += g.deviation;
    report.eps_emp_max = std::max(report.eps_emp_max, g.deviation);
  }
  if (trials) {
    report.mean_of_mean_eig /= static_cast<double>(trials);
    report.eps_emp /= static_cast<double>(trials);
  }
  return report;
}

namespace {

void gram_header(std::ostream& o, const std::string& fingerprint) {
  o << "# " << fingerprint << '\n';
  o << "row_type,p,m,d,seed,mean_eig,min_eig,max_eig,deviation,nonpositive\n";
}

void gram_rows(std::ostream& o, const GramReport& r) {
  std::size_t nonpositive = 0;
  for (const auto& g : r.trials) nonpositive += g.nonpositive;
  o << "aggregate," << r.p << ',' << r.m << ',' << r.d << ",,"
    << fmt_num(r.mean_of_mean_eig) << ",,," << fmt_num(r.eps_emp) << ',' << nonpositive
    << '\n';
  o << "worst," << r.p << ',' << r.m << ',' << r.d << ",,,,," << fmt_num(r.eps_emp_max)
    << ",\n";
  for (const auto& g : r.trials) {
    o << "trial," << r.p << ',' << r.m << ',' << r.d << ',' << g.seed << ','
      << fmt_num(g.mean_eig) << ',' << fmt_num(g.min_eig) << ','
      << fmt_num(g.max_eig) << ',' << fmt_num(g.deviation) << ',' << g.nonpositive
      << '\n';
  }
}

}  // namespace

std::string gram_report_csv(const GramReport& r, const std::string& fingerprint) {
  std::ostringstream o;
  gram_header(o, fingerprint);
  gram_rows(o, r);
  return o.str();
}

std::string run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::kPhaseTransition: return run_phase_transition(cfg);
    case Experiment::kStepsizeSweep: return run_stepsize_sweep(cfg);
    case Experiment::kClassifyVsCf: return run_classify_vs_cf(cfg);
    case Experiment::kTopkSweep: return run_topk_sweep(cfg);
    case Experiment::kGramCheck: {
      cfg.validate();
      std::ostringstream out;
      gram_header(out, cfg.fingerprint());
      for (double cf : cfg.cf_grid) {
        const std::size_t c = sketch_width_for(cf, cfg.p, cfg.rows, 1);
        gram_rows(out, run_gram_check(cfg.p, c * cfg.rows, cfg.rows, cfg.trials, cfg.seed,
                                      cfg.threads));
      }
      return out.str();
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Loss decay under the inverse-time schedule

double synthetic_loss(const SyntheticProblem& problem, const SparseVec& beta) {
  return loss_mse(beta, materialize(problem));
}

namespace {

SparseVec support_least_squares(const SyntheticProblem& problem,
                                std::span<const Example> rows) {
  const auto support = problem.support();
  const auto k = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), k);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    for (FeatureId id : support) x(r, c++) = rows[i].x.get(id);
    y(r) = rows[i].y;
  }
  const Eigen::VectorXd w = x.colPivHouseholderQr().solve(y);
  std::vector<Entry> out;
  Eigen::Index c = 0;
  for (FeatureId id : support) {
    const double v = w(c++);
    if (v != 0.0) out.push_back({id, v});
  }
  return SparseVec::from_sorted(std::move(out));
}

}  // namespace

SparseVec support_least_squares(const SyntheticProblem& problem) {
  return support_least_squares(problem, materialize(problem));
}

DecayCurve run_decay(const SyntheticTrial& base, std::span<const std::uint64_t> seeds,
                     std::span<const std::uint64_t> checkpoints,
                     std::size_t threads) {
  DecayCurve curve;
  curve.checkpoints.assign(checkpoints.begin(), checkpoints.end());
  curve.excess.assign(seeds.size(), std::vector<double>(checkpoints.size(), 0.0));
  parallel_for(seeds.size(), threads, [&](std::size_t si) {
    SyntheticTrial trial = base;
    trial.problem.seed = seeds[si];
    trial.hash_seed = mix64(seeds[si] + 1);
    trial.batch_seed = mix64(seeds[si] + 2);
    const SyntheticProblem problem(trial.problem);
    const std::vector<Example> data = materialize(problem);
    const double floor = loss_mse(support_least_squares(problem, data), data);
    EpochSampler sampler(data, trial.batch, trial.batch_seed);
    Trainer trainer(synthetic_trainer_config(trial));
    std::size_t next = 0;
    const FeatureSet all = [&] {
      std::vector<FeatureId> ids(trial.problem.p);
      std::iota(ids.begin(), ids.end(), FeatureId{1});
      return FeatureSet(std::move(ids));
    }();
    for (std::uint64_t t = 0; next < checkpoints.size(); ++t) {
      if (t == checkpoints[next]) {
        // The model in use: heap-restricted weights, as the trainer sees them.
        curve.excess[si][next] =
            loss_mse(trainer.query_restricted(all, 0), data) - floor;
        ++next;
        if (next == checkpoints.size()) break;
      }
      trainer.step(sampler.next());
    }
  });
  curve.median_excess.resize(checkpoints.size());
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    std::vector<double> col;
    for (const auto& row : curve.excess) col.push_back(row[i]);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    curve.median_excess[i] = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return curve;
}

}  // namespace bear::bench
