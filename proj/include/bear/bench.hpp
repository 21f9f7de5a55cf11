#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bear/data.hpp"
#include "bear/svec.hpp"
#include "bear/trainer.hpp"

namespace bear::bench {

/// Invalid experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or inconsistent data (CLI exit code 3).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment {
  kPhaseTransition,
  kStepsizeSweep,
  kClassifyVsCf,
  kTopkSweep,
  kGramCheck,
};

std::string_view experiment_name(Experiment e);
Experiment parse_experiment(std::string_view name);

struct ExperimentConfig {
  Experiment experiment = Experiment::kPhaseTransition;
  std::vector<Algo> algos = {Algo::kBear, Algo::kMission};
  std::size_t trials = 10;
  std::vector<double> cf_grid = {10.0, 5.0, 10.0 / 3.0, 2.5, 2.0, 5.0 / 3.0};
  std::vector<double> eta_grid = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  std::vector<std::size_t> k_grid;
  std::size_t rows = 3;
  std::size_t tau = 5;
  std::size_t batch = 10;
  StepSchedule schedule = StepSchedule::constant(1e-2);
  // When set, step sizes are per-example (sum-of-gradients convention) and
  // are multiplied by the batch size before reaching the trainer, which
  // averages gradients over the batch.
  bool eta_per_example = false;
  std::uint64_t seed = 1;

  // Data source: "synthetic" or a VW file path (training set).
  std::string data = "synthetic";
  std::string test_data;
  Task task = Task::regression();
  std::size_t max_train = 0;  // 0 = all
  std::size_t max_test = 0;
  bool use_auc = false;

  // Synthetic problem geometry.
  std::uint64_t p = 1000;
  std::uint64_t n = 900;
  std::uint64_t k = 8;
  double noise_sd = 0.0;
  // Fixed sketch width for the step-size sweep (sketch is width x rows).
  std::size_t fixed_width = 150;
  // Heap capacity for real-data runs (classify_vs_cf); defaults to k.
  std::size_t top_k = 0;

  // Stopping rule for synthetic runs.
  double grad_tol = 1e-7;
  std::size_t consecutive = 5;
  std::uint64_t step_cap = 0;  // 0 = 50 * n / batch

  bool per_trial = false;
  std::size_t threads = 0;  // 0 = hardware concurrency

  /// Throws ConfigError.
  void validate() const;
  std::uint64_t effective_step_cap() const;
  /// Step size handed to the trainer for a configured value.
  double trainer_eta(double eta) const;
  /// One-line description of every field, written as a CSV header comment.
  std::string fingerprint() const;
};

struct TrialResult {
  Algo algo = Algo::kBear;
  double cf = 0.0;
  double eta = 0.0;
  std::size_t k = 0;
  std::uint64_t trial_seed = 0;
  bool success = false;
  double l2_error = 0.0;
  double accuracy = -1.0;  // < 0 when not measured
  double auc = -1.0;
  std::int64_t wall_ms = 0;  // informational only, never written to CSV
  std::uint64_t steps = 0;
  bool converged = false;
};

/// True iff every ground-truth feature was selected.
bool success_metric(const FeatureSet& selected, const FeatureSet& truth);
/// Euclidean distance between the two vectors.
double l2_error(const SparseVec& beta_hat, const SparseVec& beta_star);
/// Mann-Whitney AUC: P(score+ > score-) + P(tie) / 2. Throws
/// std::invalid_argument unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Sketch width per class and per row for a compression factor:
/// m = round(p / cf) cells in total, split evenly over classes and rows.
std::size_t sketch_width_for(double cf, std::uint64_t p, std::size_t rows,
                             std::size_t classes);

/// One training run on a synthetic sparse-recovery problem.
struct SyntheticTrial {
  Algo algo = Algo::kBear;
  SyntheticSpec problem;
  std::size_t rows = 3;
  std::size_t width = 0;
  std::size_t top_k = 8;
  std::size_t tau = 5;
  std::size_t batch = 10;
  StepSchedule schedule;
  std::uint64_t hash_seed = 0;
  std::uint64_t batch_seed = 0;
  std::uint64_t step_cap = 0;
  double grad_tol = 1e-7;
  std::size_t consecutive = 5;
};

struct SyntheticOutcome {
  bool success = false;
  double l2_error = 0.0;
  std::uint64_t steps = 0;
  bool converged = false;
  FeatureSet selected;
  SparseVec beta_hat;  // queried weights of the selected features
};

SyntheticOutcome run_synthetic_trial(const SyntheticTrial& trial);

/// Trainer configuration used for a synthetic trial.
TrainerConfig synthetic_trainer_config(const SyntheticTrial& trial);

/// Runs `count` independent jobs on `threads` workers; job i writes only
/// slot i of its own output, so results do not depend on scheduling.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& job);

/// Experiments. Each returns the full CSV text (header comment, column line,
/// aggregate rows, then per-trial rows if requested), identical for
/// identical configurations. Trial results are also returned through
/// `trials_out` when non-null.
std::string run_phase_transition(const ExperimentConfig& cfg,
                                 std::vector<TrialResult>* trials_out = nullptr);
std::string run_stepsize_sweep(const ExperimentConfig& cfg,
                               std::vector<TrialResult>* trials_out = nullptr);
std::string run_classify_vs_cf(const ExperimentConfig& cfg,
                               std::vector<TrialResult>* trials_out = nullptr);
std::string run_topk_sweep(const ExperimentConfig& cfg,
                           std::vector<TrialResult>* trials_out = nullptr);

struct GramTrial {
  std::uint64_t seed = 0;
  double mean_eig = 0.0;  // normalized by p/m
  double min_eig = 0.0;   // normalized by p/m
  double max_eig = 0.0;   // normalized by p/m
  double deviation = 0.0; // max(|min - 1|, |max - 1|)
  std::size_t nonpositive = 0;
};

struct GramReport {
  std::uint64_t p = 0;
  std::size_t m = 0;
  std::size_t d = 0;
  std::vector<GramTrial> trials;
  double mean_of_mean_eig = 0.0;
  double eps_emp = 0.0;       // mean over trials of the per-trial deviation
  double eps_emp_max = 0.0;   // worst trial
};

/// Builds the explicit p x m sketch matrix S (entries sign / sqrt(d)) for
/// each trial seed and eigen-decomposes S^T S.
GramReport run_gram_check(std::uint64_t p, std::size_t m, std::size_t d,
                          std::size_t trials, std::uint64_t seed,
                          std::size_t threads = 0);
std::string gram_report_csv(const GramReport& report, const std::string& fingerprint);

/// Dispatches on cfg.experiment.
std::string run_experiment(const ExperimentConfig& cfg);

/// Full-data mean squared error (1/2n) |X beta - y|^2 of a synthetic problem.
double synthetic_loss(const SyntheticProblem& problem, const SparseVec& beta);

/// Least-squares fit restricted to the true support, the reference point for
/// excess loss. Equals beta* when the problem is noiseless.
SparseVec support_least_squares(const SyntheticProblem& problem);

struct DecayCurve {
  std::vector<std::uint64_t> checkpoints;
  /// excess[s][i]: loss of seed s at checkpoints[i] minus the loss of the
  /// support least-squares fit.
  std::vector<std::vector<double>> excess;
  std::vector<double> median_excess;
};

/// Runs `trial` for each of `seeds` (hash, batch and data seeds derived from
/// the value), recording the full-data excess loss at `checkpoints`.
DecayCurve run_decay(const SyntheticTrial& trial, std::span<const std::uint64_t> seeds,
                     std::span<const std::uint64_t> checkpoints,
                     std::size_t threads = 0);

}  // namespace bear::bench
