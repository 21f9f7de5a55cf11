#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bear/count_sketch.hpp"
#include "bear/lbfgs.hpp"
#include "bear/loss.hpp"
#include "bear/svec.hpp"
#include "bear/topk_heap.hpp"

namespace bear {

enum class Algo { kBear, kMission, kSgd, kOlbfgs, kFeatureHashing };

std::string_view algo_name(Algo a);
/// Accepts "bear", "mission", "sgd", "olbfgs", "fh". Throws
/// std::invalid_argument otherwise.
Algo parse_algo(std::string_view name);
inline bool is_sketched(Algo a) { return a == Algo::kBear || a == Algo::kMission; }

enum class TaskKind { kRegression, kBinary, kMulticlass };

struct Task {
  TaskKind kind = TaskKind::kRegression;
  std::size_t num_classes = 2;  // multi-class only

  /// Number of weight vectors: one per class for multi-class, else one.
  std::size_t num_models() const {
    return kind == TaskKind::kMulticlass ? num_classes : 1;
  }
  static Task regression() { return {TaskKind::kRegression, 1}; }
  static Task binary() { return {TaskKind::kBinary, 2}; }
  static Task multiclass(std::size_t c) { return {TaskKind::kMulticlass, c}; }
};

/// eta_t = eta0 (constant) or eta0 / (t + t0) (inverse time).
struct StepSchedule {
  enum class Kind { kConstant, kInverseTime };
  Kind kind = Kind::kConstant;
  double eta0 = 0.1;
  double t0 = 1.0;

  double eta(std::uint64_t t) const {
    return kind == Kind::kConstant ? eta0
                                   : eta0 / (static_cast<double>(t) + t0);
  }
  static StepSchedule constant(double eta0) { return {Kind::kConstant, eta0, 1.0}; }
  static StepSchedule inverse_time(double eta0, double t0) {
    return {Kind::kInverseTime, eta0, t0};
  }
};

struct TrainerConfig {
  Algo algo = Algo::kBear;
  Task task = Task::regression();
  // Sketch geometry, per class (bear, mission).
  std::size_t sketch_rows = 5;
  std::size_t sketch_width = 0;
  std::size_t top_k = 0;
  // Curvature history length (bear, olbfgs).
  std::size_t tau = 5;
  // Ambient dimension for the dense baselines (sgd, olbfgs).
  std::size_t dense_dim = 0;
  // Embedding size for feature hashing.
  std::size_t hashed_dim = 0;
  StepSchedule schedule;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument when a field required by `algo` is unset.
  void validate() const;
};

struct StepReport {
  std::uint64_t t = 0;        // step index that was executed
  double eta = 0.0;
  double grad_norm = 0.0;     // |g(beta_t)| over all classes
  bool accepted_pair = false; // any class stored a curvature pair
  /// Nonzeros held by heaps, histories and the step's transient vectors
  /// (sketch cells excluded).
  std::size_t aux_entries = 0;
};

/// Raised when a step produces non-finite values. The trainer state is
/// restored to what it was before the step.
class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Maps features into `dim` signed buckets with a single hash.
class FeatureHasher {
 public:
  FeatureHasher(std::size_t dim, std::uint64_t seed);
  std::size_t dim() const { return dim_; }
  std::size_t bucket(FeatureId id) const;
  int sign(FeatureId id) const;
  SparseVec map(const SparseVec& x) const;

 private:
  std::size_t dim_;
  std::uint32_t index_seed_;
  std::uint32_t sign_seed_;
};

/// One optimizer and its full mutable state.
///
/// bear and mission keep one Count Sketch and top-k heap per class and never
/// allocate anything proportional to the feature-id space. sgd and olbfgs
/// keep dense weights of size dense_dim; fh keeps dense weights of size
/// hashed_dim over hashed features.
class Trainer {
 public:
  explicit Trainer(TrainerConfig config);

  const TrainerConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }

  StepReport step(Minibatch batch);

  /// Current weights of class `cls` at the features in `active` that are
  /// also heap members (sketched) or all of `active` (dense).
  SparseVec query_restricted(const FeatureSet& active, std::size_t cls) const;

  /// Weight of a single feature as seen at inference.
  double weight(FeatureId id, std::size_t cls) const;

  /// One score per model: x . w_c, using every active feature of x.
  std::vector<double> scores(const SparseVec& x) const;

  /// Per-class heap contents, descending |weight|. Empty for algorithms that
  /// cannot select features.
  std::vector<std::vector<Entry>> select_features() const;

  const CountSketch& sketch(std::size_t cls) const;
  const TopKHeap& heap(std::size_t cls) const;
  const CurvatureHistory& history(std::size_t cls) const;
  std::size_t total_sketch_cells() const;

  /// Writes meta.json plus per-class sketch_<c>.bin, heap_<c>.csv,
  /// history_<c>.bin or weights_<c>.bin into `dir`.
  void save_checkpoint(const std::filesystem::path& dir) const;
  static Trainer load_checkpoint(const std::filesystem::path& dir);

 private:
  struct Model {
    std::optional<CountSketch> sketch;
    std::optional<TopKHeap> heap;
    std::optional<CurvatureHistory> history;
    std::vector<double> dense;
  };

  std::vector<SparseVec> gradients(const std::vector<SparseVec>& betas,
                                   Minibatch batch) const;
  std::vector<SparseVec> restricted_all(const FeatureSet& active) const;
  void check_dense_ids(const FeatureSet& active, std::size_t dim) const;

  StepReport bear_step(Minibatch batch);
  StepReport mission_step(Minibatch batch);
  StepReport sgd_step(Minibatch batch);
  StepReport olbfgs_step(Minibatch batch);
  StepReport fh_step(Minibatch batch);

  TrainerConfig config_;
  std::vector<Model> models_;
  std::optional<FeatureHasher> hasher_;
  std::uint64_t t_ = 0;
};

/// Label predicted from per-model scores: argmax for multi-class, score > 0
/// for binary, the score itself for regression.
double predicted_label(const Task& task, std::span<const double> scores);
/// Probability of the positive class (binary) for AUC.
double positive_probability(std::span<const double> scores);

}  // namespace bear
