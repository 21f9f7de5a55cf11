#include "bear/trainer.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bear/binary_io.hpp"

namespace bear {

namespace {

double total_norm(const std::vector<SparseVec>& vs) {
  double s = 0.0;
  for (const auto& v : vs) s += v.squared_norm();
  return std::sqrt(s);
}

bool all_finite(const std::vector<SparseVec>& vs) {
  for (const auto& v : vs) {
    if (!v.all_finite()) return false;
  }
  return true;
}

// Adds `delta` to the sketch, then offers each touched feature to the heap
// with its freshly queried weight. Every feature is hashed once.
// Adds delta to the sketch, then offers the touched features to the heap.
// Returns false, with the sketch restored and the heap untouched, when a
// counter overflowed.
bool sketch_update(CountSketch& sketch, TopKHeap& heap, const SparseVec& delta,
                   CountSketch::UndoLog& undo) {
  std::vector<FeatureId> ids;
  ids.reserve(delta.nnz());
  for (const Entry& e : delta) ids.push_back(e.id);
  const std::vector<CountSketch::Slot> slots = sketch.locate(ids);
  const std::span<const CountSketch::Slot> all(slots);
  const std::size_t d = sketch.rows();
  const auto& entries = delta.entries();
  const std::size_t mark = undo.cells.size();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    sketch.add_at(all.subspan(i * d, d), entries[i].value, &undo);
  }
  std::vector<double> fresh(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    fresh[i] = sketch.query_at(all.subspan(i * d, d));
    if (!std::isfinite(fresh[i])) {
      CountSketch::UndoLog mine;
      mine.cells.assign(undo.cells.begin() + static_cast<std::ptrdiff_t>(mark), undo.cells.end());
      sketch.rollback(mine);
      undo.cells.resize(mark);
      return false;
    }
  }
  for (std::size_t i = 0; i < ids.size(); ++i) heap.offer(ids[i], fresh[i]);
  return true;
}

std::size_t total_nnz(const std::vector<SparseVec>& vs) {
  std::size_t n = 0;
  for (const auto& v : vs) n += v.nnz();
  return n;
}

std::uint64_t sketch_seed(std::uint64_t seed, std::size_t cls) {
  return cls == 0 ? seed : mix64(seed + cls);
}

}  // namespace

std::string_view algo_name(Algo a) {
  switch (a) {
    case Algo::kBear: return "bear";
    case Algo::kMission: return "mission";
    case Algo::kSgd: return "sgd";
    case Algo::kOlbfgs: return "olbfgs";
    case Algo::kFeatureHashing: return "fh";
  }
  return "?";
}

Algo parse_algo(std::string_view name) {
  for (Algo a : {Algo::kBear, Algo::kMission, Algo::kSgd, Algo::kOlbfgs,
                 Algo::kFeatureHashing}) {
    if (algo_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

void TrainerConfig::validate() const {
  if (task.kind == TaskKind::kMulticlass && task.num_classes < 2) {
    throw std::invalid_argument("multi-class task needs at least 2 classes");
  }
  if (!(schedule.eta0 > 0) || !std::isfinite(schedule.eta0)) {
    throw std::invalid_argument("eta0 must be positive");
  }
  if (schedule.kind == StepSchedule::Kind::kInverseTime && !(schedule.t0 > 0)) {
    throw std::invalid_argument("t0 must be positive");
  }
  switch (algo) {
    case Algo::kBear:
    case Algo::kMission:
      if (sketch_rows == 0 || sketch_width == 0) {
        throw std::invalid_argument("sketch rows and width must be positive");
      }
      if (top_k == 0) throw std::invalid_argument("top_k must be positive");
      if (algo == Algo::kBear && tau == 0) {
        throw std::invalid_argument("tau must be positive");
      }
      break;
    case Algo::kSgd:
    case Algo::kOlbfgs:
      if (dense_dim == 0) throw std::invalid_argument("dense_dim must be positive");
      if (algo == Algo::kOlbfgs && tau == 0) {
        throw std::invalid_argument("tau must be positive");
      }
      break;
    case Algo::kFeatureHashing:
      if (hashed_dim == 0) throw std::invalid_argument("hashed_dim must be positive");
      break;
  }
}

FeatureHasher::FeatureHasher(std::size_t dim, std::uint64_t seed)
    : dim_(dim),
      index_seed_(derive_seed(seed, 0, HashPurpose::kIndex)),
      sign_seed_(derive_seed(seed, 0, HashPurpose::kSign)) {
  if (dim == 0) throw std::invalid_argument("FeatureHasher: dim must be > 0");
}

std::size_t FeatureHasher::bucket(FeatureId id) const {
  return hash_feature(id, index_seed_) % dim_;
}

int FeatureHasher::sign(FeatureId id) const {
  return (hash_feature(id, sign_seed_) & 1U) ? 1 : -1;
}

SparseVec FeatureHasher::map(const SparseVec& x) const {
  std::vector<Entry> out;
  out.reserve(x.nnz());
  for (const Entry& e : x) out.push_back({bucket(e.id), sign(e.id) * e.value});
  return SparseVec::from_unsorted(std::move(out));
}

Trainer::Trainer(TrainerConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t n_models = config_.task.num_models();
  models_.resize(n_models);
  for (std::size_t c = 0; c < n_models; ++c) {
    Model& m = models_[c];
    switch (config_.algo) {
      case Algo::kBear:
        m.history.emplace(config_.tau);
        [[fallthrough]];
      case Algo::kMission:
        m.sketch.emplace(config_.sketch_rows, config_.sketch_width,
                         sketch_seed(config_.seed, c));
        m.heap.emplace(config_.top_k);
        break;
      case Algo::kOlbfgs:
        m.history.emplace(config_.tau);
        [[fallthrough]];
      case Algo::kSgd:
        m.dense.assign(config_.dense_dim, 0.0);
        break;
      case Algo::kFeatureHashing:
        m.dense.assign(config_.hashed_dim, 0.0);
        break;
    }
  }
  if (config_.algo == Algo::kFeatureHashing) {
    hasher_.emplace(config_.hashed_dim, config_.seed);
  }
}

const CountSketch& Trainer::sketch(std::size_t cls) const {
  const auto& s = models_.at(cls).sketch;
  if (!s) throw std::logic_error("trainer has no sketch");
  return *s;
}

const TopKHeap& Trainer::heap(std::size_t cls) const {
  const auto& h = models_.at(cls).heap;
  if (!h) throw std::logic_error("trainer has no heap");
  return *h;
}

const CurvatureHistory& Trainer::history(std::size_t cls) const {
  const auto& h = models_.at(cls).history;
  if (!h) throw std::logic_error("trainer has no curvature history");
  return *h;
}

std::size_t Trainer::total_sketch_cells() const {
  std::size_t n = 0;
  for (const auto& m : models_) {
    if (m.sketch) n += m.sketch->size();
  }
  return n;
}

void Trainer::check_dense_ids(const FeatureSet& active, std::size_t dim) const {
  if (!active.empty() && active.ids().back() >= dim) {
    throw std::out_of_range("feature id " + std::to_string(active.ids().back()) +
                            " exceeds dense dimension " + std::to_string(dim));
  }
}

SparseVec Trainer::query_restricted(const FeatureSet& active,
                                    std::size_t cls) const {
  const Model& m = models_.at(cls);
  std::vector<Entry> out;
  if (m.sketch) {
    const FeatureSet members = m.heap->members();
    const FeatureSet& small = members.size() <= active.size() ? members : active;
    const FeatureSet& large = members.size() <= active.size() ? active : members;
    for (FeatureId id : small) {
      if (!large.contains(id)) continue;
      const double w = m.sketch->query(id);
      if (w != 0.0) out.push_back({id, w});
    }
  } else {
    for (FeatureId id : active) {
      if (id >= m.dense.size()) continue;
      const double w = m.dense[id];
      if (w != 0.0) out.push_back({id, w});
    }
  }
  return SparseVec::from_sorted(std::move(out));
}

std::vector<SparseVec> Trainer::restricted_all(const FeatureSet& active) const {
  std::vector<SparseVec> out;
  out.reserve(models_.size());
  for (std::size_t c = 0; c < models_.size(); ++c) {
    out.push_back(query_restricted(active, c));
  }
  return out;
}

std::vector<SparseVec> Trainer::gradients(const std::vector<SparseVec>& betas,
                                          Minibatch batch) const {
  switch (config_.task.kind) {
    case TaskKind::kRegression: return {grad_mse(betas[0], batch)};
    case TaskKind::kBinary: return {grad_logistic(betas[0], batch)};
    case TaskKind::kMulticlass: return grad_softmax_all(betas, batch);
  }
  return {};
}

StepReport Trainer::step(Minibatch batch) {
  if (batch.empty()) throw std::invalid_argument("Trainer::step: empty minibatch");
  switch (config_.algo) {
    case Algo::kBear: return bear_step(batch);
    case Algo::kMission: return mission_step(batch);
    case Algo::kSgd: return sgd_step(batch);
    case Algo::kOlbfgs: return olbfgs_step(batch);
    case Algo::kFeatureHashing: return fh_step(batch);
  }
  return {};
}

// Sketched quasi-Newton step. Heap offers follow the sketch add directly,
// so the second query already sees features admitted during this step.
StepReport Trainer::bear_step(Minibatch batch) {
  const std::size_t C = models_.size();
  const double eta = config_.schedule.eta(t_);
  const FeatureSet active = active_set(batch);

  const std::vector<SparseVec> beta_t = restricted_all(active);
  const std::vector<SparseVec> g_t = gradients(beta_t, batch);
  if (!all_finite(g_t)) {
    throw TrainError("non-finite gradient at step " + std::to_string(t_));
  }

  std::vector<SparseVec> z_hat(C);
  for (std::size_t c = 0; c < C; ++c) {
    z_hat[c] = restrict_to(lbfgs_direction(g_t[c], *models_[c].history), active);
  }
  if (!all_finite(z_hat)) {
    throw TrainError("non-finite descent direction at step " + std::to_string(t_));
  }

  std::vector<SparseVec> delta(C);
  for (std::size_t c = 0; c < C; ++c) delta[c] = scale(-eta, z_hat[c]);
  if (!all_finite(delta)) {
    throw TrainError("non-finite update at step " + std::to_string(t_));
  }

  std::vector<CountSketch::UndoLog> undo(C);
  std::vector<TopKHeap> saved_heaps;
  saved_heaps.reserve(C);
  auto restore = [&](std::size_t upto) {
    for (std::size_t c = 0; c < upto; ++c) {
      models_[c].sketch->rollback(undo[c]);
      *models_[c].heap = std::move(saved_heaps[c]);
    }
  };
  for (std::size_t c = 0; c < C; ++c) {
    Model& m = models_[c];
    saved_heaps.push_back(*m.heap);
    if (!sketch_update(*m.sketch, *m.heap, delta[c], undo[c])) {
      restore(c);
      throw TrainError("sketch counter overflow at step " + std::to_string(t_));
    }
  }

  const std::vector<SparseVec> beta_t1 = restricted_all(active);
  const std::vector<SparseVec> g_t1 = gradients(beta_t1, batch);
  if (!all_finite(g_t1)) {
    restore(C);
    throw TrainError("non-finite gradient after update at step " +
                     std::to_string(t_));
  }

  StepReport report;
  report.t = t_;
  report.eta = eta;
  report.grad_norm = total_norm(g_t);
  std::size_t aux = active.size() + total_nnz(beta_t) + total_nnz(g_t) +
                    total_nnz(z_hat) + total_nnz(beta_t1) + total_nnz(g_t1);
  for (std::size_t c = 0; c < C; ++c) {
    Model& m = models_[c];
    const bool ok = m.history->push(beta_t1[c] - beta_t[c], g_t1[c] - g_t[c]);
    report.accepted_pair = report.accepted_pair || ok;
    aux += m.heap->size() + m.history->nnz() + undo[c].cells.size();
  }
  report.aux_entries = aux;
  ++t_;
  return report;
}

StepReport Trainer::mission_step(Minibatch batch) {
  const std::size_t C = models_.size();
  const double eta = config_.schedule.eta(t_);
  const FeatureSet active = active_set(batch);

  const std::vector<SparseVec> beta_t = restricted_all(active);
  const std::vector<SparseVec> g_t = gradients(beta_t, batch);
  if (!all_finite(g_t)) {
    throw TrainError("non-finite gradient at step " + std::to_string(t_));
  }

  std::vector<SparseVec> delta(C);
  for (std::size_t c = 0; c < C; ++c) delta[c] = scale(-eta, g_t[c]);
  if (!all_finite(delta)) {
    throw TrainError("non-finite update at step " + std::to_string(t_));
  }

  StepReport report;
  report.t = t_;
  report.eta = eta;
  report.grad_norm = total_norm(g_t);
  std::size_t aux = active.size() + total_nnz(beta_t) + total_nnz(g_t);
  std::vector<CountSketch::UndoLog> undo(C);
  std::vector<TopKHeap> saved_heaps;
  saved_heaps.reserve(C);
  for (std::size_t c = 0; c < C; ++c) {
    Model& m = models_[c];
    saved_heaps.push_back(*m.heap);
    if (!sketch_update(*m.sketch, *m.heap, delta[c], undo[c])) {
      for (std::size_t j = 0; j < c; ++j) {
        models_[j].sketch->rollback(undo[j]);
        *models_[j].heap = std::move(saved_heaps[j]);
      }
      throw TrainError("sketch counter overflow at step " + std::to_string(t_));
    }
    aux += m.heap->size() + undo[c].cells.size();
  }
  report.aux_entries = aux;
  ++t_;
  return report;
}

StepReport Trainer::sgd_step(Minibatch batch) {
  const double eta = config_.schedule.eta(t_);
  const FeatureSet active = active_set(batch);
  check_dense_ids(active, config_.dense_dim);

  const std::vector<SparseVec> g_t = gradients(restricted_all(active), batch);
  if (!all_finite(g_t)) {
    throw TrainError("non-finite gradient at step " + std::to_string(t_));
  }
  for (std::size_t c = 0; c < models_.size(); ++c) {
    for (const Entry& e : g_t[c]) models_[c].dense[e.id] -= eta * e.value;
  }
  StepReport report;
  report.t = t_;
  report.eta = eta;
  report.grad_norm = total_norm(g_t);
  report.aux_entries = active.size() + total_nnz(g_t);
  ++t_;
  return report;
}

StepReport Trainer::olbfgs_step(Minibatch batch) {
  const std::size_t C = models_.size();
  const double eta = config_.schedule.eta(t_);
  const FeatureSet active = active_set(batch);
  check_dense_ids(active, config_.dense_dim);

  const std::vector<SparseVec> beta_t = restricted_all(active);
  const std::vector<SparseVec> g_t = gradients(beta_t, batch);
  if (!all_finite(g_t)) {
    throw TrainError("non-finite gradient at step " + std::to_string(t_));
  }

  std::vector<SparseVec> z(C);
  for (std::size_t c = 0; c < C; ++c) {
    z[c] = lbfgs_direction(g_t[c], *models_[c].history);
  }
  if (!all_finite(z)) {
    throw TrainError("non-finite descent direction at step " + std::to_string(t_));
  }

  // Apply the step, remembering old values so s is the realised difference.
  std::vector<std::vector<Entry>> old(C);
  std::vector<SparseVec> s(C);
  for (std::size_t c = 0; c < C; ++c) {
    auto& w = models_[c].dense;
    std::vector<Entry> diff;
    diff.reserve(z[c].nnz());
    for (const Entry& e : z[c]) {
      old[c].push_back({e.id, w[e.id]});
      const double before = w[e.id];
      w[e.id] = before - eta * e.value;
      const double d = w[e.id] - before;
      if (d != 0.0) diff.push_back({e.id, d});
    }
    s[c] = SparseVec::from_sorted(std::move(diff));
  }

  const std::vector<SparseVec> beta_t1 = restricted_all(active);
  const std::vector<SparseVec> g_t1 = gradients(beta_t1, batch);
  if (!all_finite(g_t1)) {
    for (std::size_t c = 0; c < C; ++c) {
      for (const Entry& e : old[c]) models_[c].dense[e.id] = e.value;
    }
    throw TrainError("non-finite gradient after update at step " +
                     std::to_string(t_));
  }

  StepReport report;
  report.t = t_;
  report.eta = eta;
  report.grad_norm = total_norm(g_t);
  std::size_t aux = active.size() + total_nnz(beta_t) + total_nnz(g_t) +
                    total_nnz(z) + total_nnz(beta_t1) + total_nnz(g_t1);
  for (std::size_t c = 0; c < C; ++c) {
    Model& m = models_[c];
    const bool ok = m.history->push(std::move(s[c]), g_t1[c] - g_t[c]);
    report.accepted_pair = report.accepted_pair || ok;
    aux += m.history->nnz();
  }
  report.aux_entries = aux;
  ++t_;
  return report;
}

StepReport Trainer::fh_step(Minibatch batch) {
  std::vector<Example> hashed;
  hashed.reserve(batch.size());
  for (const Example& ex : batch) hashed.push_back({hasher_->map(ex.x), ex.y});
  const Minibatch hb(hashed);

  const double eta = config_.schedule.eta(t_);
  const FeatureSet active = active_set(hb);
  const std::vector<SparseVec> g_t = gradients(restricted_all(active), hb);
  if (!all_finite(g_t)) {
    throw TrainError("non-finite gradient at step " + std::to_string(t_));
  }
  for (std::size_t c = 0; c < models_.size(); ++c) {
    for (const Entry& e : g_t[c]) models_[c].dense[e.id] -= eta * e.value;
  }
  StepReport report;
  report.t = t_;
  report.eta = eta;
  report.grad_norm = total_norm(g_t);
  report.aux_entries = active.size() + total_nnz(g_t);
  ++t_;
  return report;
}

double Trainer::weight(FeatureId id, std::size_t cls) const {
  const Model& m = models_.at(cls);
  if (m.sketch) return m.sketch->query(id);
  if (hasher_) return m.dense[hasher_->bucket(id)] * hasher_->sign(id);
  return id < m.dense.size() ? m.dense[id] : 0.0;
}

std::vector<double> Trainer::scores(const SparseVec& x) const {
  std::vector<double> out(models_.size(), 0.0);
  const SparseVec mapped = hasher_ ? hasher_->map(x) : SparseVec{};
  const SparseVec& input = hasher_ ? mapped : x;
  for (std::size_t c = 0; c < models_.size(); ++c) {
    const Model& m = models_[c];
    double s = 0.0;
    for (const Entry& e : input) {
      if (m.sketch) {
        s += e.value * m.sketch->query(e.id);
      } else if (e.id < m.dense.size()) {
        s += e.value * m.dense[e.id];
      }
    }
    out[c] = s;
  }
  return out;
}

std::vector<std::vector<Entry>> Trainer::select_features() const {
  std::vector<std::vector<Entry>> out(models_.size());
  for (std::size_t c = 0; c < models_.size(); ++c) {
    if (models_[c].heap) out[c] = models_[c].heap->snapshot();
  }
  return out;
}

double predicted_label(const Task& task, std::span<const double> scores) {
  switch (task.kind) {
    case TaskKind::kRegression: return scores[0];
    case TaskKind::kBinary: return scores[0] > 0.0 ? 1.0 : 0.0;
    case TaskKind::kMulticlass: {
      std::size_t best = 0;
      for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
      }
      return static_cast<double>(best);
    }
  }
  return 0.0;
}

double positive_probability(std::span<const double> scores) {
  return sigmoid(scores[0]);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr int kCheckpointVersion = 1;

nlohmann::json schedule_json(const StepSchedule& s) {
  return {{"kind", s.kind == StepSchedule::Kind::kConstant ? "constant" : "invt"},
          {"eta0", s.eta0},
          {"t0", s.t0}};
}

std::string task_name(const Task& t) {
  switch (t.kind) {
    case TaskKind::kRegression: return "regression";
    case TaskKind::kBinary: return "binary";
    case TaskKind::kMulticlass: return "multiclass";
  }
  return "?";
}

std::ofstream open_out(const std::filesystem::path& p, bool binary) {
  std::ofstream out(p, binary ? std::ios::binary : std::ios::out);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p, bool binary) {
  std::ifstream in(p, binary ? std::ios::binary : std::ios::in);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  return in;
}

std::string indexed(const char* stem, std::size_t c, const char* ext) {
  return std::string(stem) + "_" + std::to_string(c) + ext;
}

}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json meta = {
      {"version", kCheckpointVersion},
      {"algo", std::string(algo_name(config_.algo))},
      {"task", task_name(config_.task)},
      {"num_classes", config_.task.num_classes},
      {"sketch_rows", config_.sketch_rows},
      {"sketch_width", config_.sketch_width},
      {"top_k", config_.top_k},
      {"tau", config_.tau},
      {"dense_dim", config_.dense_dim},
      {"hashed_dim", config_.hashed_dim},
      {"schedule", schedule_json(config_.schedule)},
      {"seed", config_.seed},
      {"t", t_},
  };
  open_out(dir / "meta.json", false) << meta.dump(2) << '\n';

  for (std::size_t c = 0; c < models_.size(); ++c) {
    const Model& m = models_[c];
    if (m.sketch) {
      auto out = open_out(dir / indexed("sketch", c, ".bin"), true);
      m.sketch->save(out);
    }
    if (m.heap) {
      auto out = open_out(dir / indexed("heap", c, ".csv"), false);
      m.heap->write_csv(out);
    }
    if (m.history) {
      auto out = open_out(dir / indexed("history", c, ".bin"), true);
      m.history->save(out);
    }
    if (!m.dense.empty()) {
      auto out = open_out(dir / indexed("weights", c, ".bin"), true);
      io::write_u64(out, m.dense.size());
      for (double w : m.dense) io::write_f64(out, w);
    }
  }
}

Trainer Trainer::load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json meta;
  {
    auto in = open_in(dir / "meta.json", false);
    in >> meta;
  }
  if (meta.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  TrainerConfig cfg;
  cfg.algo = parse_algo(meta.at("algo").get<std::string>());
  const auto task = meta.at("task").get<std::string>();
  const auto classes = meta.at("num_classes").get<std::size_t>();
  if (task == "regression") {
    cfg.task = Task::regression();
  } else if (task == "binary") {
    cfg.task = Task::binary();
  } else if (task == "multiclass") {
    cfg.task = Task::multiclass(classes);
  } else {
    throw std::runtime_error("unknown task '" + task + "' in checkpoint");
  }
  cfg.sketch_rows = meta.at("sketch_rows").get<std::size_t>();
  cfg.sketch_width = meta.at("sketch_width").get<std::size_t>();
  cfg.top_k = meta.at("top_k").get<std::size_t>();
  cfg.tau = meta.at("tau").get<std::size_t>();
  cfg.dense_dim = meta.at("dense_dim").get<std::size_t>();
  cfg.hashed_dim = meta.at("hashed_dim").get<std::size_t>();
  const auto& sched = meta.at("schedule");
  cfg.schedule.kind = sched.at("kind").get<std::string>() == "constant"
                          ? StepSchedule::Kind::kConstant
                          : StepSchedule::Kind::kInverseTime;
  cfg.schedule.eta0 = sched.at("eta0").get<double>();
  cfg.schedule.t0 = sched.at("t0").get<double>();
  cfg.seed = meta.at("seed").get<std::uint64_t>();

  Trainer trainer(cfg);
  trainer.t_ = meta.at("t").get<std::uint64_t>();
  for (std::size_t c = 0; c < trainer.models_.size(); ++c) {
    Model& m = trainer.models_[c];
    if (m.sketch) {
      auto in = open_in(dir / indexed("sketch", c, ".bin"), true);
      CountSketch loaded = CountSketch::load(in);
      if (loaded.rows() != m.sketch->rows() || loaded.width() != m.sketch->width() ||
          loaded.seed() != m.sketch->seed()) {
        throw std::runtime_error("checkpoint sketch geometry mismatch");
      }
      *m.sketch = std::move(loaded);
    }
    if (m.heap) {
      auto in = open_in(dir / indexed("heap", c, ".csv"), false);
      *m.heap = TopKHeap::read_csv(in, cfg.top_k);
    }
    if (m.history) {
      auto in = open_in(dir / indexed("history", c, ".bin"), true);
      *m.history = CurvatureHistory::load(in, cfg.tau);
    }
    if (!m.dense.empty()) {
      auto in = open_in(dir / indexed("weights", c, ".bin"), true);
      const std::uint64_t n = io::read_u64(in);
      if (n != m.dense.size()) throw std::runtime_error("checkpoint weight size mismatch");
      for (double& w : m.dense) w = io::read_f64(in);
    }
  }
  return trainer;
}

}  // namespace bear
