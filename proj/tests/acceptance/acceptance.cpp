// Acceptance report: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance [--only N[,N...]] [--strict] [--report FILE]
//
// --report also writes the lines to FILE.
// Exit status is 0 once every selected criterion has been evaluated, or 1
// with --strict when any of them failed. Internal errors exit with 2.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bear/bench.hpp"
#include "bear/count_sketch.hpp"
#include "bear/data.hpp"
#include "bear/lbfgs.hpp"
#include "bear/loss.hpp"
#include "bear/random.hpp"
#include "bear/trainer.hpp"
#include "collision_free.hpp"
#include "dense_bfgs.hpp"
#include "finite_diff.hpp"

namespace bb = bear::bench;
using bear::Algo;
using bear::Example;
using bear::SparseVec;

namespace {

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::kPass : Status::kFail, std::move(detail)};
}

// Frozen calibration constants (see the decisions ledger for the pilot runs).
constexpr double kSketchEps = 0.10;    // AC3 error radius, in units of |z|_2
constexpr double kSketchDelta = 0.08;  // AC3 failure budget
constexpr double kGramEpsPilot = 1.127383;     // AC8 mean per-trial deviation
constexpr double kGramEpsMaxPilot = 1.312382;  // AC8 worst-trial deviation

double success_of(const std::vector<bb::TrialResult>& rs, Algo a, double key,
                  bool by_eta) {
  double s = 0;
  double n = 0;
  for (const auto& r : rs) {
    if (r.algo == a && (by_eta ? r.eta : r.cf) == key) {
      s += r.success;
      n += 1;
    }
  }
  return n ? s / n : -1;
}

// ---------------------------------------------------------------------------

// Step sizes picked per algorithm by a pilot search on seed 1 (CF=3, 20
// trials, mean-gradient units). MISSION diverges above about 2e-2.
constexpr double kBearEta = 0.1;
constexpr double kMissionEta = 1e-3;

Outcome ac1_phase_transition() {
  bb::ExperimentConfig cfg;
  cfg.experiment = bb::Experiment::kPhaseTransition;
  cfg.trials = 200;
  cfg.cf_grid = {3.0, 5.0 / 3.0};
  cfg.rows = 3;
  cfg.batch = 10;
  cfg.seed = 7001;
  auto run = [&](Algo a, double eta) {
    cfg.algos = {a};
    cfg.schedule = bear::StepSchedule::constant(eta);
    std::vector<bb::TrialResult> rs;
    bb::run_phase_transition(cfg, &rs);
    return rs;
  };
  const auto bear_rs = run(Algo::kBear, kBearEta);
  const auto mission_rs = run(Algo::kMission, kMissionEta);
  const auto shared_rs = run(Algo::kMission, kBearEta);
  const double b3 = success_of(bear_rs, Algo::kBear, 3.0, false);
  const double b167 = success_of(bear_rs, Algo::kBear, 5.0 / 3.0, false);
  const double m3 = success_of(mission_rs, Algo::kMission, 3.0, false);
  const double m167 = success_of(mission_rs, Algo::kMission, 5.0 / 3.0, false);
  const double shared3 = success_of(shared_rs, Algo::kMission, 3.0, false);
  return verdict(b3 >= 0.35 && m3 <= 0.10 && b167 >= 0.85,
                 "CF=3: bear " + fmt("%.3f", b3) + " (>=0.35), mission " + fmt("%.3f", m3) +
                     " (<=0.10); CF=1.67: bear " + fmt("%.3f", b167) +
                     " (>=0.85), mission " + fmt("%.3f", m167) + "; eta bear " +
                     fmt("%g", kBearEta) + ", mission " + fmt("%g", kMissionEta) +
                     " (mission at eta " + fmt("%g", kBearEta) + " diverges: CF=3 success " +
                     fmt("%.3f", shared3) + "); b=10, 200 trials");
}

Outcome ac2_stepsize() {
  bb::ExperimentConfig cfg;
  cfg.experiment = bb::Experiment::kStepsizeSweep;
  cfg.algos = {Algo::kBear, Algo::kMission};
  cfg.trials = 100;
  cfg.rows = 3;
  cfg.fixed_width = 150;
  cfg.batch = 10;
  cfg.eta_grid = {1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  cfg.eta_per_example = true;
  cfg.seed = 7002;
  std::vector<bb::TrialResult> rs;
  bb::run_stepsize_sweep(cfg, &rs);

  std::string curve;
  std::size_t bear_run = 0, bear_best_run = 0, mission_decades = 0;
  double mission_peak = -1, mission_peak_eta = 0;
  for (double eta : cfg.eta_grid) {
    const double b = success_of(rs, Algo::kBear, eta, true);
    const double m = success_of(rs, Algo::kMission, eta, true);
    bear_run = b >= 0.5 ? bear_run + 1 : 0;
    bear_best_run = std::max(bear_best_run, bear_run);
    mission_decades += m >= 0.5;
    if (m > mission_peak) {
      mission_peak = m;
      mission_peak_eta = eta;
    }
    curve += " " + fmt("%.0e", eta) + ":" + fmt("%.2f", b) + "/" + fmt("%.2f", m);
  }
  const bool peak_ok = std::abs(std::log10(mission_peak_eta) + 4.0) <= 1.0 + 1e-9;
  const bool ok = bear_best_run >= 3 && mission_decades <= 2 && peak_ok;
  return verdict(ok, "bear contiguous decades >=0.5: " + std::to_string(bear_best_run) +
                         " (>=3); mission decades >=0.5: " +
                         std::to_string(mission_decades) + " (<=2), peak at " +
                         fmt("%.0e", mission_peak_eta) +
                         " (within 1 decade of 1e-4); per-example eta, b=10, "
                         "eta:bear/mission =" +
                         curve);
}

Outcome ac3_sketch_guarantee() {
  const std::uint64_t p = 64;
  const std::size_t c = 16, d = 5;
  std::vector<double> z(p);
  bear::Rng rng(7);
  for (auto& v : z) v = 0.3 * rng.normal();
  const std::uint64_t heavy[] = {3, 17, 40, 58};
  const double hv[] = {10, -9, 8, -7};
  for (int i = 0; i < 4; ++i) z[heavy[i]] = hv[i];
  double norm = 0;
  for (double v : z) norm += v * v;
  norm = std::sqrt(norm);

  std::size_t failures = 0;
  const std::size_t trials = 500;
  for (std::size_t t = 0; t < trials; ++t) {
    bear::CountSketch s(d, c, bear::mix64(50000 + t));
    for (std::uint64_t i = 0; i < p; ++i) s.add(i, z[i]);
    bool bad = false;
    for (auto id : heavy) bad = bad || std::abs(s.query(id) - z[id]) > kSketchEps * norm;
    failures += bad;
  }
  const double frac = static_cast<double>(failures) / trials;
  return verdict(frac <= kSketchDelta, "failure fraction " + fmt("%.3f", frac) +
                                           " <= delta " + fmt("%.2f", kSketchDelta) +
                                           " at eps " + fmt("%.2f", kSketchEps) +
                                           " (p=64, c=16, d=5, k=4, 500 trials)");
}

SparseVec sparse_of(const Eigen::VectorXd& v) {
  std::vector<bear::Entry> e;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] != 0.0) e.push_back({static_cast<bear::FeatureId>(i), v[i]});
  return SparseVec::from_sorted(std::move(e));
}

Outcome ac4_lbfgs_oracle() {
  bear::Rng rng(4004);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index dim = 1 + static_cast<Eigen::Index>(rng.below(20));
    const std::size_t tau = 1 + rng.below(5);
    Eigen::MatrixXd b(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
      for (Eigen::Index j = 0; j < dim; ++j) b(i, j) = rng.normal();
    const Eigen::MatrixXd a = b * b.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
    bear::CurvatureHistory h(tau);
    std::vector<oracle::DensePair> pairs;
    const std::size_t pushes = rng.below(tau + 4);
    for (std::size_t k = 0; k < pushes; ++k) {
      Eigen::VectorXd s(dim);
      for (Eigen::Index i = 0; i < dim; ++i) s[i] = rng.uniform() < 0.3 ? 0.0 : rng.normal();
      if (s.squaredNorm() == 0) s[0] = 1;
      const Eigen::VectorXd y = a * s;
      if (h.push(sparse_of(s), sparse_of(y))) {
        pairs.push_back({s, y});
        if (pairs.size() > tau) pairs.erase(pairs.begin());
      }
    }
    Eigen::VectorXd g(dim);
    for (Eigen::Index i = 0; i < dim; ++i) g[i] = rng.normal();
    const Eigen::VectorXd expect = oracle::bfgs_direction(g, pairs);
    Eigen::VectorXd got = Eigen::VectorXd::Zero(dim);
    for (const auto& e : bear::lbfgs_direction(sparse_of(g), h))
      got[static_cast<Eigen::Index>(e.id)] = e.value;
    worst = std::max(worst, (got - expect).norm() / expect.norm());
  }
  return verdict(worst <= 1e-10,
                 "max relative error " + fmt("%.2e", worst) + " over 1000 instances (<=1e-10)");
}

Outcome ac5_collision_free() {
  double worst_bear = 0, worst_mission = 0;
  for (std::uint64_t inst = 0; inst < 5; ++inst) {
    const std::uint64_t p = 32;
    const bear::SyntheticProblem prob({p, 100, 5, 500 + inst});
    std::vector<Example> rows;
    for (std::uint64_t i = 0; i < prob.spec().n; ++i) rows.push_back(prob.row(i));
    std::vector<std::uint64_t> ids;
    for (std::uint64_t i = 1; i <= p; ++i) ids.push_back(i);
    const std::uint64_t seed = oracle::collision_free_seed(3, p * p, ids, 1 + 1000 * inst);

    auto sketched = [&](Algo a, double eta) {
      bear::TrainerConfig c;
      c.algo = a;
      c.sketch_rows = 3;
      c.sketch_width = p * p;
      c.top_k = p;
      c.tau = 5;
      c.schedule = bear::StepSchedule::constant(eta);
      c.seed = seed;
      return bear::Trainer(c);
    };
    auto dense = [&](Algo a, double eta) {
      bear::TrainerConfig c;
      c.algo = a;
      c.dense_dim = p + 1;
      c.tau = 5;
      c.schedule = bear::StepSchedule::constant(eta);
      return bear::Trainer(c);
    };
    bear::Trainer bear_t = sketched(Algo::kBear, 0.3), olbfgs = dense(Algo::kOlbfgs, 0.3);
    bear::Trainer mission = sketched(Algo::kMission, 0.05), sgd = dense(Algo::kSgd, 0.05);
    for (std::size_t t = 0; t < 100; ++t) {
      const bear::Minibatch b(rows.data() + (t * 10) % 91, 10);
      bear_t.step(b);
      olbfgs.step(b);
      mission.step(b);
      sgd.step(b);
      for (std::uint64_t i = 1; i <= p; ++i) {
        worst_bear = std::max(worst_bear, std::abs(bear_t.weight(i, 0) - olbfgs.weight(i, 0)));
        worst_mission =
            std::max(worst_mission, std::abs(mission.weight(i, 0) - sgd.weight(i, 0)));
      }
    }
  }
  return verdict(worst_bear <= 1e-8 && worst_mission <= 1e-8,
                 "max |bear - olbfgs| " + fmt("%.2e", worst_bear) + ", max |mission - sgd| " +
                     fmt("%.2e", worst_mission) + " over 5 problems x 100 steps (<=1e-8)");
}

Outcome ac6_gradients() {
  bear::Rng rng(6006);
  double worst = 0;
  auto sparse_from = [](const std::vector<double>& v) {
    std::vector<bear::Entry> e;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) e.push_back({i, v[i]});
    return SparseVec::from_sorted(std::move(e));
  };
  auto rel = [&](const SparseVec& g, const std::vector<double>& fd) {
    double scale = 1.0, err = 0.0;
    for (double v : fd) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < fd.size(); ++i) err = std::max(err, std::abs(g.get(i) - fd[i]));
    worst = std::max(worst, err / scale);
  };
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t dim = 1 + rng.below(10);
    const std::size_t b = 1 + rng.below(8);
    const std::size_t classes = 2 + rng.below(3);
    std::vector<Example> reg, bin, multi;
    for (std::size_t i = 0; i < b; ++i) {
      std::vector<double> x(dim);
      for (double& v : x) v = rng.uniform() < 0.2 ? 0.0 : rng.normal();
      const SparseVec sx = sparse_from(x);
      reg.push_back({sx, rng.normal()});
      bin.push_back({sx, rng.uniform() < 0.5 ? 0.0 : 1.0});
      multi.push_back({sx, static_cast<double>(rng.below(classes))});
    }
    std::vector<double> w(dim);
    for (double& v : w) v = rng.normal();
    rel(bear::grad_mse(sparse_from(w), reg),
        oracle::central_gradient([&](const auto& x) { return bear::loss_mse(sparse_from(x), reg); }, w));
    rel(bear::grad_logistic(sparse_from(w), bin),
        oracle::central_gradient([&](const auto& x) { return bear::loss_logistic(sparse_from(x), bin); },
                                 w));
    std::vector<std::vector<double>> ws(classes, std::vector<double>(dim));
    for (auto& v : ws)
      for (double& x : v) x = rng.normal();
    std::vector<SparseVec> betas;
    for (const auto& v : ws) betas.push_back(sparse_from(v));
    const auto grads = bear::grad_softmax_all(betas, multi);
    for (std::size_t c = 0; c < classes; ++c) {
      auto f = [&](const std::vector<double>& x) {
        std::vector<SparseVec> bs = betas;
        bs[c] = sparse_from(x);
        return bear::loss_softmax(bs, multi);
      };
      rel(grads[c], oracle::central_gradient(f, ws[c]));
    }
  }
  return verdict(worst <= 1e-5, "max relative deviation " + fmt("%.2e", worst) +
                                    " across mse, logistic, softmax on 100 instances (<=1e-5)");
}

Outcome ac7_decay() {
  bb::SyntheticTrial t;
  t.algo = Algo::kBear;
  t.problem = {1000, 900, 8, 0, 0.8, 1.2, 1.0};
  t.rows = 3;
  t.width = bb::sketch_width_for(1.0, 1000, 3, 1);
  t.top_k = 8;
  t.tau = 5;
  t.batch = 100;
  t.schedule = bear::StepSchedule::inverse_time(10.0, 100.0);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(7700 + s);
  const std::vector<std::uint64_t> cps{100, 200, 500, 1000, 2000, 5000, 10000};
  const auto curve = bb::run_decay(t, seeds, cps);
  double lo = INFINITY, hi = 0;
  std::string detail;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const double v = curve.median_excess[i] * static_cast<double>(cps[i]);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    detail += " t=" + std::to_string(cps[i]) + ":" + fmt("%.3g", v);
  }
  const double ratio = lo > 0 ? hi / lo : INFINITY;
  return verdict(lo > 0 && ratio <= 10.0,
                 "max/min of median excess x t = " + fmt("%.2f", ratio) +
                     " (<=10); noise sd 1, CF=1, b=100, eta=10/(t+100), 20 seeds;" + detail);
}

Outcome ac8_gram() {
  const auto r = bb::run_gram_check(2000, 400, 5, 50, 909);
  std::size_t nonpos = 0;
  for (const auto& t : r.trials) nonpos += t.nonpositive;
  const double mean_dev = std::abs(r.mean_of_mean_eig - 1.0);
  const double drift = std::abs(r.eps_emp / kGramEpsPilot - 1.0);
  const double drift_max = std::abs(r.eps_emp_max / kGramEpsMaxPilot - 1.0);
  return verdict(mean_dev <= 0.05 && drift <= 0.2 && drift_max <= 0.2 && nonpos == 0,
                 "mean eigenvalue / (p/m) = " + fmt("%.4f", r.mean_of_mean_eig) +
                     "; eps_emp " + fmt("%.4f", r.eps_emp) + " vs pilot " +
                     fmt("%.4f", kGramEpsPilot) + " (" + fmt("%+.1f%%", 100 * (r.eps_emp / kGramEpsPilot - 1)) +
                     "), worst trial " + fmt("%.4f", r.eps_emp_max) + " vs " +
                     fmt("%.4f", kGramEpsMaxPilot) + " (" +
                     fmt("%+.1f%%", 100 * (r.eps_emp_max / kGramEpsMaxPilot - 1)) +
                     "); nonpositive eigenvalues " + std::to_string(nonpos));
}

Outcome ac9_rcv1() {
  const char* train = std::getenv("BEAR_RCV1_TRAIN");
  const char* test = std::getenv("BEAR_RCV1_TEST");
  if (!train || !test) {
    return {Status::kSkip,
            "RCV1 not available; set BEAR_RCV1_TRAIN and BEAR_RCV1_TEST to VW files "
            "(binary labels) to run"};
  }
  bb::ExperimentConfig cfg;
  cfg.experiment = bb::Experiment::kClassifyVsCf;
  cfg.data = train;
  cfg.test_data = test;
  cfg.task = bear::Task::binary();
  cfg.algos = {Algo::kBear, Algo::kMission};
  cfg.cf_grid = {10, 30, 95};
  cfg.trials = 1;
  cfg.rows = 5;
  cfg.max_test = 50000;
  cfg.top_k = 1000;
  const char* eta = std::getenv("BEAR_RCV1_ETA");
  cfg.schedule = bear::StepSchedule::constant(eta ? std::atof(eta) : 0.5);
  std::vector<bb::TrialResult> rs;
  bb::run_classify_vs_cf(cfg, &rs);
  std::map<std::pair<Algo, double>, double> acc;
  for (const auto& r : rs) acc[{r.algo, r.cf}] = r.accuracy;
  bool ok = true;
  std::string detail;
  for (double cf : cfg.cf_grid) {
    const double b = acc[{Algo::kBear, cf}], m = acc[{Algo::kMission, cf}];
    ok = ok && b >= m;
    detail += " CF=" + fmt("%g", cf) + ": bear " + fmt("%.4f", b) + " mission " + fmt("%.4f", m);
  }
  const double gap10 = acc[{Algo::kBear, 10.0}] - acc[{Algo::kMission, 10.0}];
  const double gap95 = acc[{Algo::kBear, 95.0}] - acc[{Algo::kMission, 95.0}];
  ok = ok && gap95 >= gap10;
  return verdict(ok, "bear >= mission at every CF and gap(95) >= gap(10):" + detail);
}

Outcome ac10_determinism() {
  bb::ExperimentConfig cfg;
  cfg.p = 200;
  cfg.n = 150;
  cfg.k = 5;
  cfg.trials = 6;
  cfg.cf_grid = {4.0, 2.0};
  cfg.schedule = bear::StepSchedule::constant(0.1);
  cfg.per_trial = true;
  cfg.threads = 1;
  const std::string a = bb::run_experiment(cfg);
  cfg.threads = 4;
  const std::string b = bb::run_experiment(cfg);
  cfg.experiment = bb::Experiment::kStepsizeSweep;
  cfg.eta_grid = {1e-2, 1e-1};
  cfg.fixed_width = 30;
  const std::string c = bb::run_experiment(cfg);
  cfg.threads = 2;
  const std::string d = bb::run_experiment(cfg);
  cfg.experiment = bb::Experiment::kGramCheck;
  cfg.p = 400;
  cfg.trials = 3;
  const std::string e = bb::run_experiment(cfg);
  const std::string f = bb::run_experiment(cfg);
  const bool ok = a == b && c == d && e == f && !a.empty() && !c.empty() && !e.empty();
  return verdict(ok, "phase_transition, stepsize_sweep and gram_check reruns byte-identical "
                     "across thread counts (" +
                         std::to_string(a.size() + c.size() + e.size()) + " bytes compared)");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  bool strict = false;
  std::FILE* report = nullptr;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--strict") {
      strict = true;
    } else if (arg == "--report" && i + 1 < argc) {
      report = std::fopen(argv[++i], "w");
      if (!report) {
        std::fprintf(stderr, "cannot open %s\n", argv[i]);
        return 2;
      }
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string tok; std::getline(ss, tok, ',');) only.insert(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance [--only N[,N...]] [--strict] [--report FILE]\n");
      return 2;
    }
  }
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"synthetic phase transition", ac1_phase_transition},
      {"step-size robustness", ac2_stepsize},
      {"count sketch top-k guarantee", ac3_sketch_guarantee},
      {"two-loop vs dense BFGS oracle", ac4_lbfgs_oracle},
      {"collision-free equivalence", ac5_collision_free},
      {"gradient finite differences", ac6_gradients},
      {"O(1/t) excess-loss decay", ac7_decay},
      {"Gram eigenvalue concentration", ac8_gram},
      {"RCV1 desk-scale classification", ac9_rcv1},
      {"byte-identical reruns", ac10_determinism},
  };
  auto emit = [&](const std::string& line) {
    std::fputs(line.c_str(), stdout);
    std::fflush(stdout);
    if (report) {
      std::fputs(line.c_str(), report);
      std::fflush(report);
    }
  };
  char buf[256];
  int passed = 0, failed = 0, skipped = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      std::snprintf(buf, sizeof buf, "AC%d ERROR %s: ", id, criteria[i].first);
      emit(buf + std::string(e.what()) + "\n");
      return 2;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    std::snprintf(buf, sizeof buf, "AC%d %s %s: ", id, tag, criteria[i].first);
    emit(buf + o.detail + fmt(" [%.0fs]\n", secs));
    (o.status == Status::kPass ? passed : o.status == Status::kFail ? failed : skipped)++;
  }
  std::snprintf(buf, sizeof buf, "acceptance summary: %d passed, %d failed, %d skipped\n",
                passed, failed, skipped);
  emit(buf);
  if (report) std::fclose(report);
  return strict && failed ? 1 : 0;
}
