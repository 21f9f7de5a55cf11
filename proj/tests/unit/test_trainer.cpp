#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "bear/count_sketch.hpp"
#include "bear/data.hpp"
#include "bear/random.hpp"
#include "bear/trainer.hpp"
#include "collision_free.hpp"
#include "dense_trainer.hpp"

using bear::Algo;
using bear::Example;
using bear::FeatureSet;
using bear::SparseVec;
using bear::Trainer;
using bear::TrainerConfig;

namespace {

std::vector<std::uint64_t> ids_1_to(std::uint64_t p) {
  std::vector<std::uint64_t> ids;
  for (std::uint64_t i = 1; i <= p; ++i) ids.push_back(i);
  return ids;
}

TrainerConfig sketched(Algo a, std::size_t rows, std::size_t width, std::size_t k,
                       double eta, std::uint64_t seed) {
  TrainerConfig c;
  c.algo = a;
  c.sketch_rows = rows;
  c.sketch_width = width;
  c.top_k = k;
  c.tau = 5;
  c.schedule = bear::StepSchedule::constant(eta);
  c.seed = seed;
  return c;
}

TrainerConfig dense(Algo a, std::size_t dim, double eta) {
  TrainerConfig c;
  c.algo = a;
  c.dense_dim = dim;
  c.hashed_dim = dim;
  c.tau = 5;
  c.schedule = bear::StepSchedule::constant(eta);
  return c;
}

oracle::DenseBatch to_dense(bear::Minibatch b, Eigen::Index dim) {
  oracle::DenseBatch d{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.size()), dim),
                       Eigen::VectorXd(static_cast<Eigen::Index>(b.size()))};
  for (std::size_t i = 0; i < b.size(); ++i) {
    for (const auto& e : b[i].x) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(e.id)) = e.value;
    d.y[static_cast<Eigen::Index>(i)] = b[i].y;
  }
  return d;
}

std::vector<Example> rows_of(const bear::SyntheticProblem& prob) {
  std::vector<Example> r;
  for (std::uint64_t i = 0; i < prob.spec().n; ++i) r.push_back(prob.row(i));
  return r;
}

bear::Minibatch batch_at(const std::vector<Example>& rows, std::size_t t, std::size_t b) {
  const std::size_t start = (t * b) % (rows.size() - b + 1);
  return bear::Minibatch(rows.data() + start, b);
}

}  // namespace

TEST_CASE("config validation") {
  TrainerConfig c;
  CHECK_THROWS_AS(Trainer{c}, std::invalid_argument);
  CHECK_THROWS_AS(Trainer{dense(Algo::kSgd, 0, 0.1)}, std::invalid_argument);
  auto bad_eta = dense(Algo::kSgd, 3, 0.1);
  bad_eta.schedule.eta0 = -1;
  CHECK_THROWS_AS(Trainer{bad_eta}, std::invalid_argument);
  CHECK(bear::parse_algo("olbfgs") == Algo::kOlbfgs);
  CHECK_THROWS_AS(bear::parse_algo("adam"), std::invalid_argument);
}

TEST_CASE("sgd hand step") {
  Trainer t(dense(Algo::kSgd, 2, 0.5));
  std::vector<Example> b{{SparseVec{{1, 1.0}}, 1.0}};
  t.step(b);
  CHECK(t.weight(1, 0) == 0.5);
}

TEST_CASE("inverse-time schedule") {
  auto c = sketched(Algo::kBear, 3, 16, 4, 1.0, 1);
  c.schedule = bear::StepSchedule::inverse_time(1.0, 10.0);
  Trainer t(c);
  std::vector<Example> b{{SparseVec{{1, 1.0}}, 1.0}};
  for (std::uint64_t s = 0; s < 5; ++s) CHECK(t.step(b).eta == 1.0 / (static_cast<double>(s) + 10.0));
}

TEST_CASE("first bear step equals a mission step") {
  bear::SyntheticProblem prob({50, 20, 5, 3});
  const auto rows = rows_of(prob);
  Trainer b(sketched(Algo::kBear, 3, 20, 5, 0.05, 9));
  Trainer m(sketched(Algo::kMission, 3, 20, 5, 0.05, 9));
  b.step(batch_at(rows, 0, 10));
  m.step(batch_at(rows, 0, 10));
  CHECK(b.sketch(0) == m.sketch(0));
  CHECK(b.heap(0).snapshot() == m.heap(0).snapshot());

  Trainer o(dense(Algo::kOlbfgs, 51, 0.05));
  Trainer s(dense(Algo::kSgd, 51, 0.05));
  o.step(batch_at(rows, 0, 10));
  s.step(batch_at(rows, 0, 10));
  for (std::uint64_t i = 0; i <= 50; ++i) CHECK(o.weight(i, 0) == s.weight(i, 0));
}

TEST_CASE("query_restricted") {
  Trainer t(sketched(Algo::kMission, 3, 64, 4, 1.0, 5));
  CHECK(t.query_restricted(FeatureSet{1, 2}, 0).empty());
  CHECK(t.query_restricted(FeatureSet{}, 0).empty());
  std::vector<Example> b{{SparseVec{{7, 1.0}}, 3.0}};
  t.step(b);  // gradient -3 at feature 7, so weight 3
  CHECK(t.query_restricted(FeatureSet{7, 9}, 0) == SparseVec{{7, 3.0}});
  CHECK(t.query_restricted(FeatureSet{9}, 0).empty());
}

TEST_CASE("zero-gradient batch leaves the sketch unchanged") {
  Trainer t(sketched(Algo::kMission, 3, 16, 4, 0.1, 2));
  std::vector<Example> b{{SparseVec{{1, 1.0}}, 1.0}};
  t.step(b);
  const auto before = t.sketch(0);
  std::vector<Example> zero{{SparseVec{{2, 1.0}}, 0.0}};
  t.step(zero);
  CHECK(t.sketch(0) == before);
}

TEST_CASE("collision-free bear tracks dense oLBFGS to convergence") {
  const std::uint64_t p = 4;
  bear::SyntheticProblem prob({p, 40, 4, 11});
  const auto rows = rows_of(prob);
  CHECK(prob.support() == FeatureSet{1, 2, 3, 4});
  const std::uint64_t seed = oracle::collision_free_seed(3, p * p, ids_1_to(p));
  Trainer bear(sketched(Algo::kBear, 3, p * p, p, 0.5, seed));
  Trainer olbfgs(dense(Algo::kOlbfgs, p + 1, 0.5));
  oracle::DenseOlbfgs ref(static_cast<Eigen::Index>(p + 1), 0.5, 5);
  bool converged = false;
  for (std::size_t t = 0; t < 400 && !converged; ++t) {
    const auto b = batch_at(rows, t, 8);
    const auto rep = bear.step(b);
    olbfgs.step(b);
    ref.step(to_dense(b, static_cast<Eigen::Index>(p + 1)));
    for (std::uint64_t i = 1; i <= p; ++i) {
      CHECK(std::abs(bear.weight(i, 0) - olbfgs.weight(i, 0)) <= 1e-8);
      CHECK(std::abs(olbfgs.weight(i, 0) - ref.w()[static_cast<Eigen::Index>(i)]) <= 1e-8);
    }
    converged = rep.grad_norm < 1e-7;
  }
  CHECK(converged);
  for (const auto& e : prob.beta_star()) CHECK(bear.weight(e.id, 0) == doctest::Approx(e.value));
}

TEST_CASE("collision-free mission tracks dense SGD") {
  const std::uint64_t p = 6;
  bear::SyntheticProblem prob({p, 30, 3, 12});
  const auto rows = rows_of(prob);
  const std::uint64_t seed = oracle::collision_free_seed(3, p * p, ids_1_to(p));
  Trainer mission(sketched(Algo::kMission, 3, p * p, p, 0.1, seed));
  Trainer sgd(dense(Algo::kSgd, p + 1, 0.1));
  oracle::DenseSgd ref(static_cast<Eigen::Index>(p + 1), 0.1);
  for (std::size_t t = 0; t < 200; ++t) {
    const auto b = batch_at(rows, t, 5);
    mission.step(b);
    sgd.step(b);
    ref.step(to_dense(b, static_cast<Eigen::Index>(p + 1)));
    for (std::uint64_t i = 1; i <= p; ++i) {
      CHECK(std::abs(mission.weight(i, 0) - sgd.weight(i, 0)) <= 1e-10);
      CHECK(std::abs(sgd.weight(i, 0) - ref.w()[static_cast<Eigen::Index>(i)]) <= 1e-10);
    }
  }
}

TEST_CASE("feature selection on a collision-free toy problem") {
  const std::uint64_t p = 8;
  bear::SyntheticProblem prob({p, 60, 2, 13});
  const auto rows = rows_of(prob);
  const std::uint64_t seed = oracle::collision_free_seed(3, p * p, ids_1_to(p));
  Trainer t(sketched(Algo::kBear, 3, p * p, 2, 0.5, seed));
  CHECK(t.select_features()[0].empty());
  for (std::size_t s = 0; s < 300; ++s) t.step(batch_at(rows, s, 10));
  const auto sel = t.select_features();
  REQUIRE(sel.size() == 1);
  CHECK(sel[0].size() <= 2);
  FeatureSet chosen;
  {
    std::vector<bear::FeatureId> ids;
    for (const auto& e : sel[0]) ids.push_back(e.id);
    chosen = FeatureSet(ids);
  }
  // Least-squares solution on the full dense problem has the true support.
  CHECK(chosen == prob.support());
}

TEST_CASE("oLBFGS decreases a convex quadratic under the inverse-time schedule") {
  bear::SyntheticProblem prob({20, 200, 5, 14});
  const auto rows = rows_of(prob);
  auto c = dense(Algo::kOlbfgs, 21, 1.0);
  c.schedule = bear::StepSchedule::inverse_time(20.0, 20.0);
  Trainer t(c);
  auto full_loss = [&] {
    std::vector<bear::Entry> w;
    for (std::uint64_t i = 1; i <= 20; ++i)
      if (t.weight(i, 0) != 0) w.push_back({i, t.weight(i, 0)});
    return bear::loss_mse(SparseVec::from_sorted(w), rows);
  };
  std::vector<double> best;
  double b = full_loss();
  for (std::size_t s = 0; s < 300; ++s) {
    t.step(batch_at(rows, s, 10));
    b = std::min(b, full_loss());
    if (s % 50 == 49) best.push_back(b);
  }
  for (std::size_t i = 1; i < best.size(); ++i) CHECK(best[i] <= best[i - 1]);
  CHECK(best.back() < 1e-3 * bear::loss_mse(SparseVec{}, rows));
}

TEST_CASE("feature hashing") {
  // Injective on the observed features: same predictions as dense SGD.
  const std::uint64_t p = 10;
  bear::SyntheticProblem prob({p, 50, 3, 15});
  const auto rows = rows_of(prob);
  std::uint64_t seed = 1;
  for (;; ++seed) {
    bear::FeatureHasher h(64, seed);
    std::vector<std::size_t> b;
    for (std::uint64_t i = 1; i <= p; ++i) b.push_back(h.bucket(i));
    std::sort(b.begin(), b.end());
    if (std::adjacent_find(b.begin(), b.end()) == b.end()) break;
  }
  auto fc = dense(Algo::kFeatureHashing, 64, 0.1);
  fc.seed = seed;
  Trainer fh(fc);
  Trainer sgd(dense(Algo::kSgd, p + 1, 0.1));
  for (std::size_t s = 0; s < 50; ++s) {
    fh.step(batch_at(rows, s, 5));
    sgd.step(batch_at(rows, s, 5));
  }
  for (const auto& ex : rows) CHECK(fh.scores(ex.x)[0] == doctest::Approx(sgd.scores(ex.x)[0]).epsilon(1e-12));
  CHECK(fh.scores(rows[0].x) == fh.scores(rows[0].x));
  CHECK(fh.select_features()[0].empty());

  // Two features in one bucket share one weight.
  bear::FeatureHasher h(1, 3);
  auto one = dense(Algo::kFeatureHashing, 1, 1.0);
  one.seed = 3;
  Trainer shared(one);
  std::vector<Example> b{{SparseVec{{5, 1.0}}, 2.0}};
  shared.step(b);
  CHECK(std::abs(shared.weight(9, 0)) == std::abs(shared.weight(5, 0)));
  CHECK(shared.weight(9, 0) * h.sign(9) == shared.weight(5, 0) * h.sign(5));
}

TEST_CASE("scores") {
  Trainer t(sketched(Algo::kMission, 3, 64, 4, 1.0, 6));
  CHECK(t.scores(SparseVec{})[0] == 0.0);
  std::vector<Example> b{{SparseVec{{4, 1.0}}, 2.0}};
  t.step(b);
  CHECK(t.scores(SparseVec{{4, 3.0}})[0] == 6.0);

  // Hand-built two-class model over two features.
  auto mc = sketched(Algo::kMission, 3, 64, 2, 1.0, 6);
  mc.task = bear::Task::multiclass(2);
  Trainer m(mc);
  std::vector<Example> b0{{SparseVec{{1, 1.0}}, 0.0}};
  m.step(b0);
  const double w[2][2] = {{m.weight(1, 0), m.weight(2, 0)}, {m.weight(1, 1), m.weight(2, 1)}};
  for (auto x : {SparseVec{{1, 1.0}}, SparseVec{{2, 1.0}}, SparseVec{{1, -2.0}, {2, 0.5}}}) {
    const auto s = m.scores(x);
    double dense_s[2];
    for (int c = 0; c < 2; ++c) dense_s[c] = x.get(1) * w[c][0] + x.get(2) * w[c][1];
    CHECK(s[0] == doctest::Approx(dense_s[0]));
    CHECK(s[1] == doctest::Approx(dense_s[1]));
    CHECK(bear::predicted_label(mc.task, s) == (dense_s[1] > dense_s[0] ? 1.0 : 0.0));
  }
}

TEST_CASE("non-finite steps are rejected and roll back") {
  Trainer t(sketched(Algo::kBear, 3, 8, 4, 1e300, 7));
  std::vector<Example> ok{{SparseVec{{1, 1.0}, {2, 1.0}}, 1e-300}};
  std::vector<Example> big{{SparseVec{{1, 1e200}, {2, 1e200}}, 1e200}};
  t.step(ok);
  const auto sketch = t.sketch(0);
  const auto heap = t.heap(0).snapshot();
  const auto steps = t.steps();
  CHECK_THROWS_AS(t.step(big), bear::TrainError);
  CHECK(t.sketch(0) == sketch);
  CHECK(t.heap(0).snapshot() == heap);
  CHECK(t.steps() == steps);
  CHECK_THROWS_AS(t.step({}), std::invalid_argument);
}

TEST_CASE("counter overflow rolls back instead of reaching the heap") {
  // Single-cell sketch, two ids with the same sign: their updates sum in one
  // counter and overflow even though each delta is finite.
  bear::CountSketch probe(1, 1, 9);
  probe.add(1, 1.0);
  std::uint64_t twin = 2;
  while (probe.query(twin) != 1.0) ++twin;
  for (Algo a : {Algo::kBear, Algo::kMission}) {
    CAPTURE(bear::algo_name(a));
    Trainer t(sketched(a, 1, 1, 2, 1.0, 9));
    std::vector<Example> batch{{SparseVec{{1, 1.0}, {twin, 1.0}}, 1e308}};
    CHECK_THROWS_AS(t.step(batch), bear::TrainError);
    CHECK(t.steps() == 0);
    CHECK(t.heap(0).size() == 0);
    CHECK(t.weight(1, 0) == 0.0);
    CHECK(t.weight(twin, 0) == 0.0);
  }
}

TEST_CASE("seeded runs are bit-identical") {
  bear::SyntheticProblem prob({100, 50, 5, 16});
  const auto rows = rows_of(prob);
  Trainer a(sketched(Algo::kBear, 3, 20, 5, 0.05, 77));
  Trainer b(sketched(Algo::kBear, 3, 20, 5, 0.05, 77));
  for (std::size_t s = 0; s < 40; ++s) {
    a.step(batch_at(rows, s, 10));
    b.step(batch_at(rows, s, 10));
  }
  CHECK(a.sketch(0) == b.sketch(0));
  CHECK(a.heap(0).snapshot() == b.heap(0).snapshot());
}

TEST_CASE("auxiliary memory does not grow with the id space") {
  // Sparse examples over ids up to 10^12; the bound depends only on the
  // sketch, the heap, tau and the active set.
  bear::Rng rng(3);
  const std::size_t rows = 3, width = 50, k = 10, tau = 5;
  auto c = sketched(Algo::kBear, rows, width, k, 0.01, 4);
  c.tau = tau;
  Trainer t(c);
  const std::size_t m = rows * width;
  for (std::size_t s = 0; s < 200; ++s) {
    std::vector<Example> b;
    for (int i = 0; i < 4; ++i) {
      std::vector<bear::Entry> e;
      for (int j = 0; j < 6; ++j) e.push_back({rng.below(1000000000000ULL), rng.normal()});
      b.push_back({SparseVec::from_unsorted(e), rng.normal()});
    }
    const std::size_t a = bear::active_set(b).size();
    const auto rep = t.step(b);
    const std::size_t used = rep.aux_entries + t.total_sketch_cells();
    CHECK(used <= 4 * (m + k + tau * a + a));
  }
}

TEST_CASE("checkpoint round-trip continues identically") {
  bear::SyntheticProblem prob({60, 40, 4, 18});
  const auto rows = rows_of(prob);
  const auto dir = std::filesystem::temp_directory_path() / "bear_ckpt_test";
  std::filesystem::remove_all(dir);
  for (Algo a : {Algo::kBear, Algo::kMission, Algo::kSgd, Algo::kOlbfgs, Algo::kFeatureHashing}) {
    TrainerConfig c = bear::is_sketched(a) ? sketched(a, 3, 20, 4, 0.05, 5) : dense(a, 61, 0.05);
    Trainer t(c);
    for (std::size_t s = 0; s < 10; ++s) t.step(batch_at(rows, s, 4));
    t.save_checkpoint(dir);
    Trainer r = Trainer::load_checkpoint(dir);
    CHECK(r.steps() == t.steps());
    for (std::size_t s = 10; s < 20; ++s) {
      t.step(batch_at(rows, s, 4));
      r.step(batch_at(rows, s, 4));
    }
    for (std::uint64_t i = 0; i <= 60; ++i) CHECK(r.weight(i, 0) == t.weight(i, 0));
    if (bear::is_sketched(a)) CHECK(r.sketch(0) == t.sketch(0));
    std::filesystem::remove_all(dir);
  }
  CHECK_THROWS(Trainer::load_checkpoint(dir));
}
