#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hierlearn/dataset.hpp"
#include "hierlearn/hierarchy.hpp"

using namespace hierlearn;

TEST_CASE("make_proximity singleton and window", "[hierarchy]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  CHECK(s.locations == 1);
  CHECK(s.width == 1);
  CHECK(s.slots[0] == std::vector<int>{0});

  // window1d with T=5, w_half=1; paper-style 1-based location 3 is index 2
  const ProximityMap w = make_proximity("window1d", 5, 1);
  CHECK(w.locations == 5);
  CHECK(w.width == 3);
  CHECK(w.slots[2] == std::vector<int>{2, 1, 3});
  // clamped boundary: first location
  CHECK(w.slots[0] == std::vector<int>{0, 0, 1});
  CHECK(w.slots[4] == std::vector<int>{4, 3, 4});

  CHECK_THROWS_AS(make_proximity("hex", 3, 1), std::invalid_argument);
}

TEST_CASE("proximity_concat ordering", "[hierarchy]") {
  const ProximityMap w = make_proximity("window1d", 3, 1);
  Eigen::MatrixXd ens(1, 3);
  ens << 1, 2, 3;
  const Eigen::VectorXd mid = proximity_concat(w, ens, 1);
  CHECK(mid[0] == 2.0);
  CHECK(mid[1] == 1.0);
  CHECK(mid[2] == 3.0);
  const Eigen::VectorXd lo = proximity_concat(w, ens, 0);
  CHECK(lo[0] == 1.0);
  CHECK(lo[1] == 1.0);
  CHECK(lo[2] == 2.0);
}

TEST_CASE("single-level single-label hierarchy is a dictator", "[hierarchy]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  const Hierarchy h = gen_junta_hierarchy(4, 1, 1, 1, s, {}, 3);
  REQUIRE(h.defs.size() == 1);
  const Junta& j = h.defs[0].junta;
  REQUIRE(j.deps.size() == 1);
  // non-constant 1-junta is the dictator or its negation
  CHECK(j.table[0] == -j.table[1]);

  Eigen::MatrixXd x(4, 1);
  x << 1, -1, 1, -1;
  const Eigen::MatrixXd y = eval_labels(h, x);
  const double expect = j.table[x(j.deps[0], 0) > 0 ? 1 : 0];
  CHECK(y(0, 0) == expect);
}

TEST_CASE("hierarchy certificates carry the junta parameters", "[hierarchy]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  const int K = 2;
  const Hierarchy h = gen_junta_hierarchy(6, 6, 2, K, s, {}, 17);
  for (const LabelDef& def : h.defs) {
    REQUIRE(def.witness.has_value());
    CHECK(def.witness->M == 2.0);
    CHECK(def.witness->B == 3.0);
    CHECK(def.witness->xi == Catch::Approx(1.0 / (K * std::pow(2.0, 0.5 * (K + 2)))));
  }
}

TEST_CASE("level structure: deeper labels read only lower levels", "[hierarchy]") {
  const ProximityMap w = make_proximity("window1d", 4, 1);
  const Hierarchy h = gen_junta_hierarchy(5, 9, 3, 2, w, {3, 3, 3}, 23);
  CHECK(h.cumulative == std::vector<int>{3, 6, 9});
  for (const LabelDef& def : h.defs) {
    if (def.level == 1) {
      for (int dep : def.junta.deps) CHECK(dep < w.width * h.d);
    } else {
      const int lower = h.cumulative[def.level - 2];
      for (int dep : def.junta.deps) CHECK(dep % h.n < lower);
    }
  }
}

TEST_CASE("eval_labels matches a slow per-label evaluator", "[hierarchy]") {
  const ProximityMap w = make_proximity("window1d", 4, 1);
  const Hierarchy h = gen_junta_hierarchy(5, 9, 3, 2, w, {}, 29);
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd x(5, 4);
    for (int g = 0; g < 4; ++g)
      for (int i = 0; i < 5; ++i) x(i, g) = rng.sign();
    const Eigen::MatrixXd y = eval_labels(h, x);

    // slow evaluator: recompute levels one label at a time
    Eigen::MatrixXd slow = Eigen::MatrixXd::Zero(h.n, 4);
    for (int level = 1; level <= h.r; ++level)
      for (int j = 0; j < h.n; ++j) {
        if (h.defs[j].level != level) continue;
        for (int g = 0; g < 4; ++g) {
          const Eigen::VectorXd in = level == 1 ? proximity_concat(w, x, g)
                                                : proximity_concat(w, slow, g);
          slow(j, g) = h.defs[j].junta.eval(in);
        }
      }
    CHECK(y == slow);
  }
}

TEST_CASE("level monotonicity: mutating higher-level gates leaves lower labels fixed",
          "[hierarchy]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  Hierarchy h = gen_junta_hierarchy(6, 9, 3, 2, s, {}, 37);
  Hierarchy mutated = h;
  for (LabelDef& def : mutated.defs)
    if (def.level == 3)
      for (auto& v : def.junta.table) v = -v;
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd x(6, 1);
    for (int i = 0; i < 6; ++i) x(i, 0) = rng.sign();
    const Eigen::MatrixXd y0 = eval_labels(h, x);
    const Eigen::MatrixXd y1 = eval_labels(mutated, x);
    for (int j = 0; j < h.cumulative[1]; ++j) CHECK(y0(j, 0) == y1(j, 0));
    for (int j = h.cumulative[1]; j < h.n; ++j) CHECK(y0(j, 0) == -y1(j, 0));
  }
}

TEST_CASE("sample_dataset shapes, determinism, and label bias", "[hierarchy]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  const Hierarchy h = gen_junta_hierarchy(8, 4, 1, 2, s, {}, 43);

  const Dataset one = sample_dataset(h, 1, 5);
  CHECK(one.X.rows() == 8);
  CHECK(one.Y.rows() == 4);
  CHECK(one.samples() == 1);

  const Dataset a = sample_dataset(h, 200, 5);
  const Dataset b = sample_dataset(h, 200, 5);
  CHECK(a.X == b.X);
  CHECK(a.Y == b.Y);

  // empirical label means approach the analytic Fourier bias
  const long m = 4000;
  const Dataset big = sample_dataset(h, m, 7);
  for (int j = 0; j < h.n; ++j) {
    double bias = 0.0;  // E f = fhat(empty set) = mean of the table
    for (int v : h.defs[j].junta.table) bias += v;
    bias /= double(h.defs[j].junta.table.size());
    const double mean = big.Y.row(j).mean();
    CHECK(std::abs(mean - bias) <= 4.0 / std::sqrt(double(m)));
  }
}

TEST_CASE("validate_hierarchy passes on its own data and localizes failures", "[hierarchy]") {
  const ProximityMap w = make_proximity("window1d", 3, 1);
  const Hierarchy h = gen_junta_hierarchy(4, 6, 2, 2, w, {}, 47);
  const Dataset ds = sample_dataset(h, 60, 49);
  const HierarchyValidation ok = validate_hierarchy(ds, h);
  CHECK(ok.passes);
  CHECK_FALSE(ok.vacuous);
  CHECK(ok.worst_margin_low >= 1.0 - 1e-12);
  CHECK(ok.worst_margin_high <= 3.0 + 1e-12);

  Hierarchy broken = h;
  broken.defs[2].witness->witness = broken.defs[2].witness->witness.scaled(-1.0);
  const HierarchyValidation bad = validate_hierarchy(ds, broken);
  CHECK_FALSE(bad.passes);
  REQUIRE(bad.failed_labels.size() == 1);
  CHECK(bad.failed_labels[0] == 2);

  Dataset empty = ds;
  empty.X.resize(empty.X.rows(), 0);
  empty.Y.resize(empty.Y.rows(), 0);
  const HierarchyValidation vac = validate_hierarchy(empty, h);
  CHECK(vac.passes);
  CHECK(vac.vacuous);
}

TEST_CASE("infeasible dependency pools are rejected", "[hierarchy]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  // level 2 draws from |L_1| = 1 coordinates; K = 2 cannot fit
  CHECK_THROWS_AS(gen_junta_hierarchy(4, 2, 2, 2, s, {1, 1}, 3), std::invalid_argument);
}
