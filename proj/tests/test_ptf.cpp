#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hierlearn/ptf.hpp"

using namespace hierlearn;

namespace {

std::vector<Eigen::VectorXd> pm_one_points() {
  Eigen::VectorXd a(1), b(1);
  a << 1.0;
  b << -1.0;
  return {a, b};
}

}  // namespace

TEST_CASE("ptf_check detects the sub-unit corner margin", "[ptf]") {
  // f = sign(x1) on {+-1}, witness p = x1, claim (1,1,1,0.5):
  // the corner x~ = 0.5 of B_{0.5}(1) has margin 0.5 < 1.
  PtfClaim claim;
  claim.K = 1;
  claim.M = 1;
  claim.B = 1;
  claim.xi = 0.5;
  claim.witness = SparsePoly::monomial(1, {1}, 1.0);
  claim.validate();
  const PtfReport rep = ptf_check(pm_one_points(), {1, -1}, claim);
  CHECK_FALSE(rep.holds);
  CHECK(rep.exact);
  CHECK(rep.worst_margin_low == Catch::Approx(0.5));
  CHECK(rep.worst_margin_high == Catch::Approx(1.0));
}

TEST_CASE("ptf_check accepts the doubled witness", "[ptf]") {
  PtfClaim claim;
  claim.K = 1;
  claim.M = 2;
  claim.B = 2;
  claim.xi = 0.5;
  claim.witness = SparsePoly::monomial(1, {1}, 2.0);
  const PtfReport rep = ptf_check(pm_one_points(), {1, -1}, claim);
  CHECK(rep.holds);
  CHECK(rep.worst_margin_low == Catch::Approx(1.0));
  CHECK(rep.worst_margin_high == Catch::Approx(2.0));
}

TEST_CASE("ptf_check with vanishing radius and exact margins", "[ptf]") {
  PtfClaim claim;
  claim.K = 1;
  claim.M = 1;
  claim.B = 1;
  claim.xi = 1e-12;
  claim.witness = SparsePoly::monomial(1, {1}, 1.0);
  const PtfReport rep = ptf_check(pm_one_points(), {1, -1}, claim);
  CHECK(rep.holds);
}

TEST_CASE("ptf_check empty sample set is a vacuous pass", "[ptf]") {
  PtfClaim claim;
  claim.witness = SparsePoly::monomial(1, {1}, 1.0);
  const PtfReport rep = ptf_check({}, {}, claim);
  CHECK(rep.holds);
  CHECK(rep.points_tested == 0);
}

TEST_CASE("ptf_check samples non-multilinear witnesses", "[ptf]") {
  // witness 2 x1^2 for the constant function +1 on {+-1}: margins in [2,2]
  // at the corners but dip below 1 inside the ball
  PtfClaim claim;
  claim.K = 2;
  claim.M = 2;
  claim.B = 2;
  claim.xi = 0.9;
  claim.witness = SparsePoly::monomial(1, {2}, 2.0);
  const PtfReport rep = ptf_check(pm_one_points(), {1, 1}, claim, 512, 99);
  CHECK_FALSE(rep.exact);
  CHECK_FALSE(rep.holds);  // e.g. x~ = 0.3 gives margin 0.18
  CHECK(rep.worst_margin_low < 1.0);
}

TEST_CASE("refine_ptf applies the bounded-Lipschitz upgrade", "[ptf]") {
  PtfClaim plain;
  plain.K = 1;
  plain.M = 1;
  plain.B = 1;
  plain.xi = 1.0;
  plain.witness = SparsePoly::monomial(1, {1}, 1.0);
  const PtfClaim refined = refine_ptf(plain, /*b_sup=*/1.0, /*lipschitz=*/2.0);
  CHECK(refined.K == 1);
  CHECK(refined.M == 2.0);
  CHECK(refined.B == 3.0);
  CHECK(refined.xi == 0.25);
  CHECK(refined.witness.terms.at({1}) == 2.0);
  refined.validate();

  // refined claim passes where the plain margins were exactly 1
  const PtfReport rep = ptf_check(pm_one_points(), {1, -1}, refined);
  CHECK(rep.holds);
}

TEST_CASE("refine_ptf reproduces junta certificate parameters", "[ptf]") {
  for (int K = 1; K <= 4; ++K) {
    PtfClaim plain;
    plain.K = K;
    plain.M = 1;
    const double lip = K * std::pow(2.0, 0.5 * K);
    const PtfClaim refined = refine_ptf(plain, 1.0, lip);
    CHECK(refined.M == 2.0);
    CHECK(refined.B == 3.0);
    CHECK(refined.xi == Catch::Approx(1.0 / (K * std::pow(2.0, 0.5 * (K + 2)))));
  }
}

TEST_CASE("refine_ptf matches the generic-PTF parameter formulas", "[ptf]") {
  // a (K,M)-PTF on n variables upgrades with b_sup and L from the coefficient
  // norm bounds
  SparsePoly p = SparsePoly::zero(3);
  p.add_term({1, 1, 0}, 0.6);
  p.add_term({0, 0, 2}, 0.8);
  PtfClaim plain;
  plain.K = 2;
  plain.M = 1.0;
  plain.witness = p;
  const LipSupBounds lb = lip_sup_bounds(p);
  const PtfClaim refined = refine_ptf(plain, lb.sup, lb.lipschitz);
  const int K = 2, n = 3;
  CHECK(refined.M == 2.0 * plain.M);
  CHECK(refined.B == Catch::Approx(2.0 * std::pow(n + 1.0, K / 2.0) * coeff_norm(p) + 1.0));
  CHECK(refined.xi ==
        Catch::Approx(1.0 / (2.0 * std::pow(n + 1.0, (K + 1) / 2.0) * K * coeff_norm(p))));
}

TEST_CASE("truncated ball membership", "[ptf]") {
  TruncatedBall ball;
  ball.center = Eigen::VectorXd::Constant(2, 0.9);
  ball.radius = 0.3;
  Eigen::VectorXd inside(2), outside(2), clipped(2);
  inside << 0.8, 1.0;
  outside << 0.5, 0.9;
  clipped << 1.1, 0.9;  // outside [-1,1]^d
  CHECK(ball.contains(inside));
  CHECK_FALSE(ball.contains(outside));
  CHECK_FALSE(ball.contains(clipped));
  CHECK(ball.lo(0) == Catch::Approx(0.6));
  CHECK(ball.hi(0) == 1.0);
}
