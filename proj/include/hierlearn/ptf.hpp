#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hierlearn/poly.hpp"
#include "hierlearn/rng.hpp"

// Polynomial-threshold-function claims and their verification: a (K,M,B,xi)
// claim asserts 1 <= p(x~) f(x) <= B for every x~ in the truncated ball of
// radius xi around each sample point.

namespace hierlearn {

struct PtfClaim {
  int K = 1;        // degree bound
  double M = 1.0;   // coefficient norm bound
  double B = 1.0;   // upper margin bound, >= 1
  double xi = 1.0;  // robustness radius in (0, 1]
  SparsePoly witness;

  void validate() const {
    if (witness.degree() > K) throw std::invalid_argument("PtfClaim: witness degree exceeds K");
    if (coeff_norm(witness) > M * (1.0 + 1e-12))
      throw std::invalid_argument("PtfClaim: witness coefficient norm exceeds M");
    if (!(B >= 1.0)) throw std::invalid_argument("PtfClaim: B must be >= 1");
    if (!(xi > 0.0 && xi <= 1.0)) throw std::invalid_argument("PtfClaim: xi must be in (0,1]");
  }
};

/// Truncated ball B_r(x) = {x~ in [-1,1]^d : ||x - x~||_inf <= r}.
struct TruncatedBall {
  Eigen::VectorXd center;
  double radius = 0.0;

  bool contains(const Eigen::VectorXd& p) const {
    if (p.size() != center.size()) return false;
    for (int i = 0; i < p.size(); ++i) {
      if (p[i] < -1.0 || p[i] > 1.0) return false;
      if (std::abs(p[i] - center[i]) > radius) return false;
    }
    return true;
  }

  double lo(int i) const { return std::max(-1.0, center[i] - radius); }
  double hi(int i) const { return std::min(1.0, center[i] + radius); }
};

struct PtfReport {
  bool holds = false;
  double worst_margin_low = 0.0;   // min p(x~) f(x) over tested points
  double worst_margin_high = 0.0;  // max p(x~) f(x) over tested points
  bool exact = false;              // corner enumeration (proof) vs sampling (evidence)
  long points_tested = 0;
};

/// Checks a PTF claim on a finite sample set. For multilinear witnesses the
/// extrema over the ball are attained at corners of the perturbed coordinates,
/// so the check enumerates them exactly; otherwise it samples `perturbations`
/// random points per sample and is a certificate only when it fails.
inline PtfReport ptf_check(const std::vector<Eigen::VectorXd>& points,
                           const std::vector<int>& labels, const PtfClaim& claim,
                           int perturbations = 64, std::uint64_t seed = 0) {
  if (points.size() != labels.size())
    throw std::invalid_argument("ptf_check: points/labels size mismatch");
  const SparsePoly& p = claim.witness;
  const std::vector<int> supp = p.support();
  const bool multilinear = p.is_multilinear() && supp.size() <= 20;

  PtfReport rep;
  rep.exact = multilinear;
  if (points.empty()) {
    rep.holds = true;
    return rep;
  }
  rep.worst_margin_low = std::numeric_limits<double>::infinity();
  rep.worst_margin_high = -std::numeric_limits<double>::infinity();

  Rng rng(seed);
  const double tol = 1e-12;
  for (std::size_t t = 0; t < points.size(); ++t) {
    if (points[t].size() != p.dim) throw std::invalid_argument("ptf_check: dimension mismatch");
    if (labels[t] != 1 && labels[t] != -1)
      throw std::invalid_argument("ptf_check: labels must be +-1");
    const TruncatedBall ball{points[t], claim.xi};
    auto record = [&](const Eigen::VectorXd& xt) {
      const double margin = poly_eval(p, xt) * labels[t];
      rep.worst_margin_low = std::min(rep.worst_margin_low, margin);
      rep.worst_margin_high = std::max(rep.worst_margin_high, margin);
      ++rep.points_tested;
    };
    record(points[t]);
    if (multilinear) {
      Eigen::VectorXd xt = points[t];
      const std::size_t corners = std::size_t(1) << supp.size();
      for (std::size_t mask = 0; mask < corners; ++mask) {
        for (std::size_t j = 0; j < supp.size(); ++j)
          xt[supp[j]] = (mask & (std::size_t(1) << j)) ? ball.hi(supp[j]) : ball.lo(supp[j]);
        record(xt);
      }
    } else {
      Eigen::VectorXd xt = points[t];
      for (int s = 0; s < perturbations; ++s) {
        for (int j : supp) xt[j] = ball.lo(j) + (ball.hi(j) - ball.lo(j)) * rng.uniform();
        record(xt);
      }
    }
  }
  rep.holds = rep.worst_margin_low >= 1.0 - tol && rep.worst_margin_high <= claim.B + tol;
  return rep;
}

/// Upgrades a plain (K,M)-PTF (margins >= 1 at the sample points, witness
/// bounded by b_sup on the sample domain and L-Lipschitz w.r.t. ||.||_inf)
/// into the robust claim (K, 2M, 2*b_sup + 1, 1/(2L)) witnessed by 2p.
inline PtfClaim refine_ptf(const PtfClaim& claim, double b_sup, double lipschitz) {
  if (!(lipschitz > 0.0)) throw std::invalid_argument("refine_ptf: Lipschitz bound must be > 0");
  PtfClaim out;
  out.K = claim.K;
  out.M = 2.0 * claim.M;
  out.B = 2.0 * b_sup + 1.0;
  out.xi = std::min(1.0, 1.0 / (2.0 * lipschitz));
  out.witness = claim.witness.scaled(2.0);
  return out;
}

}  // namespace hierlearn
