#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

// The two-ramp margin loss  l = l_{1/(2B)} + (1/(4m|G|)) l_{1-xi/2}  with
// l_eta(z) = 1 - z/eta on [0,eta], 0 on [eta,1] and extended value +inf
// outside [0,1]. For optimization the infinite region is replaced by a steep
// finite barrier; reported values keep the extended semantics via the
// `feasible` flag.

namespace hierlearn {

struct LossParams {
  double B = 1.0;
  double xi = 1.0;
  long m = 1;
  int G_size = 1;
  double barrier = 0.0;  // 0 = derive the default floor

  double eta1() const { return 1.0 / (2.0 * B); }
  double eta2() const { return 1.0 - xi / 2.0; }
  double mix_weight() const { return 1.0 / (4.0 * double(m) * G_size); }
  double gamma() const { return std::min(1.0 / B, xi) / 32.0; }
  double barrier_floor() const { return 1e4 * std::max(2.0 * B, 1.0 / xi); }

  double barrier_slope() const { return barrier > 0.0 ? barrier : barrier_floor(); }

  void validate() const {
    if (!(B >= 1.0)) throw std::invalid_argument("LossParams: B must be >= 1");
    if (!(xi > 0.0 && xi <= 1.0)) throw std::invalid_argument("LossParams: xi must be in (0,1]");
    if (m < 1 || G_size < 1) throw std::invalid_argument("LossParams: m and |G| must be >= 1");
    // eta1 < eta2 except at the degenerate corner B=1, xi=1 where they meet.
    if (eta1() > eta2() + 1e-15)
      throw std::invalid_argument("LossParams: requires 1/(2B) <= 1 - xi/2");
    if (barrier > 0.0 && barrier < barrier_floor())
      throw std::invalid_argument("LossParams: barrier slope below the required floor");
  }
};

struct LossValue {
  double value = 0.0;   // barrier surrogate; equals the true loss when feasible
  bool feasible = true;  // false marks the extended value +inf
};

/// l_eta with barrier continuation: 1 + barrier*(-z) below 0 and
/// barrier*(z-1) above 1.
inline LossValue base_loss(double z, double eta, double barrier) {
  if (z < 0.0) return {1.0 + barrier * (-z), false};
  if (z > 1.0) return {barrier * (z - 1.0), false};
  if (z >= eta) return {0.0, true};
  return {1.0 - z / eta, true};
}

inline LossValue margin_loss(double z, const LossParams& lp) {
  const double bar = lp.barrier_slope();
  const LossValue a = base_loss(z, lp.eta1(), bar);
  const LossValue b = base_loss(z, lp.eta2(), bar);
  return {a.value + lp.mix_weight() * b.value, a.feasible};
}

/// max_{0<=t<=eps} l(z - t) = max(l(z), l(z - eps)). For z <= 1 this equals
/// l(z - eps); for z < eps the extended value is infinite.
inline LossValue robust_loss(double z, double eps, const LossParams& lp) {
  if (eps < 0.0) throw std::invalid_argument("robust_loss: eps must be >= 0");
  const LossValue at = margin_loss(z, lp);
  const LossValue shifted = margin_loss(z - eps, lp);
  LossValue out;
  out.value = std::max(at.value, shifted.value);
  out.feasible = at.feasible && shifted.feasible;
  return out;
}

/// Piecewise-linear description of the combined loss (with barrier), used by
/// the convex per-layer solver. Breakpoints 0 <= eta1 <= eta2 <= 1 split the
/// line into five linear pieces with nondecreasing slopes.
struct PiecewiseLoss {
  // z-breakpoints and values there
  std::array<double, 4> zb{};
  std::array<double, 4> vb{};
  // slopes of the five pieces (-inf,0],[0,eta1],[eta1,eta2],[eta2,1],[1,inf)
  std::array<double, 5> slope{};

  static PiecewiseLoss from(const LossParams& lp) {
    lp.validate();
    PiecewiseLoss pw;
    const double k = lp.mix_weight(), e1 = lp.eta1(), e2 = lp.eta2();
    const double bar = lp.barrier_slope() * (1.0 + k);
    pw.zb = {0.0, e1, e2, 1.0};
    pw.vb = {1.0 + k, k * (1.0 - e1 / e2), 0.0, 0.0};
    pw.slope = {-bar, -(1.0 / e1 + k / e2), -k / e2, 0.0, bar};
    return pw;
  }

  double value(double z) const {
    if (z < zb[0]) return vb[0] + slope[0] * (z - zb[0]);
    if (z >= zb[3]) return vb[3] + slope[4] * (z - zb[3]);
    for (int p = 0; p < 3; ++p)
      if (z < zb[p + 1]) return vb[p] + slope[p + 1] * (z - zb[p]);
    return vb[3];
  }

  /// One-sided (right) derivative; a valid subgradient everywhere.
  double subgradient(double z) const {
    if (z < zb[0]) return slope[0];
    for (int p = 0; p < 3; ++p)
      if (z < zb[p + 1]) return slope[p + 1];
    if (z < zb[3]) return slope[3];
    return slope[4];
  }

  /// Fenchel conjugate, defined on [slope[0], slope[4]].
  double conjugate(double u) const {
    // sup_z (uz - l(z)) is attained at the breakpoint whose slope bracket
    // contains u.
    for (int p = 0; p < 4; ++p)
      if (u <= slope[p + 1]) return u * zb[p] - vb[p];
    return u * zb[3] - vb[3];
  }
};

}  // namespace hierlearn
