#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierlearn/rng.hpp"

// Hermite analytics for bounded activations: the orthonormal (probabilists')
// Hermite family, Gauss-Hermite quadrature for coefficient extraction, the
// analytic kernel series of a random neuron, its Monte Carlo counterpart,
// and the bias-threshold / failure-probability bound formulas.

namespace hierlearn {

inline constexpr int kHermiteMaxDegree = 64;

/// h_s(x) for the orthonormal probabilists' family:
/// h_0 = 1, h_1 = x, h_{n+1}(x) = (x h_n(x) - sqrt(n) h_{n-1}(x)) / sqrt(n+1).
inline double hermite_eval(int s, double x) {
  if (s < 0 || s > kHermiteMaxDegree)
    throw std::invalid_argument("hermite_eval: degree out of range [0, 64]");
  if (s == 0) return 1.0;
  if (s == 1) return x;
  double hm = 1.0, h = x;
  for (int n = 1; n < s; ++n) {
    const double hn = (x * h - std::sqrt(double(n)) * hm) / std::sqrt(double(n + 1));
    hm = h;
    h = hn;
  }
  return h;
}

struct GaussHermiteRule {
  Eigen::VectorXd nodes;    // ascending
  Eigen::VectorXd weights;  // sums to 1 (weight function N(0,1))
};

namespace detail {

/// log(sum_{s<n} h_s(x)^2) and the ratio h_n / h_n', evaluated with running
/// rescaling so that high orders and far-out nodes neither overflow nor
/// underflow.
struct ChristoffelEval {
  double log_sum_sq;  // log sum_{s=0}^{n-1} h_s(x)^2
  double newton_step; // h_n(x) / h_n'(x) = h_n / (sqrt(n) h_{n-1})
};

inline ChristoffelEval christoffel_eval(int n, double x) {
  double hm = 0.0, h = 1.0;  // h_{-1}, h_0 in the current scale
  double log_scale = 0.0;
  double sum_sq = 1.0;  // h_0^2
  for (int s = 0; s < n; ++s) {
    const double hn = (x * h - std::sqrt(double(s)) * hm) / std::sqrt(double(s + 1));
    hm = h;
    h = hn;
    if (s + 1 < n) sum_sq += h * h;
    const double mag = std::max(std::abs(h), std::abs(hm));
    if (mag > 1e120) {
      h *= 1e-120;
      hm *= 1e-120;
      sum_sq *= 1e-240;
      log_scale += 120.0 * std::log(10.0);
    }
  }
  ChristoffelEval out;
  out.log_sum_sq = std::log(sum_sq) + 2.0 * log_scale;
  out.newton_step = h / (std::sqrt(double(n)) * hm);
  return out;
}

}  // namespace detail

/// Gauss rule for the probabilists' weight. Nodes are the eigenvalues of the
/// Jacobi matrix (off-diagonal sqrt(i)), polished by two Newton steps on h_n;
/// weights come from the Christoffel identity w_i = 1 / sum_{s<n} h_s(x_i)^2,
/// which keeps full relative accuracy where eigenvector first components
/// degrade into rounding noise for far-out nodes. Exact for polynomial
/// integrands of degree <= 2n-1.
inline GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  GaussHermiteRule rule;
  if (n == 1) {
    rule.nodes = Eigen::VectorXd::Zero(1);
    rule.weights = Eigen::VectorXd::Ones(1);
    return rule;
  }
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int i = 0; i + 1 < n; ++i) sub[i] = std::sqrt(double(i + 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("gauss_hermite: tridiagonal eigensolver failed");
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    x -= detail::christoffel_eval(n, x).newton_step;
    const detail::ChristoffelEval ce = detail::christoffel_eval(n, x);
    x -= ce.newton_step;
    rule.nodes[i] = x;
    rule.weights[i] = std::exp(-detail::christoffel_eval(n, x).log_sum_sq);
  }
  return rule;
}

/// Hermite coefficients a_s = E_{X~N(0,1)}[sigma(X) h_s(X)], s = 0..s_max,
/// by Gauss-Hermite quadrature. Runs an orthonormality self-check on the
/// same nodes and rejects rules too coarse for the requested order.
inline std::vector<double> hermite_coeffs(const std::function<double(double)>& sigma,
                                          int s_max, int quad_nodes) {
  if (s_max < 0 || s_max > kHermiteMaxDegree)
    throw std::invalid_argument("hermite_coeffs: s_max out of range");
  const GaussHermiteRule rule = gauss_hermite(quad_nodes);
  const int n = quad_nodes;

  // H(s, i) = h_s(node_i)
  Eigen::MatrixXd H(s_max + 1, n);
  for (int i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    H(0, i) = 1.0;
    if (s_max >= 1) H(1, i) = x;
    for (int s = 1; s < s_max; ++s)
      H(s + 1, i) = (x * H(s, i) - std::sqrt(double(s)) * H(s - 1, i)) / std::sqrt(double(s + 1));
  }

  // Self-check: quadrature must reproduce <h_i, h_j> = delta_ij.
  for (int a = 0; a <= s_max; ++a)
    for (int b = a; b <= s_max; ++b) {
      double ip = 0.0;
      for (int i = 0; i < n; ++i) ip += rule.weights[i] * H(a, i) * H(b, i);
      const double target = (a == b) ? 1.0 : 0.0;
      if (std::abs(ip - target) > 1e-8)
        throw std::runtime_error(
            "hermite_coeffs: quadrature orthonormality self-check failed; "
            "increase quad_nodes (need >= 2*s_max + 32)");
    }

  std::vector<double> coeffs(s_max + 1, 0.0);
  double sigma_sq = 0.0;
  Eigen::VectorXd sig(n);
  for (int i = 0; i < n; ++i) {
    sig[i] = sigma(rule.nodes[i]);
    sigma_sq += rule.weights[i] * sig[i] * sig[i];
  }
  double parseval = 0.0;
  for (int s = 0; s <= s_max; ++s) {
    double a = 0.0;
    for (int i = 0; i < n; ++i) a += rule.weights[i] * sig[i] * H(s, i);
    coeffs[s] = a;
    parseval += a * a;
  }
  if (parseval > sigma_sq + 1e-6)
    throw std::runtime_error("hermite_coeffs: Parseval partial sum exceeds ||sigma||^2");
  return coeffs;
}

/// Minimal K' >= K with |a_{K'}| > coeff_tol.
inline int select_kprime(const std::vector<double>& coeffs, int K, double coeff_tol) {
  for (int s = K; s < static_cast<int>(coeffs.size()); ++s)
    if (std::abs(coeffs[s]) > coeff_tol) return s;
  throw std::runtime_error(
      "select_kprime: no nonzero coefficient at or above K; activation behaves "
      "like a low-degree polynomial over the computed range");
}

/// An activation together with everything the kernel analytics need.
struct ActivationSpec {
  std::string name;
  std::function<double(double)> evaluate;
  std::vector<double> hermite_coeffs;  // a_0 .. a_{s_max}
  double l2_norm = 0.0;                // ||sigma|| under N(0,1)
  double sup_norm = 0.0;
  int kdeg = 1;     // the configured K
  int kprime = -1;  // minimal K' >= K with a_{K'} != 0
  double coeff_tol = 1e-10;
  GaussHermiteRule quad;  // rule used for the coefficients

  int s_max() const { return static_cast<int>(hermite_coeffs.size()) - 1; }

  /// sqrt(E sigma(r X)^2), X ~ N(0,1); used for kernel tail bounds.
  double l2_norm_scaled(double r) const {
    double acc = 0.0;
    for (int i = 0; i < quad.nodes.size(); ++i) {
      const double v = evaluate(r * quad.nodes[i]);
      acc += quad.weights[i] * v * v;
    }
    return std::sqrt(acc);
  }
};

inline ActivationSpec make_activation_from(std::function<double(double)> fn, std::string name,
                                           double sup_norm, int K, int s_max = 32,
                                           int quad_nodes = 0, double coeff_tol = 1e-10) {
  if (quad_nodes <= 0) quad_nodes = 2 * s_max + 32;
  ActivationSpec spec;
  spec.name = std::move(name);
  spec.evaluate = std::move(fn);
  spec.sup_norm = sup_norm;
  spec.kdeg = K;
  spec.coeff_tol = coeff_tol;
  spec.quad = gauss_hermite(quad_nodes);
  spec.hermite_coeffs = hermite_coeffs(spec.evaluate, s_max, quad_nodes);
  double l2 = 0.0;
  for (int i = 0; i < spec.quad.nodes.size(); ++i) {
    const double v = spec.evaluate(spec.quad.nodes[i]);
    l2 += spec.quad.weights[i] * v * v;
  }
  spec.l2_norm = std::sqrt(l2);
  spec.kprime = select_kprime(spec.hermite_coeffs, K, coeff_tol);
  return spec;
}

/// Named activations: "tanh" and "erf-like" (erf(x/sqrt(2)), a smooth
/// sign-shaped curve). Both are Lipschitz, bounded and non-polynomial.
inline ActivationSpec make_activation(const std::string& name, int K, int s_max = 32,
                                      int quad_nodes = 0) {
  if (name == "tanh")
    return make_activation_from([](double x) { return std::tanh(x); }, "tanh", 1.0, K, s_max,
                                quad_nodes);
  if (name == "erf-like")
    return make_activation_from([](double x) { return std::erf(x / std::sqrt(2.0)); }, "erf-like",
                                1.0, K, s_max, quad_nodes);
  throw std::invalid_argument("make_activation: unknown activation '" + name + "'");
}

/// Piecewise-linear activation from a sample table; clamps outside the grid.
inline ActivationSpec make_activation_table(std::vector<double> xs, std::vector<double> ys, int K,
                                            int s_max = 32, int quad_nodes = 0) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("make_activation_table: need matching tables of size >= 2");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1]))
      throw std::invalid_argument("make_activation_table: x grid must be strictly increasing");
  double sup = 0.0;
  for (double v : ys) sup = std::max(sup, std::abs(v));
  auto fn = [xs = std::move(xs), ys = std::move(ys)](double x) {
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[hi - 1]) / (xs[hi] - xs[hi - 1]);
    return ys[hi - 1] + t * (ys[hi] - ys[hi - 1]);
  };
  return make_activation_from(std::move(fn), "table", sup, K, s_max, quad_nodes);
}

/// a_s(r) = sum_j a_{s+2j} sqrt((s+2j)!/s!) (r^2-1)^j / (j! 2^j), truncated
/// when the geometric tail majorant drops below tail_tol. a_s(1) = a_s exactly.
inline double a_shifted(int s, double r, const ActivationSpec& spec, double tail_tol = 1e-12) {
  const double eps = std::abs(1.0 - r * r);
  if (eps >= 0.5) throw std::domain_error("a_shifted: requires |1 - r^2| < 1/2");
  if (s < 0 || s > spec.s_max()) throw std::invalid_argument("a_shifted: s out of range");
  const double drift = r * r - 1.0;
  if (drift == 0.0) return spec.hermite_coeffs[s];
  const double tail_scale = spec.l2_norm / std::sqrt(1.0 - 2.0 * eps * eps);
  double sum = spec.hermite_coeffs[s];
  double fact_ratio = 1.0;  // sqrt((s+2j)! / s!)
  double drift_pow = 1.0;   // (r^2-1)^j / (j! 2^j)
  for (int j = 1; s + 2 * j <= spec.s_max(); ++j) {
    fact_ratio *= std::sqrt(double(s + 2 * j - 1) * double(s + 2 * j));
    drift_pow *= drift / (2.0 * j);
    sum += spec.hermite_coeffs[s + 2 * j] * fact_ratio * drift_pow;
    const double majorant =
        tail_scale * std::pow(2.0, 0.5 * (s + 2 * j + 2)) * std::pow(eps, j);
    if (majorant < tail_tol) break;
  }
  return sum;
}

/// A kernel evaluation request: two points, the bias magnitude, and the
/// series truncation order.
struct KernelQuery {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  double beta = 0.9;
  int series_terms = 32;
};

struct KernelValue {
  double value = 0.0;
  double tail = 0.0;  // bound on the dropped series remainder
};

/// Truncated series  sum_s a_s(r_x) a_s(r_y) ((1-b^2)/n <x,y> + b^2)^s
/// with r_x = sqrt((1-b^2)||x||^2/n + b^2). The reported tail bounds the
/// remainder via Cauchy-Schwarz against E sigma(r X)^2.
inline KernelValue kernel_analytic(const KernelQuery& q, const ActivationSpec& spec) {
  if (q.x.size() != q.y.size())
    throw std::invalid_argument("kernel_analytic: dimension mismatch");
  if (!(q.beta >= 0.0 && q.beta <= 1.0))
    throw std::invalid_argument("kernel_analytic: beta must be in [0,1]");
  if (!q.x.allFinite() || !q.y.allFinite())
    throw std::invalid_argument("kernel_analytic: non-finite input");
  const int n = static_cast<int>(q.x.size());
  const double b2 = q.beta * q.beta;
  const double scale = (1.0 - b2) / n;
  const double rx = std::sqrt(scale * q.x.squaredNorm() + b2);
  const double ry = std::sqrt(scale * q.y.squaredNorm() + b2);
  const double rho_raw = scale * q.x.dot(q.y) + b2;
  const double denom = rx * ry;
  if (denom > 0.0 && std::abs(rho_raw) > denom * (1.0 + 1e-12))
    throw std::runtime_error("kernel_analytic: correlation argument exceeds 1");

  const int S = std::min(q.series_terms, spec.s_max());
  KernelValue out;
  double partial_x = 0.0, partial_y = 0.0;
  double rho_pow = 1.0, rx_pow = 1.0, ry_pow = 1.0;
  for (int s = 0; s <= S; ++s) {
    const double ax = a_shifted(s, rx, spec);
    const double ay = a_shifted(s, ry, spec);
    out.value += ax * ay * rho_pow;
    partial_x += ax * ax * rx_pow * rx_pow;
    partial_y += ay * ay * ry_pow * ry_pow;
    rho_pow *= rho_raw;
    rx_pow *= rx;
    ry_pow *= ry;
  }
  const double total_x = spec.l2_norm_scaled(rx);
  const double total_y = spec.l2_norm_scaled(ry);
  const double rem_x = std::sqrt(std::max(0.0, total_x * total_x - partial_x));
  const double rem_y = std::sqrt(std::max(0.0, total_y * total_y - partial_y));
  const double rho_abs = denom > 0.0 ? std::min(1.0, std::abs(rho_raw) / denom) : 0.0;
  out.tail = std::pow(rho_abs, S + 1) * rem_x * rem_y;
  return out;
}

struct McEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Monte Carlo estimate of E[sigma(w.x+b) sigma(w.y+b)] with
/// w ~ N(0, (1-b^2)/n I), b ~ N(0, b^2). Deterministic given the seed.
inline McEstimate kernel_mc(const KernelQuery& q, const ActivationSpec& spec, long samples,
                            std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("kernel_mc: need samples >= 1");
  if (q.x.size() != q.y.size()) throw std::invalid_argument("kernel_mc: dimension mismatch");
  const int n = static_cast<int>(q.x.size());
  const double wsd = std::sqrt((1.0 - q.beta * q.beta) / n);
  Rng rng(seed);
  double sum = 0.0, sumsq = 0.0;
  for (long t = 0; t < samples; ++t) {
    double wx = 0.0, wy = 0.0;
    for (int i = 0; i < n; ++i) {
      const double wi = wsd * rng.normal();
      wx += wi * q.x[i];
      wy += wi * q.y[i];
    }
    const double b = q.beta * rng.normal();
    const double v = spec.evaluate(wx + b) * spec.evaluate(wy + b);
    sum += v;
    sumsq += v * v;
  }
  McEstimate out;
  out.estimate = sum / samples;
  const double var = std::max(0.0, sumsq / samples - out.estimate * out.estimate);
  out.stderr_ = std::sqrt(var / samples);
  return out;
}

namespace detail {
// (1-b^2)/sqrt(1 - 2(1-b^2)^2), the decay factor of the coefficient drift.
inline double beta_drift_factor(double beta) {
  const double e = 1.0 - beta * beta;
  return e / std::sqrt(1.0 - 2.0 * e * e);
}
}  // namespace detail

/// Minimal beta in [3/4, 1) with
///   (||sigma||/|a_{K'}|) 2^{(K'+2)/2} (1-b^2)/sqrt(1-2(1-b^2)^2) <= eps/2,
/// located by bisection to 1e-10. Returns the floor 3/4 when it already holds.
inline double beta_threshold(const ActivationSpec& spec, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("beta_threshold: eps must be positive");
  const double lead = spec.l2_norm / std::abs(spec.hermite_coeffs[spec.kprime]) *
                      std::pow(2.0, 0.5 * (spec.kprime + 2));
  const auto g = [&](double beta) { return lead * detail::beta_drift_factor(beta); };
  const double target = eps / 2.0;
  if (g(0.75) <= target) return 0.75;
  double lo = 0.75, hi = 1.0 - 1e-14;
  if (g(hi) > target)
    throw std::runtime_error("beta_threshold: no beta < 1 satisfies the bound (numeric failure)");
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= target ? hi : lo) = mid;
  }
  return hi;
}

/// The failure-probability bound delta(eps, beta, q, M, n): 1 when the weight
/// norm condition fails, otherwise the exponential concentration bound. The
/// exponential branch is clamped at 1: it bounds a probability, and just past
/// the branch switch the raw expression starts near 2, which would make the
/// bound non-monotone in q for no informational gain.
inline double delta_bound(double eps, double beta, double q, double M, double n,
                          const ActivationSpec& spec) {
  if (!(eps > 0.0 && q > 0.0 && M > 0.0 && n > 0.0))
    throw std::invalid_argument("delta_bound: arguments must be positive");
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("delta_bound: beta must be in (0,1)");
  const double a = spec.hermite_coeffs[spec.kprime];
  const int K = spec.kdeg, Kp = spec.kprime;
  const double sup = spec.sup_norm;
  const double norm_cond = 4.0 * sup / (eps * std::sqrt(q)) / (a * a) /
                           std::pow(beta, 2 * (Kp - K)) *
                           std::pow(n / (1.0 - beta * beta), K) * M * M;
  if (norm_cond > 1.0) return 1.0;
  const double num = std::pow(a, 4.0) * std::pow(beta, 4.0 * (Kp - K)) *
                     std::pow(1.0 - beta * beta, 2.0 * K) * std::pow(eps, 4.0);
  const double den = 512.0 * std::pow(n, 2.0 * K) * std::pow(M, 4.0) * std::pow(sup, 4.0);
  return std::min(1.0, 2.0 * std::exp(-q * num / den));
}

}  // namespace hierlearn
