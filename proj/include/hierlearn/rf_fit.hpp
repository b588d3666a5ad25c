#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>

#include "hierlearn/hermite.hpp"

// Ridge-regression surrogate for the random-features approximation claim:
// given the feature map of a beta-Xavier layer on a point set and the target
// polynomial's values there, find the linear readout and report the sup
// error on the set next to the theory's (eps, delta) envelope.

namespace hierlearn {

struct RfFitReport {
  long q_width = 0;
  double weight_norm = 0.0;
  double max_abs_error = 0.0;
  bool solver_ok = true;
  std::string note;
  // filled when the theory context is supplied
  double eps_target = 0.0;
  double delta_at_params = 0.0;
};

struct RfTheoryContext {
  double eps = 0.0;
  double beta = 0.0;
  double coeff_norm_bound = 0.0;  // M
  double dim = 0.0;               // n
  const ActivationSpec* spec = nullptr;
};

/// Solves min_w sum_x (<w, phi(x)> - p(x))^2 + ridge ||w||^2 over the columns
/// of `features` (q x N). Uses whichever of the primal/dual normal systems is
/// smaller. An ill-conditioned solve is reported, never silent.
inline RfFitReport rf_fit(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          double ridge, std::optional<RfTheoryContext> ctx = std::nullopt) {
  const long q = features.rows(), N = features.cols();
  if (N != targets.size()) throw std::invalid_argument("rf_fit: targets size mismatch");
  if (N < 1) throw std::invalid_argument("rf_fit: need at least one point");
  if (!(ridge > 0.0)) throw std::invalid_argument("rf_fit: ridge must be positive");

  RfFitReport rep;
  rep.q_width = q;
  Eigen::VectorXd w;
  if (targets.isZero(0.0)) {
    w = Eigen::VectorXd::Zero(q);  // exact minimizer
  } else if (N <= q) {
    Eigen::MatrixXd K = features.transpose() * features;
    K.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success) {
      rep.solver_ok = false;
      rep.note = "dual normal system not positive definite";
      return rep;
    }
    w = features * ldlt.solve(targets);
  } else {
    Eigen::MatrixXd K = features * features.transpose();
    K.diagonal().array() += ridge;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
    if (ldlt.info() != Eigen::Success) {
      rep.solver_ok = false;
      rep.note = "primal normal system not positive definite";
      return rep;
    }
    w = ldlt.solve(features * targets);
  }
  const Eigen::VectorXd pred = features.transpose() * w;
  rep.weight_norm = w.norm();
  rep.max_abs_error = (pred - targets).lpNorm<Eigen::Infinity>();
  if (!std::isfinite(rep.max_abs_error) || !std::isfinite(rep.weight_norm)) {
    rep.solver_ok = false;
    rep.note = "non-finite solution";
  }
  if (ctx) {
    rep.eps_target = ctx->eps;
    rep.delta_at_params =
        delta_bound(ctx->eps, ctx->beta, double(q), ctx->coeff_norm_bound, ctx->dim, *ctx->spec);
  }
  return rep;
}

}  // namespace hierlearn
