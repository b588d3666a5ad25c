#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hierlearn/loss.hpp"

// Solver for the per-label layer objective
//
//   F(w) = c * sum_i loss(a_i + <psi_i, w>) + (lambda/2) ||w||^2
//
// with a convex piecewise-linear loss. Works on the Fenchel dual: exact
// cyclic coordinate maximization over one dual variable per sample term
// (each bounded to the loss's slope range), plus an active-set refinement
// step. The duality gap is the optimality certificate: gap <= eps_opt/2
// certifies an eps_opt/2-minimizer, matching the strong-convexity guarantee
// the layerwise algorithm requires.

namespace hierlearn {

struct ConvexLayerProblem {
  Eigen::MatrixXd Psi;  // q x N; column i = y_i * phi_i
  Eigen::VectorXd a;    // a_i = y_i * residual_i
  PiecewiseLoss loss;
  double c = 1.0;       // per-term weight, 1/(m|G|)
  double lambda = 1e-4; // ridge strength = eps_opt
};

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd subgrad;
};

inline ObjectiveEval eval_objective(const ConvexLayerProblem& prob, const Eigen::VectorXd& w) {
  const long N = prob.Psi.cols();
  ObjectiveEval out;
  out.subgrad = prob.lambda * w;
  double acc = 0.0;
  for (long i = 0; i < N; ++i) {
    const double z = prob.a[i] + prob.Psi.col(i).dot(w);
    acc += prob.loss.value(z);
    const double g = prob.loss.subgradient(z);
    if (g != 0.0) out.subgrad.noalias() += (prob.c * g) * prob.Psi.col(i);
  }
  out.value = prob.c * acc + 0.5 * prob.lambda * w.squaredNorm();
  return out;
}

struct SolveOptions {
  double gap_tol = 5e-5;
  long max_epochs = 4000;
  int gap_period = 4;     // epochs between certificate evaluations
  int polish_period = 32; // epochs between active-set refinement attempts
  long polish_cap = 600;  // skip refinement when more terms are pinned
};

struct SolveResult {
  Eigen::VectorXd w;
  double primal = std::numeric_limits<double>::infinity();
  double dual = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  long epochs = 0;
  bool converged = false;
};

namespace detail {

inline double dual_value(const ConvexLayerProblem& prob, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w) {
  double acc = 0.0;
  for (long i = 0; i < u.size(); ++i)
    acc += u[i] * prob.a[i] - prob.loss.conjugate(u[i]);
  return prob.c * acc - 0.5 * prob.lambda * w.squaredNorm();
}

inline Eigen::VectorXd primal_from_dual(const ConvexLayerProblem& prob, const Eigen::VectorXd& u) {
  return prob.Psi * (-(prob.c / prob.lambda) * u);
}

inline double primal_value(const ConvexLayerProblem& prob, const Eigen::VectorXd& w) {
  double acc = 0.0;
  for (long i = 0; i < prob.Psi.cols(); ++i)
    acc += prob.loss.value(prob.a[i] + prob.Psi.col(i).dot(w));
  return prob.c * acc + 0.5 * prob.lambda * w.squaredNorm();
}

}  // namespace detail

inline SolveResult solve_convex_layer(const ConvexLayerProblem& prob, const SolveOptions& opt) {
  const long N = prob.Psi.cols();
  const long q = prob.Psi.rows();
  const PiecewiseLoss& pl = prob.loss;
  const double c = prob.c, lambda = prob.lambda;

  Eigen::VectorXd u = Eigen::VectorXd::Zero(N);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd qnorm(N);
  for (long i = 0; i < N; ++i) qnorm[i] = prob.Psi.col(i).squaredNorm();

  SolveResult best;
  best.w = w;

  auto certify = [&]() {
    // Rebuild w from u to keep the certificate free of incremental drift.
    w = detail::primal_from_dual(prob, u);
    const double p = detail::primal_value(prob, w);
    const double d = detail::dual_value(prob, u, w);
    if (p < best.primal) {
      best.primal = p;
      best.w = w;
    }
    best.dual = std::max(best.dual, d);
    best.gap = best.primal - best.dual;
    return best.gap <= opt.gap_tol;
  };

  // One exact coordinate maximization of the dual over u_i.
  auto update_term = [&](long i) {
    if (qnorm[i] == 0.0) {
      u[i] = pl.subgradient(prob.a[i]);  // term decoupled from w; closes its gap exactly
      return;
    }
    const double z = prob.a[i] + prob.Psi.col(i).dot(w);
    const double m_i = z + (c / lambda) * u[i] * qnorm[i];
    const double curv = c * c * qnorm[i] / lambda;  // d^2/du^2 of the quadratic part
    double best_u = u[i];
    double best_val = -std::numeric_limits<double>::infinity();
    for (int p = 0; p < 4; ++p) {
      double cand = lambda * (m_i - pl.zb[p]) / (c * qnorm[i]);
      cand = std::min(std::max(cand, pl.slope[p]), pl.slope[p + 1]);
      const double val = c * (cand * m_i - pl.conjugate(cand)) - 0.5 * curv * cand * cand;
      if (val > best_val) {
        best_val = val;
        best_u = cand;
      }
    }
    const double delta = best_u - u[i];
    if (delta != 0.0) {
      w.noalias() -= (c / lambda) * delta * prob.Psi.col(i);
      u[i] = best_u;
    }
  };

  // Active-set refinement: terms whose dual variable sits strictly between
  // two slope levels are pinned at the corresponding margin breakpoint; solve
  // the resulting equality system exactly and keep the result if it improves.
  auto polish = [&]() {
    std::vector<long> pinned;
    std::vector<int> bp(N, -1);
    const double tol = 1e-11;
    for (long i = 0; i < N; ++i) {
      bool at_slope = false;
      for (int p = 0; p < 5 && !at_slope; ++p)
        if (std::abs(u[i] - pl.slope[p]) <= tol * (1.0 + std::abs(pl.slope[p]))) at_slope = true;
      if (at_slope) continue;
      for (int p = 0; p < 4; ++p)
        if (u[i] > pl.slope[p] && u[i] < pl.slope[p + 1]) {
          bp[i] = p;
          break;
        }
      if (bp[i] >= 0) pinned.push_back(i);
    }
    const long P = static_cast<long>(pinned.size());
    if (P == 0 || P > opt.polish_cap) return false;

    Eigen::VectorXd u_fixed = u;
    for (long idx : pinned) u_fixed[idx] = 0.0;
    Eigen::VectorXd w_fixed = detail::primal_from_dual(prob, u_fixed);

    Eigen::MatrixXd G(P, P);
    Eigen::VectorXd rhs(P);
    for (long r = 0; r < P; ++r) {
      const auto col_r = prob.Psi.col(pinned[r]);
      for (long s = r; s < P; ++s) {
        G(r, s) = col_r.dot(prob.Psi.col(pinned[s])) * (c / lambda);
        G(s, r) = G(r, s);
      }
      rhs[r] = col_r.dot(w_fixed) + prob.a[pinned[r]] - pl.zb[bp[pinned[r]]];
    }
    G.diagonal().array() += 1e-12;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success) return false;
    Eigen::VectorXd up = ldlt.solve(rhs);

    Eigen::VectorXd u_cand = u_fixed;
    for (long r = 0; r < P; ++r) {
      const int p = bp[pinned[r]];
      u_cand[pinned[r]] = std::min(std::max(up[r], pl.slope[p]), pl.slope[p + 1]);
    }
    const Eigen::VectorXd w_cand = detail::primal_from_dual(prob, u_cand);
    const double pv = detail::primal_value(prob, w_cand);
    const double dv = detail::dual_value(prob, u_cand, w_cand);
    bool improved = false;
    if (pv < best.primal) {
      best.primal = pv;
      best.w = w_cand;
      improved = true;
    }
    if (dv > best.dual) {
      best.dual = dv;
      u = u_cand;
      w = w_cand;
      improved = true;
    }
    best.gap = best.primal - best.dual;
    return improved && best.gap <= opt.gap_tol;
  };

  if (certify()) {
    best.converged = true;
    return best;
  }
  for (long epoch = 1; epoch <= opt.max_epochs; ++epoch) {
    for (long i = 0; i < N; ++i) update_term(i);
    best.epochs = epoch;
    if (epoch % opt.gap_period == 0 && certify()) {
      best.converged = true;
      return best;
    }
    if (epoch % opt.polish_period == 0 && polish()) {
      best.converged = true;
      return best;
    }
  }
  certify();
  best.converged = best.gap <= opt.gap_tol;
  return best;
}

}  // namespace hierlearn
