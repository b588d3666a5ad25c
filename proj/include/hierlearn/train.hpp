#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

#include "hierlearn/dataset.hpp"
#include "hierlearn/loss.hpp"
#include "hierlearn/resnet.hpp"
#include "hierlearn/solver.hpp"

// Layerwise training: for k = 1..D-1, each label's row of W^D W^k_2 is the
// minimizer of an eps_opt-strongly-convex objective over the layer's random
// features, found independently per label with a duality-gap certificate.
// The layer sequence is strictly serial; labels within a layer may be solved
// in parallel without affecting the result.

namespace hierlearn {

struct TrainConfig {
  double eps_opt = 1e-4;
  long max_iters = 4000;  // solver epochs per label
  int threads = 1;
  bool parallel_labels = true;
};

struct LabelRecord {
  int layer = 0;
  int label = 0;
  double loss = 0.0;      // finite surrogate value; infinite in the extended sense when !feasible
  bool feasible = true;   // all margins within [0,1] up to 1e-9
  double worst_margin = 0.0;
  double best_margin = 0.0;
  double cert = 0.0;      // duality-gap optimality certificate
  long iters = 0;
  bool converged = true;
};

struct LayerRecord {
  int layer = 0;
  std::vector<LabelRecord> labels;
  double err_zero = 0.0;  // Err_{S,0}
  double err_half = 0.0;  // Err_{S,1/2}
};

struct TrainTrace {
  std::vector<LayerRecord> layers;
  double eps_opt = 0.0;
  double gamma = 0.0;
  double theorem_eps_bound = 0.0;  // (1-e^{-gamma}) xi / (16 m^2 |G|^2), reported only
  bool eps_within_theorem_bound = false;
};

namespace detail {

/// Precomputed per-layer state shared by all labels.
struct LayerWorkspace {
  Eigen::MatrixXd Phi;       // q x (m*G)
  Eigen::MatrixXd residual;  // n x (m*G): f_hat^{k-1}; zero for layer 1
};

inline Eigen::MatrixXd concat_ensemble_batch(const ProximityMap& prox, const Eigen::MatrixXd& flat,
                                             int rows, long m) {
  // flat is (rows*G) x m, one flattened ensemble per column.
  const int G = prox.locations;
  Eigen::MatrixXd out(long(rows) * prox.width, m * G);
  for (long t = 0; t < m; ++t) {
    const Eigen::Map<const Eigen::MatrixXd> sample(flat.col(t).data(), rows, G);
    for (int g = 0; g < G; ++g)
      for (int s = 0; s < prox.width; ++s)
        out.col(t * G + g).segment(long(s) * rows, rows) = sample.col(prox.slots[g][s]);
  }
  return out;
}

inline LayerWorkspace make_layer_workspace(const ResNetParams& params, int k,
                                           const Eigen::MatrixXd& gamma_cache,
                                           const Dataset& ds) {
  LayerWorkspace ws;
  const long m = ds.samples();
  const int G = params.prox.locations;
  Eigen::MatrixXd ecols;
  if (k == 1) {
    ecols = concat_ensemble_batch(params.prox, ds.X, params.d, m);
    ws.residual = Eigen::MatrixXd::Zero(params.n, m * G);
  } else {
    // gamma_cache is n x (m*G); regroup it per sample for the concatenation.
    Eigen::MatrixXd flat(long(params.n) * G, m);
    for (long t = 0; t < m; ++t)
      flat.col(t) =
          Eigen::Map<const Eigen::VectorXd>(gamma_cache.col(t * G).data(), long(params.n) * G);
    ecols = concat_ensemble_batch(params.prox, flat, params.n, m);
    ws.residual = params.WD * gamma_cache;
  }
  ws.Phi = detail::apply_sigma(params.activation,
                               (params.W1[k - 1] * ecols).colwise() + params.b[k - 1]);
  return ws;
}

}  // namespace detail

/// The convex objective of one label at one layer, as (value, subgradient).
/// phi holds one feature column per (sample, location) term; residual holds
/// the matching f_hat^{k-1} values and labels the +-1 targets.
inline ObjectiveEval layer_objective(const Eigen::VectorXd& w, const Eigen::MatrixXd& phi,
                                     const Eigen::VectorXd& residual,
                                     const Eigen::VectorXd& labels, const LossParams& lp,
                                     double eps_opt) {
  if (phi.cols() != residual.size() || phi.cols() != labels.size())
    throw std::invalid_argument("layer_objective: shape mismatch");
  ConvexLayerProblem prob;
  prob.Psi = phi;
  for (long i = 0; i < prob.Psi.cols(); ++i) prob.Psi.col(i) *= labels[i];
  prob.a = residual.cwiseProduct(labels);
  prob.loss = PiecewiseLoss::from(lp);
  prob.c = 1.0 / (double(lp.m) * lp.G_size);
  prob.lambda = eps_opt;
  return eval_objective(prob, w);
}

/// Trains layer k in place: solves the per-label problems, writes
/// W^k_2 = (W^D)^T [w_1; ...; w_n], and returns one record per label.
/// gamma_cache (n x m*G) must hold Gamma^{k-1} for k >= 2 and is updated to
/// Gamma^k on return.
inline std::vector<LabelRecord> train_layer(ResNetParams& params, int k, const Dataset& ds,
                                            const LossParams& lp, const TrainConfig& cfg,
                                            Eigen::MatrixXd& gamma_cache) {
  if (k < 1 || k > params.trainable_layers())
    throw std::invalid_argument("train_layer: layer index out of range");
  if (ds.n != params.n || ds.d != params.d || ds.locations != params.prox.locations)
    throw std::invalid_argument("train_layer: dataset/network shape mismatch");
  lp.validate();
  if (lp.m != ds.samples() || lp.G_size != ds.locations)
    throw std::invalid_argument("train_layer: loss params do not match dataset size");

  const long m = ds.samples();
  const int G = ds.locations;
  const long terms = m * G;
  const int n = params.n;
  const detail::LayerWorkspace ws = detail::make_layer_workspace(params, k, gamma_cache, ds);

  const PiecewiseLoss pw = PiecewiseLoss::from(lp);
  SolveOptions sopt;
  sopt.gap_tol = cfg.eps_opt / 2.0;
  sopt.max_epochs = cfg.max_iters;

  Eigen::MatrixXd w_rows(n, params.q_width);
  std::vector<LabelRecord> records(n);
  std::vector<SolveResult> results(n);

  auto solve_one = [&](int j) {
    ConvexLayerProblem prob;
    prob.Psi = ws.Phi;
    prob.a.resize(terms);
    for (long t = 0; t < m; ++t)
      for (int g = 0; g < G; ++g) {
        const long col = t * G + g;
        const double y = ds.Y(long(g) * n + j, t);
        prob.Psi.col(col) *= y;
        prob.a[col] = y * ws.residual(j, col);
      }
    prob.loss = pw;
    prob.c = 1.0 / (double(m) * G);
    prob.lambda = cfg.eps_opt;
    results[j] = solve_convex_layer(prob, sopt);
  };

  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int nthreads = cfg.parallel_labels ? (cfg.threads > 0 ? cfg.threads : std::max(1, hw)) : 1;
  nthreads = std::min<int>(nthreads, n);
  if (nthreads <= 1) {
    for (int j = 0; j < n; ++j) solve_one(j);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&]() {
        for (int j = next.fetch_add(1); j < n; j = next.fetch_add(1)) solve_one(j);
      });
    for (auto& th : pool) th.join();
  }

  for (int j = 0; j < n; ++j) w_rows.row(j) = results[j].w.transpose();
  params.W2[k - 1] = params.WD.transpose() * w_rows;

  // Gamma^k and the realized margins.
  if (k == 1)
    gamma_cache = params.W2[0] * ws.Phi;
  else
    gamma_cache.noalias() += params.W2[k - 1] * ws.Phi;
  const Eigen::MatrixXd fhat = params.WD * gamma_cache;

  for (int j = 0; j < n; ++j) {
    LabelRecord rec;
    rec.layer = k;
    rec.label = j;
    rec.cert = results[j].gap;
    rec.iters = results[j].epochs;
    rec.converged = results[j].converged;
    double worst = std::numeric_limits<double>::infinity();
    double best = -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    bool feasible = true;
    for (long t = 0; t < m; ++t)
      for (int g = 0; g < G; ++g) {
        const double z = ds.Y(long(g) * n + j, t) * fhat(j, t * G + g);
        worst = std::min(worst, z);
        best = std::max(best, z);
        acc += margin_loss(z, lp).value;
        if (z < -1e-9 || z > 1.0 + 1e-9) feasible = false;
      }
    rec.loss = acc / (double(m) * G);
    rec.worst_margin = worst;
    rec.best_margin = best;
    rec.feasible = feasible;
    records[j] = rec;
  }
  return records;
}

/// Fraction of samples with any (label, location) margin below gamma.
inline double margin_error(const Eigen::MatrixXd& fhat, const Dataset& ds, double gamma) {
  const long m = ds.samples();
  const int n = ds.n, G = ds.locations;
  if (fhat.rows() != n || fhat.cols() != m * G)
    throw std::invalid_argument("margin_error: prediction shape mismatch");
  long bad = 0;
  for (long t = 0; t < m; ++t) {
    bool hit = false;
    for (int g = 0; g < G && !hit; ++g)
      for (int j = 0; j < n && !hit; ++j)
        if (fhat(j, t * G + g) * ds.Y(long(g) * n + j, t) < gamma) hit = true;
    if (hit) ++bad;
  }
  return double(bad) / double(m);
}

/// Runs Algorithm-style layerwise training over layers 1..D-1 in order.
/// W^D is never touched. Non-convergence of a label's solve is recorded in
/// its trace entry, never silently dropped.
inline TrainTrace train_all(ResNetParams& params, const Dataset& ds, const LossParams& lp,
                            const TrainConfig& cfg) {
  TrainTrace trace;
  trace.eps_opt = cfg.eps_opt;
  trace.gamma = lp.gamma();
  const double mg = double(ds.samples()) * ds.locations;
  trace.theorem_eps_bound = (1.0 - std::exp(-trace.gamma)) * lp.xi / (16.0 * mg * mg);
  trace.eps_within_theorem_bound = cfg.eps_opt <= trace.theorem_eps_bound;

  Eigen::MatrixXd gamma_cache;  // n x (m*G) after layer 1
  for (int k = 1; k <= params.trainable_layers(); ++k) {
    LayerRecord layer;
    layer.layer = k;
    layer.labels = train_layer(params, k, ds, lp, cfg, gamma_cache);
    const Eigen::MatrixXd fhat = params.WD * gamma_cache;
    layer.err_zero = margin_error(fhat, ds, 0.0);
    layer.err_half = margin_error(fhat, ds, 0.5);
    trace.layers.push_back(std::move(layer));
  }
  return trace;
}

}  // namespace hierlearn
