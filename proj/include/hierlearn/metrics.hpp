#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "hierlearn/train.hpp"

// Post-hoc diagnostics over training traces: per-level acquisition layers,
// the geometric loss-decay report, and the robust-loss audit. These are
// descriptive: the underlying statements hold with high probability, so the
// flags are evidence, not assertions.

namespace hierlearn {

struct LabelDecay {
  int label = 0;
  bool entered_regime = false;  // loss dropped below 1/(2m|G|) at some layer
  bool at_floor = false;        // losses at or below the eps_opt floor throughout
  double max_ratio = 0.0;       // max over k of (l^{k+1} - eps_opt/(1-e^-g)) / l^k
  bool within_theory = true;    // max_ratio <= e^{-gamma}
};

struct DecayReport {
  double gamma = 0.0;
  double threshold = 0.0;  // 1/(2m|G|)
  std::vector<LabelDecay> labels;
};

inline DecayReport decay_report(const TrainTrace& trace, const LossParams& lp) {
  DecayReport rep;
  rep.gamma = lp.gamma();
  rep.threshold = 1.0 / (2.0 * double(lp.m) * lp.G_size);
  if (trace.layers.empty()) return rep;
  const int n = static_cast<int>(trace.layers.front().labels.size());
  const double offset = trace.eps_opt / (1.0 - std::exp(-rep.gamma));
  const double decay = std::exp(-rep.gamma);
  for (int j = 0; j < n; ++j) {
    LabelDecay ld;
    ld.label = j;
    ld.at_floor = true;
    bool any_ratio = false;
    for (std::size_t k = 0; k + 1 < trace.layers.size(); ++k) {
      const LabelRecord& cur = trace.layers[k].labels[j];
      const LabelRecord& nxt = trace.layers[k + 1].labels[j];
      if (!cur.feasible || cur.loss > rep.threshold) continue;
      ld.entered_regime = true;
      if (cur.loss <= trace.eps_opt) continue;  // at the optimizer floor
      ld.at_floor = false;
      const double ratio = std::max(0.0, nxt.loss - offset) / cur.loss;
      ld.max_ratio = any_ratio ? std::max(ld.max_ratio, ratio) : ratio;
      any_ratio = true;
    }
    if (any_ratio) ld.within_theory = ld.max_ratio <= decay;
    rep.labels.push_back(ld);
  }
  return rep;
}

/// Per-level acquisition layers and the loss matrix, assembled from a trace.
/// cumulative[i] = |L_{i+1}| gives the nested level sets.
struct MetricsReport {
  std::vector<std::vector<double>> loss;          // loss[k][j]
  std::vector<std::vector<double>> worst_margin;  // worst_margin[k][j]
  std::vector<double> err_zero;                   // per layer
  std::vector<double> err_half;
  std::vector<int> acquisition_layer;  // per level, 1-based layer; -1 if never
  DecayReport decay;
};

inline MetricsReport build_metrics(const TrainTrace& trace, const std::vector<int>& cumulative,
                                   const LossParams& lp) {
  MetricsReport rep;
  for (const LayerRecord& layer : trace.layers) {
    std::vector<double> losses, margins;
    for (const LabelRecord& rec : layer.labels) {
      losses.push_back(rec.loss);
      margins.push_back(rec.worst_margin);
    }
    rep.loss.push_back(std::move(losses));
    rep.worst_margin.push_back(std::move(margins));
    rep.err_zero.push_back(layer.err_zero);
    rep.err_half.push_back(layer.err_half);
  }
  for (int size : cumulative) {
    int acquired = -1;
    for (std::size_t k = 0; k < rep.worst_margin.size(); ++k) {
      bool all_positive = true;
      for (int j = 0; j < size && all_positive; ++j)
        if (!(rep.worst_margin[k][j] > 0.0)) all_positive = false;
      if (all_positive) {
        acquired = static_cast<int>(k) + 1;
        break;
      }
    }
    rep.acquisition_layer.push_back(acquired);
  }
  rep.decay = decay_report(trace, lp);
  return rep;
}

struct RobustLossAudit {
  double value = 0.0;
  bool feasible = true;
};

/// Sample-averaged robust loss per label: (1/m) sum_t (1/|G|) sum_g
/// max_{0<=s<=eps} l(z_{t,g} - s), with the extended-value semantics
/// surfaced through the feasible flag.
inline std::vector<RobustLossAudit> robust_loss_audit(const Eigen::MatrixXd& fhat,
                                                      const Dataset& ds, double eps,
                                                      const LossParams& lp) {
  const long m = ds.samples();
  const int n = ds.n, G = ds.locations;
  if (fhat.rows() != n || fhat.cols() != m * G)
    throw std::invalid_argument("robust_loss_audit: prediction shape mismatch");
  std::vector<RobustLossAudit> out(n);
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    bool feasible = true;
    for (long t = 0; t < m; ++t)
      for (int g = 0; g < G; ++g) {
        const double z = ds.Y(long(g) * n + j, t) * fhat(j, t * G + g);
        const LossValue lv = robust_loss(z, eps, lp);
        acc += lv.value;
        feasible = feasible && lv.feasible;
      }
    out[j].value = acc / (double(m) * G);
    out[j].feasible = feasible;
  }
  return out;
}

}  // namespace hierlearn
