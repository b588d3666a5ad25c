#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hierlearn/proximity.hpp"
#include "hierlearn/ptf.hpp"
#include "hierlearn/rng.hpp"

// Synthetic hierarchical multi-label targets: nested label sets where level-1
// labels are juntas of the (local) input and level-i labels are juntas of
// level-(i-1) labels at nearby locations. Each label carries a robust PTF
// certificate built from its multilinear extension.

namespace hierlearn {

/// A boolean function of at most K coordinates, as dependency indices plus a
/// +-1 truth table. table[t] is the value when dep j reads +1 iff bit j of t.
struct Junta {
  std::vector<int> deps;
  std::vector<int> table;

  int eval(const Eigen::VectorXd& x) const {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < deps.size(); ++j)
      if (x[deps[j]] > 0.0) idx |= std::size_t(1) << j;
    return table[idx];
  }

  bool constant() const {
    for (int v : table)
      if (v != table[0]) return false;
    return true;
  }
};

struct LabelDef {
  int level = 1;  // 1-based
  Junta junta;
  std::optional<PtfClaim> witness;
};

struct Hierarchy {
  int d = 0;  // input dimension per location
  int n = 0;  // number of labels
  int r = 1;  // number of levels
  ProximityMap prox;
  std::vector<int> level_counts;      // new labels per level, sums to n
  std::vector<int> cumulative;        // |L_i|
  std::vector<LabelDef> defs;         // labels 0..n-1, grouped by level
  std::uint64_t seed = 0;

  int level_of(int label) const { return defs[label].level; }
};

namespace detail {

inline Junta random_junta(Rng& rng, const std::vector<int>& pool, int K) {
  if (static_cast<int>(pool.size()) < K)
    throw std::invalid_argument("random_junta: dependency pool smaller than K");
  Junta j;
  // K distinct indices from the pool, order kept random for variety
  std::vector<int> avail = pool;
  for (int t = 0; t < K; ++t) {
    const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(0, avail.size() - 1));
    j.deps.push_back(avail[pick]);
    avail.erase(avail.begin() + pick);
  }
  j.table.resize(std::size_t(1) << K);
  do {
    for (auto& v : j.table) v = rng.sign();
  } while (j.constant());
  return j;
}

}  // namespace detail

/// Attaches the robust certificate of a junta: multilinear extension F (with
/// ||F||_co = 1, margins exactly 1 on corners), refined to (K, 2, 3, xi) with
/// xi = 1/(K 2^{(K+2)/2}), witnessed by 2F.
inline PtfClaim junta_witness(const Junta& junta, int embed_dim) {
  const int K = static_cast<int>(junta.deps.size());
  PtfClaim plain;
  plain.K = K;
  plain.M = 1.0;
  plain.B = 1.0;
  plain.xi = 1.0;
  plain.witness = multilinear_extension(junta.table, embed_dim, junta.deps);
  const double lip = K * std::pow(2.0, 0.5 * K);
  return refine_ptf(plain, /*b_sup=*/1.0, /*lipschitz=*/lip);
}

/// Random junta hierarchy. Level-1 labels read E_g of the input (pool [w*d]);
/// level-i labels read E_g of the level-(i-1) labels (pool restricted to
/// L_{i-1} coordinates across the w slots). level_counts lists the number of
/// new labels per level and must sum to n; pass {} for an equal split.
inline Hierarchy gen_junta_hierarchy(int d, int n, int r, int K, const ProximityMap& prox,
                                     std::vector<int> level_counts, std::uint64_t seed) {
  if (d < 1 || n < 1 || r < 1 || K < 1)
    throw std::invalid_argument("gen_junta_hierarchy: bad parameters");
  if (level_counts.empty()) {
    level_counts.assign(r, n / r);
    for (int i = 0; i < n % r; ++i) ++level_counts[i];
  }
  if (static_cast<int>(level_counts.size()) != r)
    throw std::invalid_argument("gen_junta_hierarchy: level_counts size != r");
  int total = 0;
  for (int c : level_counts) {
    if (c < 1) throw std::invalid_argument("gen_junta_hierarchy: empty level");
    total += c;
  }
  if (total != n) throw std::invalid_argument("gen_junta_hierarchy: level_counts must sum to n");

  Hierarchy h;
  h.d = d;
  h.n = n;
  h.r = r;
  h.prox = prox;
  h.level_counts = level_counts;
  h.seed = seed;
  h.cumulative.resize(r);
  int cum = 0;
  for (int i = 0; i < r; ++i) {
    cum += level_counts[i];
    h.cumulative[i] = cum;
  }

  Rng rng(seed, "hierarchy");
  const int w = prox.width;
  for (int level = 1; level <= r; ++level) {
    std::vector<int> pool;
    int embed_dim;
    if (level == 1) {
      embed_dim = w * d;
      for (int i = 0; i < w * d; ++i) pool.push_back(i);
    } else {
      embed_dim = w * n;
      const int lower = h.cumulative[level - 2];
      for (int s = 0; s < w; ++s)
        for (int l = 0; l < lower; ++l) pool.push_back(s * n + l);
    }
    for (int c = 0; c < level_counts[level - 1]; ++c) {
      LabelDef def;
      def.level = level;
      def.junta = detail::random_junta(rng, pool, K);
      def.witness = junta_witness(def.junta, embed_dim);
      h.defs.push_back(std::move(def));
    }
  }
  return h;
}

/// Level-by-level evaluation: y is n x |G| with entries +-1.
inline Eigen::MatrixXd eval_labels(const Hierarchy& h, const Eigen::MatrixXd& x) {
  if (x.rows() != h.d || x.cols() != h.prox.locations)
    throw std::invalid_argument("eval_labels: input shape mismatch");
  for (int c = 0; c < x.cols(); ++c)
    for (int rr = 0; rr < x.rows(); ++rr)
      if (x(rr, c) != 1.0 && x(rr, c) != -1.0)
        throw std::invalid_argument("eval_labels: inputs must be +-1 for boolean hierarchies");
  const int G = h.prox.locations;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(h.n, G);
  Eigen::MatrixXd ein = proximity_concat_all(h.prox, x);
  int label = 0;
  for (int level = 1; level <= h.r; ++level) {
    Eigen::MatrixXd elab;
    if (level > 1) elab = proximity_concat_all(h.prox, y);  // rows above cur level unread
    const int count = h.level_counts[level - 1];
    for (int c = 0; c < count; ++c, ++label) {
      const Junta& junta = h.defs[label].junta;
      for (int g = 0; g < G; ++g)
        y(label, g) = junta.eval(level == 1 ? ein.col(g) : elab.col(g));
    }
  }
  return y;
}

struct HierarchyValidation {
  bool passes = false;
  bool vacuous = false;  // no data
  double worst_margin_low = 0.0;
  double worst_margin_high = 0.0;
  std::vector<int> failed_labels;
};

}  // namespace hierlearn
