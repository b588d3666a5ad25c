#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "hierlearn/hierarchy.hpp"
#include "hierlearn/rng.hpp"

// The "brain dump" teacher: a depth-r circuit of K-juntas over d wires, whose
// labels are random signed majorities (fanout k, odd) of each level's wires.

namespace hierlearn {

/// Sparse sign vector from W_{d,k}: exactly k entries in {-1,+1}.
struct SignVector {
  std::vector<int> index;  // strictly increasing, size k
  std::vector<int> sign;   // +-1, size k

  double dot(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < index.size(); ++j) acc += sign[j] * x[index[j]];
    return acc;
  }
};

struct BrainDumpModel {
  int d = 0;
  int r = 1;
  int K = 1;
  int k = 1;         // majority fanout, odd
  int q_labels = 1;  // labels per level
  std::vector<std::vector<Junta>> gates;        // gates[i][j], i in [r], j in [d]
  std::vector<std::vector<SignVector>> weights; // weights[i][j], i in [r], j in [q_labels]
  std::uint64_t seed = 0;

  int n_labels() const { return r * q_labels; }

  /// Wire values G^0..G^r; row i is G^i (row 0 is the input).
  Eigen::MatrixXd circuit_levels(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd G(r + 1, d);
    G.row(0) = x.transpose();
    for (int i = 1; i <= r; ++i) {
      const Eigen::VectorXd prev = G.row(i - 1).transpose();
      for (int j = 0; j < d; ++j) G(i, j) = gates[i - 1][j].eval(prev);
    }
    return G;
  }
};

inline SignVector random_sign_vector(Rng& rng, int d, int k) {
  SignVector w;
  std::vector<int> avail(d);
  for (int i = 0; i < d; ++i) avail[i] = i;
  for (int t = 0; t < k; ++t) {
    const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(0, avail.size() - 1));
    w.index.push_back(avail[pick]);
    avail.erase(avail.begin() + pick);
  }
  std::sort(w.index.begin(), w.index.end());
  for (int t = 0; t < k; ++t) w.sign.push_back(rng.sign());
  return w;
}

inline BrainDumpModel gen_braindump(int d, int r, int K, int k, int q_labels, std::uint64_t seed) {
  if (d < 1 || r < 1 || K < 1 || q_labels < 1)
    throw std::invalid_argument("gen_braindump: bad parameters");
  if (k < 1 || k > d || k % 2 == 0)
    throw std::invalid_argument("gen_braindump: fanout k must be odd and <= d");
  if (K > d) throw std::invalid_argument("gen_braindump: K exceeds wire count");
  BrainDumpModel m;
  m.d = d;
  m.r = r;
  m.K = K;
  m.k = k;
  m.q_labels = q_labels;
  m.seed = seed;
  Rng rng(seed, "braindump");
  std::vector<int> pool(d);
  for (int i = 0; i < d; ++i) pool[i] = i;
  m.gates.resize(r);
  for (int i = 0; i < r; ++i) {
    m.gates[i].reserve(d);
    for (int j = 0; j < d; ++j) m.gates[i].push_back(detail::random_junta(rng, pool, K));
  }
  m.weights.resize(r);
  for (int i = 0; i < r; ++i) {
    m.weights[i].reserve(q_labels);
    for (int j = 0; j < q_labels; ++j) m.weights[i].push_back(random_sign_vector(rng, d, k));
  }
  return m;
}

/// Label layout: label (i-1)*q_labels + j is the j-th majority of level i, so
/// the induced hierarchy's level-l set is the first l*q_labels labels.
inline Eigen::MatrixXd eval_labels(const BrainDumpModel& m, const Eigen::MatrixXd& x) {
  if (x.rows() != m.d || x.cols() != 1)
    throw std::invalid_argument("eval_labels: brain dump expects a single location");
  for (int i = 0; i < x.rows(); ++i)
    if (x(i, 0) != 1.0 && x(i, 0) != -1.0)
      throw std::invalid_argument("eval_labels: inputs must be +-1");
  const Eigen::MatrixXd G = m.circuit_levels(x.col(0));
  Eigen::MatrixXd y(m.n_labels(), 1);
  for (int i = 1; i <= m.r; ++i) {
    const Eigen::VectorXd wires = G.row(i).transpose();
    for (int j = 0; j < m.q_labels; ++j) {
      const double s = m.weights[i - 1][j].dot(wires);
      y((i - 1) * m.q_labels + j, 0) = s > 0.0 ? 1.0 : -1.0;  // |s| >= 1 for odd k
    }
  }
  return y;
}

/// alpha_{d,k} = (k/d) * C(k-1, (k-1)/2) / 2^{k-1}, evaluated exactly.
inline double alpha_dk(int d, int k) {
  if (k < 1 || k > d || k % 2 == 0)
    throw std::invalid_argument("alpha_dk: k must be odd with 1 <= k <= d");
  double binom = 1.0;  // C(k-1, (k-1)/2)
  const int m = (k - 1) / 2;
  for (int i = 1; i <= m; ++i) binom = binom * (m + i) / i;
  return (double(k) / d) * binom / std::pow(2.0, k - 1);
}

/// || (1/(q alpha)) W Psi(x) - x ||_inf for the level-i weight block, where
/// Psi(x) = sign(W^T x) componentwise.
inline double reconstruction_error(const BrainDumpModel& m, int level, const Eigen::VectorXd& x) {
  if (level < 1 || level > m.r) throw std::invalid_argument("reconstruction_error: bad level");
  if (x.size() != m.d) throw std::invalid_argument("reconstruction_error: dimension mismatch");
  const auto& ws = m.weights[level - 1];
  const double scale = 1.0 / (double(m.q_labels) * alpha_dk(m.d, m.k));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(m.d);
  for (const SignVector& w : ws) {
    const double psi = w.dot(x) > 0.0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < w.index.size(); ++j) acc[w.index[j]] += w.sign[j] * psi;
  }
  return (scale * acc - x).lpNorm<Eigen::Infinity>();
}

}  // namespace hierlearn
