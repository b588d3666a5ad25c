#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "hierlearn/hermite.hpp"
#include "hierlearn/proximity.hpp"
#include "hierlearn/rng.hpp"

// The residual architecture: layer 1 maps the input ensemble through
// W^1_2 sigma(W^1_1 E(x) + b^1); layers 2..D-1 add the same form residually
// on the n-dimensional label stream; the head is a fixed orthogonal W^D.

namespace hierlearn {

struct XavierPair {
  Eigen::MatrixXd W;  // entries iid N(0, (1-beta^2)/fan_in)
  Eigen::VectorXd b;  // entries iid N(0, beta^2)
};

inline XavierPair xavier_pair(int q, int fan_in, double beta, Rng& rng) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("xavier_pair: beta not in [0,1]");
  XavierPair p;
  p.W.resize(q, fan_in);
  p.b.resize(q);
  const double wsd = std::sqrt((1.0 - beta * beta) / fan_in);
  for (int j = 0; j < fan_in; ++j)
    for (int i = 0; i < q; ++i) p.W(i, j) = wsd * rng.normal();
  for (int i = 0; i < q; ++i) p.b[i] = beta * rng.normal();
  return p;
}

struct ResNetParams {
  int d = 0, n = 0, q_width = 0, D = 2;
  ProximityMap prox;
  double beta = 0.9;
  ActivationSpec activation;
  std::uint64_t seed = 0;
  std::string orthogonal_mode = "random";

  // index k-1 holds layer k = 1..D-1
  std::vector<Eigen::MatrixXd> W1;
  std::vector<Eigen::VectorXd> b;
  std::vector<Eigen::MatrixXd> W2;
  Eigen::MatrixXd WD;  // n x n orthogonal, never trained

  int trainable_layers() const { return D - 1; }

  int layer_fan_in(int k) const { return (k == 1 ? d : n) * prox.width; }

  double orthogonality_defect() const {
    return (WD * WD.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  }

  void validate() const {
    if (orthogonality_defect() > 1e-8)
      throw std::runtime_error("ResNetParams: W^D is not orthogonal");
    for (int k = 1; k <= trainable_layers(); ++k) {
      if (W1[k - 1].rows() != q_width || W1[k - 1].cols() != layer_fan_in(k) ||
          b[k - 1].size() != q_width || W2[k - 1].rows() != n || W2[k - 1].cols() != q_width)
        throw std::runtime_error("ResNetParams: layer shape mismatch");
    }
  }
};

inline Eigen::MatrixXd random_orthogonal(int n, Rng& rng) {
  Eigen::MatrixXd A(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i)
    if (R(i, i) < 0.0) Q.col(i) = -Q.col(i);  // positive-diagonal convention
  return Q;
}

/// Fresh network: beta-Xavier (W^k_1, b^k) pairs, all W^k_2 zero (so the
/// untrained network outputs identically 0), W^D random orthogonal or the
/// identity. Deterministic in the seed.
inline ResNetParams init_network(int d, int n, int q_width, int D, const ProximityMap& prox,
                                 double beta, const std::string& orthogonal_mode,
                                 std::uint64_t seed, ActivationSpec activation) {
  if (D < 2 || q_width < 1 || d < 1 || n < 1)
    throw std::invalid_argument("init_network: invalid dimensions");
  ResNetParams p;
  p.d = d;
  p.n = n;
  p.q_width = q_width;
  p.D = D;
  p.prox = prox;
  p.beta = beta;
  p.activation = std::move(activation);
  p.seed = seed;
  p.orthogonal_mode = orthogonal_mode;
  for (int k = 1; k <= p.trainable_layers(); ++k) {
    Rng rng(seed, "init/layer" + std::to_string(k));
    XavierPair xp = xavier_pair(q_width, p.layer_fan_in(k), beta, rng);
    p.W1.push_back(std::move(xp.W));
    p.b.push_back(std::move(xp.b));
    p.W2.push_back(Eigen::MatrixXd::Zero(n, q_width));
  }
  if (orthogonal_mode == "identity") {
    p.WD = Eigen::MatrixXd::Identity(n, n);
  } else if (orthogonal_mode == "random") {
    Rng rng(seed, "init/WD");
    p.WD = random_orthogonal(n, rng);
  } else {
    throw std::invalid_argument("init_network: unknown orthogonal_mode '" + orthogonal_mode + "'");
  }
  p.validate();
  return p;
}

struct ForwardResult {
  Eigen::MatrixXd gamma;  // n x |G| for k >= 1; the d x |G| identity for k = 0
  Eigen::MatrixXd f_hat;  // W^D gamma (equal to gamma at k = 0)
};

namespace detail {

inline Eigen::MatrixXd apply_sigma(const ActivationSpec& act, Eigen::MatrixXd z) {
  for (long j = 0; j < z.cols(); ++j)
    for (long i = 0; i < z.rows(); ++i) z(i, j) = act.evaluate(z(i, j));
  return z;
}

}  // namespace detail

/// Partial forward pass through layers 1..upto. Layers whose entry in
/// trained_mask (1-based, optional) is false are treated as identity.
inline ForwardResult forward(const ResNetParams& p, const Eigen::MatrixXd& x, int upto,
                             const std::vector<bool>& trained_mask = {}) {
  if (x.rows() != p.d || x.cols() != p.prox.locations)
    throw std::invalid_argument("forward: input shape mismatch");
  if (upto < 0 || upto > p.trainable_layers())
    throw std::invalid_argument("forward: layer index out of range");
  if (!trained_mask.empty() && static_cast<int>(trained_mask.size()) != p.trainable_layers() + 1)
    throw std::invalid_argument("forward: trained_mask must have D-1 entries (index 0 unused)");
  ForwardResult out;
  if (upto == 0) {
    out.gamma = x;
    out.f_hat = x;
    return out;
  }
  const auto active = [&](int k) { return trained_mask.empty() || trained_mask[k]; };
  Eigen::MatrixXd gamma;
  {
    const Eigen::MatrixXd e = proximity_concat_all(p.prox, x);
    const Eigen::MatrixXd phi =
        detail::apply_sigma(p.activation, (p.W1[0] * e).colwise() + p.b[0]);
    gamma = active(1) ? (p.W2[0] * phi).eval() : Eigen::MatrixXd::Zero(p.n, p.prox.locations);
  }
  for (int k = 2; k <= upto; ++k) {
    if (!active(k)) continue;
    const Eigen::MatrixXd e = proximity_concat_all(p.prox, gamma);
    const Eigen::MatrixXd phi =
        detail::apply_sigma(p.activation, (p.W1[k - 1] * e).colwise() + p.b[k - 1]);
    gamma += p.W2[k - 1] * phi;
  }
  out.gamma = std::move(gamma);
  out.f_hat = p.WD * out.gamma;
  return out;
}

/// Random-feature map of layer k: Phi^{k-1}(x) = sigma(W^k_1 E(Gamma^{k-1}(x)) + b^k),
/// one q-dimensional column per location.
inline Eigen::MatrixXd features(const ResNetParams& p, int k, const Eigen::MatrixXd& x) {
  if (k < 1 || k > p.trainable_layers()) throw std::invalid_argument("features: bad layer index");
  Eigen::MatrixXd base;
  if (k == 1) {
    if (x.rows() != p.d) throw std::invalid_argument("features: input shape mismatch");
    base = x;
  } else {
    base = forward(p, x, k - 1).gamma;
  }
  const Eigen::MatrixXd e = proximity_concat_all(p.prox, base);
  return detail::apply_sigma(p.activation, (p.W1[k - 1] * e).colwise() + p.b[k - 1]);
}

}  // namespace hierlearn
