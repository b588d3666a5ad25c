#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include <json.hpp>

// Sparse multivariate polynomials keyed by exponent multi-index, plus the
// boolean-cube constructions built on them (multilinear extensions, linear
// composition, Lipschitz/sup bounds from the coefficient norm).

namespace hierlearn {

struct SparsePoly {
  int dim = 0;
  // exponent multi-index (length dim, entries >= 0) -> coefficient;
  // zero coefficients are never stored, keys are kept in lexicographic order.
  std::map<std::vector<int>, double> terms;

  static SparsePoly zero(int dim) { return SparsePoly{dim, {}}; }

  static SparsePoly constant(int dim, double c) {
    SparsePoly p{dim, {}};
    if (c != 0.0) p.terms[std::vector<int>(dim, 0)] = c;
    return p;
  }

  /// Single monomial c * x^alpha.
  static SparsePoly monomial(int dim, const std::vector<int>& alpha, double c) {
    SparsePoly p{dim, {}};
    p.add_term(alpha, c);
    return p;
  }

  void add_term(const std::vector<int>& alpha, double c) {
    if (static_cast<int>(alpha.size()) != dim)
      throw std::invalid_argument("SparsePoly: multi-index length != dim");
    for (int e : alpha)
      if (e < 0) throw std::invalid_argument("SparsePoly: negative exponent");
    if (c == 0.0) return;
    auto [it, inserted] = terms.try_emplace(alpha, c);
    if (!inserted) {
      it->second += c;
      if (it->second == 0.0) terms.erase(it);
    }
  }

  int degree() const {
    int deg = 0;
    for (const auto& [alpha, c] : terms) {
      int d = 0;
      for (int e : alpha) d += e;
      deg = std::max(deg, d);
    }
    return deg;
  }

  SparsePoly scaled(double c) const {
    SparsePoly out{dim, {}};
    if (c != 0.0)
      for (const auto& [alpha, v] : terms) out.terms[alpha] = c * v;
    return out;
  }

  bool is_multilinear() const {
    for (const auto& [alpha, c] : terms)
      for (int e : alpha)
        if (e > 1) return false;
    return true;
  }

  /// Variables with a nonzero exponent in some term.
  std::vector<int> support() const {
    std::vector<char> seen(dim, 0);
    for (const auto& [alpha, c] : terms)
      for (int i = 0; i < dim; ++i)
        if (alpha[i] > 0) seen[i] = 1;
    std::vector<int> out;
    for (int i = 0; i < dim; ++i)
      if (seen[i]) out.push_back(i);
    return out;
  }
};

inline double poly_eval(const SparsePoly& p, const Eigen::VectorXd& x) {
  if (static_cast<int>(x.size()) != p.dim)
    throw std::invalid_argument("poly_eval: dimension mismatch");
  double acc = 0.0;
  for (const auto& [alpha, c] : p.terms) {
    double term = c;
    for (int i = 0; i < p.dim; ++i)
      for (int e = 0; e < alpha[i]; ++e) term *= x[i];
    acc += term;
  }
  return acc;
}

/// ||p||_co, the Euclidean norm of the coefficient vector.
inline double coeff_norm(const SparsePoly& p) {
  double acc = 0.0;
  for (const auto& [alpha, c] : p.terms) acc += c * c;
  return std::sqrt(acc);
}

/// Multilinear (Fourier) extension of a K-variable boolean function given as
/// a truth table over {-1,+1}^K, embedded into n variables via coord_map.
/// table[t] is the value at the corner whose j-th coordinate is +1 iff bit j
/// of t is set. The result agrees with the table on all corners and has
/// coefficient norm exactly 1 (Parseval on the cube).
inline SparsePoly multilinear_extension(const std::vector<int>& table, int embed_dim,
                                        const std::vector<int>& coord_map) {
  const int K = static_cast<int>(coord_map.size());
  if (K > 20) throw std::invalid_argument("multilinear_extension: K too large");
  if (static_cast<std::size_t>(1) << K != table.size())
    throw std::invalid_argument("multilinear_extension: table length != 2^K");
  for (int v : table)
    if (v != 1 && v != -1) throw std::invalid_argument("multilinear_extension: table entry not +-1");
  std::vector<char> used(embed_dim, 0);
  for (int i : coord_map) {
    if (i < 0 || i >= embed_dim)
      throw std::invalid_argument("multilinear_extension: coord_map index out of range");
    if (used[i]) throw std::invalid_argument("multilinear_extension: coord_map not injective");
    used[i] = 1;
  }
  SparsePoly p = SparsePoly::zero(embed_dim);
  const double inv = 1.0 / double(std::size_t(1) << K);
  for (std::uint32_t subset = 0; subset < (1u << K); ++subset) {
    double fhat = 0.0;
    for (std::uint32_t t = 0; t < (1u << K); ++t) {
      // chi_subset(z) = prod_{j in subset} z_j with z_j = +-1 from bits of t
      const int par = __builtin_popcount(~t & subset) & 1;
      fhat += table[t] * (par ? -1.0 : 1.0);
    }
    fhat *= inv;
    if (fhat == 0.0) continue;
    std::vector<int> alpha(embed_dim, 0);
    for (int j = 0; j < K; ++j)
      if (subset & (1u << j)) alpha[coord_map[j]] = 1;
    p.add_term(alpha, fhat);
  }
  return p;
}

struct LipSupBounds {
  double lipschitz = 0.0;  // Lipschitz constant bound w.r.t. ||.||_inf on [-1,1]^n
  double sup = 0.0;        // bound on |p| over [-1,1]^n
};

/// L = (n+1)^{(K+1)/2} K ||p||_co  and  Bsup = (n+1)^{K/2} ||p||_co,
/// with K = degree(p) and n = p.dim.
inline LipSupBounds lip_sup_bounds(const SparsePoly& p) {
  const double K = p.degree();
  const double n = p.dim;
  const double nc = coeff_norm(p);
  LipSupBounds out;
  out.lipschitz = std::pow(n + 1.0, 0.5 * (K + 1.0)) * K * nc;
  out.sup = std::pow(n + 1.0, 0.5 * K) * nc;
  return out;
}

/// Exact expansion of q(x) = p(A x). Throws if the expanded term count would
/// exceed term_cap.
inline SparsePoly compose_linear(const SparsePoly& p, const Eigen::MatrixXd& A,
                                 std::size_t term_cap = 1000000) {
  if (A.rows() != p.dim)
    throw std::invalid_argument("compose_linear: A row count != polynomial dimension");
  const int m = static_cast<int>(A.cols());

  // Expand each monomial as a product of linear forms over the new variables.
  std::map<std::vector<int>, double> acc;
  for (const auto& [alpha, c] : p.terms) {
    std::map<std::vector<int>, double> cur;
    cur[std::vector<int>(m, 0)] = c;
    for (int i = 0; i < p.dim; ++i) {
      for (int rep = 0; rep < alpha[i]; ++rep) {
        std::map<std::vector<int>, double> next;
        for (const auto& [a, v] : cur) {
          for (int jj = 0; jj < m; ++jj) {
            const double w = A(i, jj);
            if (w == 0.0) continue;
            std::vector<int> na = a;
            ++na[jj];
            next[na] += v * w;
          }
        }
        if (next.size() > term_cap)
          throw std::runtime_error("compose_linear: expanded term count exceeds cap");
        cur = std::move(next);
      }
    }
    for (const auto& [a, v] : cur) {
      acc[a] += v;
      if (acc.size() > term_cap)
        throw std::runtime_error("compose_linear: expanded term count exceeds cap");
    }
  }
  SparsePoly q = SparsePoly::zero(m);
  for (const auto& [a, v] : acc)
    if (v != 0.0) q.terms[a] = v;
  return q;
}

/// JSON form: {dim, terms: [{alpha: [...], coeff}]}, canonical ordering by
/// lexicographic alpha (the map order).
inline nlohmann::json poly_to_json(const SparsePoly& p) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [alpha, c] : p.terms) terms.push_back({{"alpha", alpha}, {"coeff", c}});
  return {{"dim", p.dim}, {"terms", terms}};
}

inline SparsePoly poly_from_json(const nlohmann::json& j) {
  SparsePoly p = SparsePoly::zero(j.at("dim").get<int>());
  for (const auto& t : j.at("terms"))
    p.add_term(t.at("alpha").get<std::vector<int>>(), t.at("coeff").get<double>());
  return p;
}

}  // namespace hierlearn
