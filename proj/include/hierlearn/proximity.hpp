#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

// Proximity mappings over a finite location set G: each location g gets an
// ordered list e(g) of w nearby locations with e_1(g) = g. E_g concatenates
// the per-location vectors in that order.

namespace hierlearn {

struct ProximityMap {
  std::string kind;                     // "singleton" | "window1d"
  int locations = 1;                    // |G|
  int width = 1;                        // w
  std::vector<std::vector<int>> slots;  // slots[g] = e(g), 0-based, slots[g][0] == g

  void validate() const {
    if (static_cast<int>(slots.size()) != locations)
      throw std::invalid_argument("ProximityMap: slot table size != |G|");
    for (int g = 0; g < locations; ++g) {
      if (static_cast<int>(slots[g].size()) != width)
        throw std::invalid_argument("ProximityMap: slot row width mismatch");
      if (slots[g][0] != g) throw std::invalid_argument("ProximityMap: e_1(g) != g");
      for (int v : slots[g])
        if (v < 0 || v >= locations)
          throw std::invalid_argument("ProximityMap: slot index out of range");
    }
  }
};

/// singleton: |G| = 1, w = 1. window1d: G = [T], w = 2*w_half + 1, and
/// e(g) = (g, g-1, ..., g-w_half, g+1, ..., g+w_half) with out-of-range
/// neighbours clamped to the nearest valid location.
inline ProximityMap make_proximity(const std::string& kind, int T, int w_half) {
  if (T < 1 || w_half < 0) throw std::invalid_argument("make_proximity: bad parameters");
  ProximityMap p;
  p.kind = kind;
  if (kind == "singleton") {
    p.locations = 1;
    p.width = 1;
    p.slots = {{0}};
  } else if (kind == "window1d") {
    p.locations = T;
    p.width = 2 * w_half + 1;
    p.slots.resize(T);
    auto clamp = [T](int g) { return std::min(std::max(g, 0), T - 1); };
    for (int g = 0; g < T; ++g) {
      p.slots[g].push_back(g);
      for (int off = 1; off <= w_half; ++off) p.slots[g].push_back(clamp(g - off));
      for (int off = 1; off <= w_half; ++off) p.slots[g].push_back(clamp(g + off));
    }
  } else {
    throw std::invalid_argument("make_proximity: unknown kind '" + kind + "'");
  }
  p.validate();
  return p;
}

/// E_g: concatenation of the columns of `ensemble` (one column per location)
/// in e(g)-order. For the singleton map this is the identity embedding.
inline Eigen::VectorXd proximity_concat(const ProximityMap& prox, const Eigen::MatrixXd& ensemble,
                                        int g) {
  if (ensemble.cols() != prox.locations)
    throw std::invalid_argument("proximity_concat: ensemble column count != |G|");
  if (g < 0 || g >= prox.locations) throw std::invalid_argument("proximity_concat: bad location");
  const int rows = static_cast<int>(ensemble.rows());
  Eigen::VectorXd out(static_cast<long>(rows) * prox.width);
  for (int s = 0; s < prox.width; ++s) out.segment(long(s) * rows, rows) = ensemble.col(prox.slots[g][s]);
  return out;
}

/// E applied to every location: column g holds E_g. Output is (rows*w) x |G|.
inline Eigen::MatrixXd proximity_concat_all(const ProximityMap& prox,
                                            const Eigen::MatrixXd& ensemble) {
  const int rows = static_cast<int>(ensemble.rows());
  Eigen::MatrixXd out(static_cast<long>(rows) * prox.width, prox.locations);
  for (int g = 0; g < prox.locations; ++g)
    for (int s = 0; s < prox.width; ++s)
      out.col(g).segment(long(s) * rows, rows) = ensemble.col(prox.slots[g][s]);
  return out;
}

}  // namespace hierlearn
