#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hierlearn/braindump.hpp"
#include "hierlearn/hierarchy.hpp"
#include "hierlearn/rng.hpp"

namespace hierlearn {

/// A labeled sample set. Columns are samples; per sample, the input is the
/// flattened d x |G| ensemble (location-major: entry g*d + i is coordinate i
/// at location g) and the labels flatten n x |G| the same way.
struct Dataset {
  int d = 0;
  int n = 0;
  int locations = 1;  // |G|
  Eigen::MatrixXd X;  // (d*|G|) x m
  Eigen::MatrixXd Y;  // (n*|G|) x m
  std::string generator;
  std::uint64_t seed = 0;

  long samples() const { return X.cols(); }

  Eigen::MatrixXd sample_input(long t) const {
    return Eigen::Map<const Eigen::MatrixXd>(X.col(t).data(), d, locations);
  }
  Eigen::MatrixXd sample_labels(long t) const {
    return Eigen::Map<const Eigen::MatrixXd>(Y.col(t).data(), n, locations);
  }
};

namespace detail {

template <typename Target>
Dataset sample_dataset_impl(const Target& target, int d, int n, int G, long m, std::uint64_t seed,
                            std::string generator) {
  if (m < 1) throw std::invalid_argument("sample_dataset: need m >= 1");
  Dataset ds;
  ds.d = d;
  ds.n = n;
  ds.locations = G;
  ds.generator = std::move(generator);
  ds.seed = seed;
  ds.X.resize(long(d) * G, m);
  ds.Y.resize(long(n) * G, m);
  Rng rng(seed, "dataset");
  Eigen::MatrixXd x(d, G);
  for (long t = 0; t < m; ++t) {
    for (int g = 0; g < G; ++g)
      for (int i = 0; i < d; ++i) x(i, g) = rng.sign();
    const Eigen::MatrixXd y = eval_labels(target, x);
    ds.X.col(t) = Eigen::Map<const Eigen::VectorXd>(x.data(), long(d) * G);
    ds.Y.col(t) = Eigen::Map<const Eigen::VectorXd>(y.data(), long(n) * G);
  }
  return ds;
}

}  // namespace detail

/// Inputs uniform on {+-1}^{d x |G|}, labels by target evaluation.
inline Dataset sample_dataset(const Hierarchy& h, long m, std::uint64_t seed) {
  return detail::sample_dataset_impl(h, h.d, h.n, h.prox.locations, m, seed, "junta-hierarchy");
}

inline Dataset sample_dataset(const BrainDumpModel& b, long m, std::uint64_t seed) {
  return detail::sample_dataset_impl(b, b.d, b.n_labels(), 1, m, seed, "brain-dump");
}

/// Checks every label's PTF certificate against the realized lower-level
/// label vectors of a dataset sampled from the hierarchy.
inline HierarchyValidation validate_hierarchy(const Dataset& ds, const Hierarchy& h,
                                              int perturbations = 16, std::uint64_t seed = 7) {
  if (ds.n != h.n || ds.d != h.d || ds.locations != h.prox.locations)
    throw std::invalid_argument("validate_hierarchy: dataset does not match hierarchy shape");
  HierarchyValidation out;
  if (ds.samples() == 0) {
    out.passes = true;
    out.vacuous = true;
    return out;
  }
  out.worst_margin_low = std::numeric_limits<double>::infinity();
  out.worst_margin_high = -std::numeric_limits<double>::infinity();
  const int G = ds.locations;
  for (int j = 0; j < h.n; ++j) {
    const LabelDef& def = h.defs[j];
    if (!def.witness) throw std::invalid_argument("validate_hierarchy: label missing witness");
    std::vector<Eigen::VectorXd> points;
    std::vector<int> labels;
    points.reserve(ds.samples() * G);
    for (long t = 0; t < ds.samples(); ++t) {
      const Eigen::MatrixXd x = ds.sample_input(t);
      const Eigen::MatrixXd y = ds.sample_labels(t);
      const Eigen::MatrixXd& base = def.level == 1 ? x : y;
      for (int g = 0; g < G; ++g) {
        points.push_back(proximity_concat(h.prox, base, g));
        labels.push_back(y(j, g) > 0.0 ? 1 : -1);
      }
    }
    const PtfReport rep = ptf_check(points, labels, *def.witness, perturbations, seed + j);
    out.worst_margin_low = std::min(out.worst_margin_low, rep.worst_margin_low);
    out.worst_margin_high = std::max(out.worst_margin_high, rep.worst_margin_high);
    if (!rep.holds) out.failed_labels.push_back(j);
  }
  out.passes = out.failed_labels.empty();
  return out;
}

}  // namespace hierlearn
