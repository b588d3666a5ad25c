#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hierlearn/hermite.hpp"
#include "hierlearn/loss.hpp"
#include "hierlearn/proximity.hpp"
#include "hierlearn/train.hpp"

// Experiment configuration: one structured JSON file, schema-checked with
// errors that name the offending field. Seeds fan out from a single master
// seed; "auto" beta resolves through beta_threshold before training and the
// resolved value is persisted with the run.

namespace hierlearn {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const std::string& section,
                                           const std::string& key) {
  if (!j.contains(key)) throw ConfigError("missing config field: " + section + "." + key);
  return j.at(key);
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& section, const std::string& key) {
  try {
    return require_field(j, section, key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field has wrong type: " + section + "." + key);
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& section, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, section, key);
}

}  // namespace detail

struct GeneratorConfig {
  std::string kind;  // "junta-hierarchy" | "brain-dump"
  int d = 0;
  int n = 0;  // labels (junta hierarchy); brain dump derives n = r * q_labels
  int r = 1;
  int K = 1;
  int k = 1;          // majority fanout (brain dump)
  int q_labels = 1;   // labels per level (brain dump)
  long m = 0;         // samples
  std::string proximity_kind = "singleton";
  int proximity_T = 1;
  int proximity_w_half = 0;
  std::vector<int> level_sizes;  // optional; empty = equal split
};

struct NetworkConfig {
  int q_width = 0;
  int D = 2;
  bool beta_auto = false;
  double beta = 0.9;
  std::string orthogonal_mode = "random";
  std::string activation = "tanh";
};

struct LossConfig {
  double B = 1.0;
  double xi = 1.0;
  double barrier = 0.0;  // 0 = default floor
};

struct TrainSection {
  double eps_opt = 1e-4;
  long max_iters = 4000;
  bool parallel = true;
};

struct ExperimentConfig {
  GeneratorConfig generator;
  NetworkConfig network;
  LossConfig loss;
  TrainSection train;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  nlohmann::json raw;  // canonical echo of the parsed file

  int label_count() const {
    return generator.kind == "brain-dump" ? generator.r * generator.q_labels : generator.n;
  }

  ProximityMap proximity() const {
    return make_proximity(generator.proximity_kind, generator.proximity_T,
                          generator.proximity_w_half);
  }

  LossParams loss_params(long m, int G) const {
    LossParams lp;
    lp.B = loss.B;
    lp.xi = loss.xi;
    lp.m = m;
    lp.G_size = G;
    lp.barrier = loss.barrier;
    return lp;
  }

  TrainConfig train_config(int threads) const {
    TrainConfig tc;
    tc.eps_opt = train.eps_opt;
    tc.max_iters = train.max_iters;
    tc.parallel_labels = train.parallel;
    tc.threads = threads;
    return tc;
  }

  /// "auto" turns into beta_threshold(gamma/2) for the configured loss.
  double resolve_beta(const ActivationSpec& spec) const {
    if (!network.beta_auto) return network.beta;
    LossParams lp;
    lp.B = loss.B;
    lp.xi = loss.xi;
    return beta_threshold(spec, lp.gamma() / 2.0);
  }
};

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  using detail::get_field;
  using detail::get_or;
  ExperimentConfig cfg;
  cfg.raw = j;

  const auto& gen = detail::require_field(j, "", "generator");
  cfg.generator.kind = get_field<std::string>(gen, "generator", "kind");
  if (cfg.generator.kind != "junta-hierarchy" && cfg.generator.kind != "brain-dump")
    throw ConfigError("generator.kind must be 'junta-hierarchy' or 'brain-dump'");
  cfg.generator.d = get_field<int>(gen, "generator", "d");
  cfg.generator.r = get_field<int>(gen, "generator", "r");
  cfg.generator.K = get_field<int>(gen, "generator", "K");
  cfg.generator.m = get_field<long>(gen, "generator", "m");
  if (cfg.generator.kind == "brain-dump") {
    cfg.generator.k = get_field<int>(gen, "generator", "k");
    cfg.generator.q_labels = get_field<int>(gen, "generator", "q_labels");
    cfg.generator.n = cfg.generator.r * cfg.generator.q_labels;
  } else {
    cfg.generator.n = get_field<int>(gen, "generator", "n");
    cfg.generator.level_sizes = get_or<std::vector<int>>(gen, "generator", "level_sizes", {});
  }
  if (gen.contains("proximity")) {
    const auto& prox = gen.at("proximity");
    cfg.generator.proximity_kind = get_field<std::string>(prox, "generator.proximity", "kind");
    cfg.generator.proximity_T = get_or<int>(prox, "generator.proximity", "T", 1);
    cfg.generator.proximity_w_half = get_or<int>(prox, "generator.proximity", "w_half", 0);
  }

  const auto& net = detail::require_field(j, "", "network");
  cfg.network.q_width = get_field<int>(net, "network", "q_width");
  cfg.network.D = get_field<int>(net, "network", "D");
  const auto& beta = detail::require_field(net, "network", "beta");
  if (beta.is_string()) {
    if (beta.get<std::string>() != "auto")
      throw ConfigError("network.beta must be a number or \"auto\"");
    cfg.network.beta_auto = true;
  } else if (beta.is_number()) {
    cfg.network.beta = beta.get<double>();
    if (!(cfg.network.beta >= 0.0 && cfg.network.beta <= 1.0))
      throw ConfigError("network.beta must lie in [0,1]");
  } else {
    throw ConfigError("network.beta must be a number or \"auto\"");
  }
  cfg.network.orthogonal_mode = get_or<std::string>(net, "network", "orthogonal_mode", "random");
  cfg.network.activation = get_or<std::string>(net, "network", "activation", "tanh");

  const auto& loss = detail::require_field(j, "", "loss");
  cfg.loss.B = get_field<double>(loss, "loss", "B");
  cfg.loss.xi = get_field<double>(loss, "loss", "xi");
  cfg.loss.barrier = get_or<double>(loss, "loss", "barrier", 0.0);

  const auto& train = detail::require_field(j, "", "train");
  cfg.train.eps_opt = get_field<double>(train, "train", "eps_opt");
  cfg.train.max_iters = get_or<long>(train, "train", "max_iters", 4000);
  cfg.train.parallel = get_or<bool>(train, "train", "parallel", true);

  if (j.contains("output")) cfg.out_dir = get_field<std::string>(j.at("output"), "output", "dir");
  cfg.seed = get_or<std::uint64_t>(j, "", "seed", 1);
  return cfg;
}

}  // namespace hierlearn
