#pragma once

#include <Eigen/Dense>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "hierlearn/braindump.hpp"
#include "hierlearn/dataset.hpp"
#include "hierlearn/hierarchy.hpp"
#include "hierlearn/poly.hpp"
#include "hierlearn/resnet.hpp"
#include "hierlearn/train.hpp"
#include "hierlearn/version.hpp"

// File formats and the run manifest. All floats go through JSON (shortest
// round-trip representation, lossless) or through std::to_chars for CSV, so
// saved artifacts reload bit-exactly and repeated runs are byte-identical.

namespace hierlearn {

using json = nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw IoError("failed to format double");
  return std::string(buf, ptr);
}

}  // namespace detail

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw IoError("corrupt JSON in " + path.string() + ": " + e.what());
  }
}

// ---- manifest ------------------------------------------------------------

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

/// Manifest: config echo, resolved seeds, library version, and a hash that
/// every other output file references.
inline json make_manifest(const json& config, std::uint64_t master_seed) {
  json m;
  m["version"] = kVersion;
  m["master_seed"] = master_seed;
  m["config"] = config;
  m["stream_seeds"] = {{"generator", stream_seed(master_seed, "hierarchy")},
                       {"dataset", stream_seed(master_seed, "dataset")},
                       {"init", stream_seed(master_seed, "init/layer1")},
                       {"verify", stream_seed(master_seed, "verify")}};
  m["manifest_hash"] = fnv1a_hex(m.dump());
  return m;
}

// ---- matrices ------------------------------------------------------------

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (long i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (long j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const long rows = static_cast<long>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const long cols = static_cast<long>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (static_cast<long>(j.at(i).size()) != cols) throw IoError("ragged matrix in JSON");
    for (long c = 0; c < cols; ++c) m(i, c) = j.at(i).at(c).get<double>();
  }
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v[i] = j.at(i).get<double>();
  return v;
}

// ---- proximity -----------------------------------------------------------

inline json proximity_to_json(const ProximityMap& p) {
  return {{"kind", p.kind}, {"locations", p.locations}, {"width", p.width}, {"slots", p.slots}};
}

inline ProximityMap proximity_from_json(const json& j) {
  ProximityMap p;
  p.kind = j.at("kind").get<std::string>();
  p.locations = j.at("locations").get<int>();
  p.width = j.at("width").get<int>();
  p.slots = j.at("slots").get<std::vector<std::vector<int>>>();
  p.validate();
  return p;
}

// ---- dataset ---------------------------------------------------------------

inline json dataset_to_json(const Dataset& ds, const std::string& manifest_hash = "", int r = 0) {
  json meta;
  meta["d"] = ds.d;
  meta["n"] = ds.n;
  meta["r"] = r;
  meta["G"] = ds.locations;
  meta["seed"] = ds.seed;
  meta["generator"] = ds.generator;
  json samples = json::array();
  for (long t = 0; t < ds.samples(); ++t) {
    json x = json::array(), y = json::array();
    for (int g = 0; g < ds.locations; ++g) {
      json xg = json::array(), yg = json::array();
      for (int i = 0; i < ds.d; ++i) xg.push_back(ds.X(long(g) * ds.d + i, t));
      for (int i = 0; i < ds.n; ++i) yg.push_back(ds.Y(long(g) * ds.n + i, t));
      x.push_back(std::move(xg));
      y.push_back(std::move(yg));
    }
    samples.push_back({{"x", std::move(x)}, {"y", std::move(y)}});
  }
  json out{{"meta", std::move(meta)}, {"samples", std::move(samples)}};
  if (!manifest_hash.empty()) out["manifest_hash"] = manifest_hash;
  return out;
}

inline Dataset dataset_from_json(const json& j) {
  Dataset ds;
  const json& meta = j.at("meta");
  ds.d = meta.at("d").get<int>();
  ds.n = meta.at("n").get<int>();
  ds.locations = meta.at("G").get<int>();
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.generator = meta.at("generator").get<std::string>();
  const json& samples = j.at("samples");
  const long m = static_cast<long>(samples.size());
  ds.X.resize(long(ds.d) * ds.locations, m);
  ds.Y.resize(long(ds.n) * ds.locations, m);
  for (long t = 0; t < m; ++t) {
    const json& x = samples.at(t).at("x");
    const json& y = samples.at(t).at("y");
    for (int g = 0; g < ds.locations; ++g) {
      for (int i = 0; i < ds.d; ++i) ds.X(long(g) * ds.d + i, t) = x.at(g).at(i).get<double>();
      for (int i = 0; i < ds.n; ++i) ds.Y(long(g) * ds.n + i, t) = y.at(g).at(i).get<double>();
    }
  }
  return ds;
}

// ---- hierarchy / brain dump ------------------------------------------------

inline json hierarchy_to_json(const Hierarchy& h, const std::string& manifest_hash = "") {
  json labels = json::array();
  for (const LabelDef& def : h.defs) {
    json l{{"level", def.level}, {"deps", def.junta.deps}, {"table", def.junta.table}};
    if (def.witness) {
      l["witness"] = {{"K", def.witness->K},
                      {"M", def.witness->M},
                      {"B", def.witness->B},
                      {"xi", def.witness->xi},
                      {"poly", poly_to_json(def.witness->witness)}};
    }
    labels.push_back(std::move(l));
  }
  json out{{"type", "junta-hierarchy"},
           {"d", h.d},
           {"n", h.n},
           {"r", h.r},
           {"seed", h.seed},
           {"proximity", proximity_to_json(h.prox)},
           {"level_counts", h.level_counts},
           {"labels", std::move(labels)}};
  if (!manifest_hash.empty()) out["manifest_hash"] = manifest_hash;
  return out;
}

inline Hierarchy hierarchy_from_json(const json& j) {
  if (j.at("type").get<std::string>() != "junta-hierarchy")
    throw IoError("hierarchy_from_json: wrong model type");
  Hierarchy h;
  h.d = j.at("d").get<int>();
  h.n = j.at("n").get<int>();
  h.r = j.at("r").get<int>();
  h.seed = j.at("seed").get<std::uint64_t>();
  h.prox = proximity_from_json(j.at("proximity"));
  h.level_counts = j.at("level_counts").get<std::vector<int>>();
  h.cumulative.clear();
  int cum = 0;
  for (int c : h.level_counts) h.cumulative.push_back(cum += c);
  for (const json& l : j.at("labels")) {
    LabelDef def;
    def.level = l.at("level").get<int>();
    def.junta.deps = l.at("deps").get<std::vector<int>>();
    def.junta.table = l.at("table").get<std::vector<int>>();
    if (l.contains("witness")) {
      PtfClaim claim;
      claim.K = l.at("witness").at("K").get<int>();
      claim.M = l.at("witness").at("M").get<double>();
      claim.B = l.at("witness").at("B").get<double>();
      claim.xi = l.at("witness").at("xi").get<double>();
      claim.witness = poly_from_json(l.at("witness").at("poly"));
      def.witness = std::move(claim);
    }
    h.defs.push_back(std::move(def));
  }
  return h;
}

inline json braindump_to_json(const BrainDumpModel& m, const std::string& manifest_hash = "") {
  json gates = json::array();
  for (const auto& level : m.gates) {
    json lv = json::array();
    for (const Junta& g : level) lv.push_back({{"deps", g.deps}, {"table", g.table}});
    gates.push_back(std::move(lv));
  }
  json weights = json::array();
  for (const auto& level : m.weights) {
    json lv = json::array();
    for (const SignVector& w : level) lv.push_back({{"index", w.index}, {"sign", w.sign}});
    weights.push_back(std::move(lv));
  }
  json out{{"type", "brain-dump"}, {"d", m.d},     {"r", m.r},
           {"K", m.K},             {"k", m.k},     {"q_labels", m.q_labels},
           {"seed", m.seed},       {"gates", gates}, {"weights", weights}};
  if (!manifest_hash.empty()) out["manifest_hash"] = manifest_hash;
  return out;
}

inline BrainDumpModel braindump_from_json(const json& j) {
  if (j.at("type").get<std::string>() != "brain-dump")
    throw IoError("braindump_from_json: wrong model type");
  BrainDumpModel m;
  m.d = j.at("d").get<int>();
  m.r = j.at("r").get<int>();
  m.K = j.at("K").get<int>();
  m.k = j.at("k").get<int>();
  m.q_labels = j.at("q_labels").get<int>();
  m.seed = j.at("seed").get<std::uint64_t>();
  for (const json& lv : j.at("gates")) {
    std::vector<Junta> level;
    for (const json& g : lv)
      level.push_back(
          Junta{g.at("deps").get<std::vector<int>>(), g.at("table").get<std::vector<int>>()});
    m.gates.push_back(std::move(level));
  }
  for (const json& lv : j.at("weights")) {
    std::vector<SignVector> level;
    for (const json& w : lv)
      level.push_back(SignVector{w.at("index").get<std::vector<int>>(),
                                 w.at("sign").get<std::vector<int>>()});
    m.weights.push_back(std::move(level));
  }
  return m;
}

// ---- checkpoint ------------------------------------------------------------

inline json checkpoint_to_json(const ResNetParams& p, const std::string& manifest_hash = "") {
  json layers = json::array();
  for (int k = 1; k <= p.trainable_layers(); ++k)
    layers.push_back({{"W1", matrix_to_json(p.W1[k - 1])},
                      {"b", vector_to_json(p.b[k - 1])},
                      {"W2", matrix_to_json(p.W2[k - 1])}});
  json out{{"d", p.d},
           {"n", p.n},
           {"q_width", p.q_width},
           {"D", p.D},
           {"beta", p.beta},
           {"seed", p.seed},
           {"orthogonal_mode", p.orthogonal_mode},
           {"activation", {{"name", p.activation.name}, {"K", p.activation.kdeg}}},
           {"proximity", proximity_to_json(p.prox)},
           {"layers", std::move(layers)},
           {"WD", matrix_to_json(p.WD)}};
  if (!manifest_hash.empty()) out["manifest_hash"] = manifest_hash;
  return out;
}

/// Loading re-validates the orthogonality invariant of W^D.
inline ResNetParams checkpoint_from_json(const json& j) {
  ResNetParams p;
  p.d = j.at("d").get<int>();
  p.n = j.at("n").get<int>();
  p.q_width = j.at("q_width").get<int>();
  p.D = j.at("D").get<int>();
  p.beta = j.at("beta").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.orthogonal_mode = j.at("orthogonal_mode").get<std::string>();
  p.activation = make_activation(j.at("activation").at("name").get<std::string>(),
                                 j.at("activation").at("K").get<int>());
  p.prox = proximity_from_json(j.at("proximity"));
  for (const json& l : j.at("layers")) {
    p.W1.push_back(matrix_from_json(l.at("W1")));
    p.b.push_back(vector_from_json(l.at("b")));
    p.W2.push_back(matrix_from_json(l.at("W2")));
  }
  if (static_cast<int>(p.W1.size()) != p.D - 1)
    throw IoError("checkpoint_from_json: layer count mismatch");
  p.WD = matrix_from_json(j.at("WD"));
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw IoError(std::string("checkpoint_from_json: ") + e.what());
  }
  return p;
}

// ---- trace -----------------------------------------------------------------

inline json trace_to_json(const TrainTrace& t, const std::string& manifest_hash = "") {
  json layers = json::array();
  for (const LayerRecord& layer : t.layers) {
    json labels = json::array();
    for (const LabelRecord& rec : layer.labels)
      labels.push_back({{"layer", rec.layer},
                        {"label", rec.label},
                        {"loss", rec.loss},
                        {"feasible", rec.feasible},
                        {"worst_margin", rec.worst_margin},
                        {"best_margin", rec.best_margin},
                        {"cert", rec.cert},
                        {"iters", rec.iters},
                        {"converged", rec.converged}});
    layers.push_back({{"layer", layer.layer},
                      {"err_zero", layer.err_zero},
                      {"err_half", layer.err_half},
                      {"labels", std::move(labels)}});
  }
  json out{{"eps_opt", t.eps_opt},
           {"gamma", t.gamma},
           {"theorem_eps_bound", t.theorem_eps_bound},
           {"eps_within_theorem_bound", t.eps_within_theorem_bound},
           {"layers", std::move(layers)}};
  if (!manifest_hash.empty()) out["manifest_hash"] = manifest_hash;
  return out;
}

inline TrainTrace trace_from_json(const json& j) {
  TrainTrace t;
  t.eps_opt = j.at("eps_opt").get<double>();
  t.gamma = j.at("gamma").get<double>();
  t.theorem_eps_bound = j.at("theorem_eps_bound").get<double>();
  t.eps_within_theorem_bound = j.at("eps_within_theorem_bound").get<bool>();
  for (const json& l : j.at("layers")) {
    LayerRecord layer;
    layer.layer = l.at("layer").get<int>();
    layer.err_zero = l.at("err_zero").get<double>();
    layer.err_half = l.at("err_half").get<double>();
    for (const json& rec : l.at("labels")) {
      LabelRecord r;
      r.layer = rec.at("layer").get<int>();
      r.label = rec.at("label").get<int>();
      r.loss = rec.at("loss").get<double>();
      r.feasible = rec.at("feasible").get<bool>();
      r.worst_margin = rec.at("worst_margin").get<double>();
      r.best_margin = rec.at("best_margin").get<double>();
      r.cert = rec.at("cert").get<double>();
      r.iters = rec.at("iters").get<long>();
      r.converged = rec.at("converged").get<bool>();
      layer.labels.push_back(r);
    }
    t.layers.push_back(std::move(layer));
  }
  return t;
}

/// CSV rendering of a trace: one row per (layer, label), RFC-style fields,
/// \n line endings, doubles in shortest round-trip form. The manifest hash
/// rides in a leading comment line.
inline std::string trace_to_csv(const TrainTrace& t, const std::string& manifest_hash = "") {
  std::string out;
  if (!manifest_hash.empty()) out += "# manifest=" + manifest_hash + "\n";
  out += "layer,label,loss,worst_margin,feasible,cert,iters\n";
  for (const LayerRecord& layer : t.layers)
    for (const LabelRecord& rec : layer.labels) {
      out += std::to_string(rec.layer);
      out += ',';
      out += std::to_string(rec.label);
      out += ',';
      out += detail::format_double(rec.loss);
      out += ',';
      out += detail::format_double(rec.worst_margin);
      out += ',';
      out += rec.feasible ? '1' : '0';
      out += ',';
      out += detail::format_double(rec.cert);
      out += ',';
      out += std::to_string(rec.iters);
      out += '\n';
    }
  return out;
}

}  // namespace hierlearn
