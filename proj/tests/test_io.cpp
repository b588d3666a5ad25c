#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "hierlearn/config.hpp"
#include "hierlearn/io.hpp"

using namespace hierlearn;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_config() {
  return nlohmann::json{
      {"generator",
       {{"kind", "junta-hierarchy"},
        {"d", 6},
        {"n", 4},
        {"r", 2},
        {"K", 2},
        {"m", 32},
        {"proximity", {{"kind", "singleton"}}}}},
      {"network", {{"q_width", 32}, {"D", 3}, {"beta", 0.8}}},
      {"loss", {{"B", 3.0}, {"xi", 0.125}}},
      {"train", {{"eps_opt", 1e-4}}},
      {"output", {{"dir", "out"}}},
      {"seed", 11}};
}

}  // namespace

TEST_CASE("dataset JSON round trip is exact", "[io]") {
  const ProximityMap w = make_proximity("window1d", 3, 1);
  const Hierarchy h = gen_junta_hierarchy(4, 5, 2, 2, w, {}, 3);
  const Dataset ds = sample_dataset(h, 25, 5);
  const Dataset back = dataset_from_json(dataset_to_json(ds, "abc", h.r));
  CHECK(back.X == ds.X);
  CHECK(back.Y == ds.Y);
  CHECK(back.d == ds.d);
  CHECK(back.n == ds.n);
  CHECK(back.locations == ds.locations);
  CHECK(back.generator == ds.generator);
}

TEST_CASE("hierarchy JSON round trip preserves witnesses and labels", "[io]") {
  const ProximityMap w = make_proximity("window1d", 3, 1);
  const Hierarchy h = gen_junta_hierarchy(4, 5, 2, 2, w, {}, 7);
  const Hierarchy back = hierarchy_from_json(hierarchy_to_json(h));
  CHECK(back.n == h.n);
  CHECK(back.cumulative == h.cumulative);
  REQUIRE(back.defs.size() == h.defs.size());
  for (std::size_t j = 0; j < h.defs.size(); ++j) {
    CHECK(back.defs[j].junta.deps == h.defs[j].junta.deps);
    CHECK(back.defs[j].junta.table == h.defs[j].junta.table);
    REQUIRE(back.defs[j].witness.has_value());
    CHECK(back.defs[j].witness->witness.terms == h.defs[j].witness->witness.terms);
    CHECK(back.defs[j].witness->xi == h.defs[j].witness->xi);
  }
  // evaluation agrees after the round trip
  Rng rng(9);
  Eigen::MatrixXd x(4, 3);
  for (int g = 0; g < 3; ++g)
    for (int i = 0; i < 4; ++i) x(i, g) = rng.sign();
  CHECK(eval_labels(back, x) == eval_labels(h, x));
}

TEST_CASE("brain dump JSON round trip", "[io]") {
  const BrainDumpModel m = gen_braindump(10, 2, 2, 3, 20, 13);
  const BrainDumpModel back = braindump_from_json(braindump_to_json(m));
  Rng rng(15);
  Eigen::MatrixXd x(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = rng.sign();
  CHECK(eval_labels(back, x) == eval_labels(m, x));
  CHECK(back.weights[1][3].index == m.weights[1][3].index);
}

TEST_CASE("checkpoint round trip preserves weights and validates the head", "[io]") {
  const ProximityMap s = make_proximity("singleton", 1, 0);
  ResNetParams p =
      init_network(5, 4, 16, 3, s, 0.7, "random", 21, make_activation("tanh", 2));
  Rng rng(23);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 16; ++j) p.W2[0](i, j) = rng.normal();

  const ResNetParams back = checkpoint_from_json(checkpoint_to_json(p, "h"));
  CHECK(back.W1[0] == p.W1[0]);
  CHECK(back.W2[0] == p.W2[0]);
  CHECK(back.b[1] == p.b[1]);
  CHECK(back.WD == p.WD);
  CHECK(back.beta == p.beta);

  // corrupting the head must be rejected on load
  nlohmann::json j = checkpoint_to_json(p);
  j["WD"][0][1] = 0.5;
  CHECK_THROWS_AS(checkpoint_from_json(j), IoError);
}

TEST_CASE("trace round trips through JSON and CSV is stable", "[io]") {
  TrainTrace t;
  t.eps_opt = 1e-4;
  t.gamma = 0.003;
  t.theorem_eps_bound = 1e-9;
  LayerRecord layer;
  layer.layer = 1;
  layer.err_zero = 0.25;
  layer.err_half = 0.5;
  LabelRecord rec;
  rec.layer = 1;
  rec.label = 0;
  rec.loss = 0.123456789123456789;
  rec.worst_margin = -0.03;
  rec.best_margin = 0.99;
  rec.cert = 4.9e-5;
  rec.iters = 17;
  rec.feasible = false;
  rec.converged = true;
  layer.labels.push_back(rec);
  t.layers.push_back(layer);

  const TrainTrace back = trace_from_json(trace_to_json(t, "deadbeef"));
  CHECK(back.layers[0].labels[0].loss == rec.loss);
  CHECK(back.layers[0].labels[0].cert == rec.cert);
  CHECK(back.layers[0].err_half == 0.5);
  CHECK(back.eps_opt == t.eps_opt);

  const std::string csv = trace_to_csv(t, "deadbeef");
  CHECK(csv == trace_to_csv(back, "deadbeef"));  // byte-identical
  CHECK(csv.find("# manifest=deadbeef\n") == 0);
  CHECK(csv.find("layer,label,loss,worst_margin,feasible,cert,iters\n") != std::string::npos);
  CHECK(csv.find("0.12345678912345") != std::string::npos);
}

TEST_CASE("manifest hash is deterministic and config-sensitive", "[io]") {
  const nlohmann::json cfg = base_config();
  const nlohmann::json m1 = make_manifest(cfg, 11);
  const nlohmann::json m2 = make_manifest(cfg, 11);
  CHECK(m1.at("manifest_hash") == m2.at("manifest_hash"));
  nlohmann::json cfg2 = cfg;
  cfg2["seed"] = 12;
  CHECK(make_manifest(cfg2, 11).at("manifest_hash") != m1.at("manifest_hash"));
  CHECK(make_manifest(cfg, 12).at("manifest_hash") != m1.at("manifest_hash"));
}

TEST_CASE("config parsing: defaults, auto beta, and named errors", "[io]") {
  const ExperimentConfig cfg = parse_config(base_config());
  CHECK(cfg.generator.kind == "junta-hierarchy");
  CHECK(cfg.network.beta == 0.8);
  CHECK_FALSE(cfg.network.beta_auto);
  CHECK(cfg.seed == 11);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.train.max_iters == 4000);  // default

  nlohmann::json missing = base_config();
  missing["network"].erase("q_width");
  try {
    parse_config(missing);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("network.q_width") != std::string::npos);
  }

  nlohmann::json autob = base_config();
  autob["network"]["beta"] = "auto";
  const ExperimentConfig acfg = parse_config(autob);
  CHECK(acfg.network.beta_auto);
  const ActivationSpec spec = make_activation("tanh", 2);
  const double resolved = acfg.resolve_beta(spec);
  CHECK(resolved >= 0.75);
  CHECK(resolved < 1.0);
  LossParams lp;
  lp.B = 3.0;
  lp.xi = 0.125;
  CHECK(resolved == beta_threshold(spec, lp.gamma() / 2.0));

  nlohmann::json badbeta = base_config();
  badbeta["network"]["beta"] = "automatic";
  CHECK_THROWS_AS(parse_config(badbeta), ConfigError);
  badbeta["network"]["beta"] = 1.5;
  CHECK_THROWS_AS(parse_config(badbeta), ConfigError);

  nlohmann::json badkind = base_config();
  badkind["generator"]["kind"] = "mystery";
  CHECK_THROWS_AS(parse_config(badkind), ConfigError);
}

TEST_CASE("json file round trip through disk", "[io]") {
  const fs::path dir = fs::temp_directory_path() / "hierlearn_io_test";
  fs::create_directories(dir);
  const fs::path file = dir / "x.json";
  const nlohmann::json j = base_config();
  write_json_file(file, j);
  CHECK(read_json_file(file) == j);
  write_text_file(file, "{not json");
  CHECK_THROWS_AS(read_json_file(file), IoError);
  CHECK_THROWS_AS(read_json_file(dir / "missing.json"), IoError);
  fs::remove_all(dir);
}
