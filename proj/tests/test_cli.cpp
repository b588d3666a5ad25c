#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "hierlearn/io.hpp"

// Drives the built CLI binary (path passed as the test argument) through the
// gen -> train -> report pipeline on a small config.

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_cli_path;

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + g_cli_path + "\" " + args + " > /dev/null 2> /tmp/cli_err.txt";
  return std::system(cmd.c_str());
}

std::string read_file(const fs::path& p) { return hierlearn::read_text_file(p); }

json small_config(const std::string& out_dir) {
  return json{{"generator",
               {{"kind", "junta-hierarchy"},
                {"d", 6},
                {"n", 4},
                {"r", 2},
                {"K", 2},
                {"m", 64},
                {"proximity", {{"kind", "singleton"}}}}},
              {"network", {{"q_width", 64}, {"D", 3}, {"beta", 0.6}}},
              {"loss", {{"B", 3.0}, {"xi", 0.125}}},
              {"train", {{"eps_opt", 1e-4}, {"max_iters", 2000}}},
              {"output", {{"dir", out_dir}}},
              {"seed", 7}};
}

}  // namespace

TEST_CASE("gen-train-report pipeline produces the expected artifacts", "[cli]") {
  const fs::path dir = fs::temp_directory_path() / "hierlearn_cli_pipeline";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "config.json";
  hierlearn::write_json_file(cfg_path, small_config((dir / "out").string()));

  REQUIRE(run_cli("gen --config " + cfg_path.string()) == 0);
  REQUIRE(fs::exists(dir / "out" / "dataset.json"));
  REQUIRE(fs::exists(dir / "out" / "model.json"));
  REQUIRE(fs::exists(dir / "out" / "manifest.json"));

  REQUIRE(run_cli("train --config " + cfg_path.string()) == 0);
  REQUIRE(fs::exists(dir / "out" / "checkpoint.json"));
  REQUIRE(fs::exists(dir / "out" / "trace.csv"));
  REQUIRE(fs::exists(dir / "out" / "trace.json"));

  REQUIRE(run_cli("report --config " + cfg_path.string()) == 0);
  REQUIRE(fs::exists(dir / "out" / "report.txt"));
  const std::string report = read_file(dir / "out" / "report.txt");
  CHECK(report.find("acquisition layer") != std::string::npos);

  // outputs reference the manifest hash
  const json manifest = hierlearn::read_json_file(dir / "out" / "manifest.json");
  const std::string hash = manifest.at("manifest_hash");
  CHECK(read_file(dir / "out" / "trace.csv").find(hash) != std::string::npos);
  const json ckpt = hierlearn::read_json_file(dir / "out" / "checkpoint.json");
  CHECK(ckpt.at("manifest_hash") == hash);
  const json traj = hierlearn::read_json_file(dir / "out" / "trace.json");
  CHECK(traj.at("manifest_hash") == hash);

  // loaded checkpoint passes the orthogonality validation
  hierlearn::ResNetParams params = hierlearn::checkpoint_from_json(ckpt);
  CHECK(params.orthogonality_defect() <= 1e-8);

  fs::remove_all(dir);
}

TEST_CASE("same config and seed reproduce byte-identical traces", "[cli]") {
  const fs::path dir = fs::temp_directory_path() / "hierlearn_cli_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "config.json";
  hierlearn::write_json_file(cfg_path, small_config((dir / "a").string()));

  REQUIRE(run_cli("gen --config " + cfg_path.string()) == 0);
  REQUIRE(run_cli("train --config " + cfg_path.string() + " --threads 1") == 0);
  const std::string trace_a = read_file(dir / "a" / "trace.csv");

  // second run into a different directory via --out, more threads
  REQUIRE(run_cli("gen --config " + cfg_path.string() + " --out " + (dir / "b").string()) == 0);
  REQUIRE(run_cli("train --config " + cfg_path.string() + " --out " + (dir / "b").string() +
                  " --threads 4") == 0);
  const std::string trace_b = read_file(dir / "b" / "trace.csv");
  CHECK(trace_a == trace_b);

  // a different seed changes the trace
  REQUIRE(run_cli("gen --config " + cfg_path.string() + " --out " + (dir / "c").string() +
                  " --seed 8") == 0);
  REQUIRE(run_cli("train --config " + cfg_path.string() + " --out " + (dir / "c").string() +
                  " --seed 8") == 0);
  CHECK(read_file(dir / "c" / "trace.csv") != trace_a);

  fs::remove_all(dir);
}

TEST_CASE("schema errors name the missing field and exit nonzero", "[cli]") {
  const fs::path dir = fs::temp_directory_path() / "hierlearn_cli_schema";
  fs::remove_all(dir);
  fs::create_directories(dir);
  json cfg = small_config((dir / "out").string());
  cfg["generator"].erase("d");
  const fs::path cfg_path = dir / "config.json";
  hierlearn::write_json_file(cfg_path, cfg);
  CHECK(run_cli("gen --config " + cfg_path.string()) != 0);
  const std::string err = read_file("/tmp/cli_err.txt");
  CHECK(err.find("generator.d") != std::string::npos);
  CHECK(err.find("\"error\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("verify subcommands run clean", "[cli]") {
  CHECK(run_cli("verify-loss") == 0);
  CHECK(run_cli("verify-braindump") == 0);
}

int main(int argc, char** argv) {
  if (argc > 1) {
    g_cli_path = argv[argc - 1];
    --argc;
  }
  return Catch::Session().run(argc, argv);
}
