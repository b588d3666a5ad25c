// Experiment CLI: dataset/model generation, layerwise training, verification
// suites, and report rendering. Every run echoes its configuration and
// resolved seeds into a manifest; outputs reference the manifest hash, and a
// fixed (config, seed) pair reproduces byte-identical artifacts.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "hierlearn/hierlearn.hpp"

namespace fs = std::filesystem;
using namespace hierlearn;
using nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool has_seed_override = false;
  int threads = 0;  // 0 = hardware default
};

ExperimentConfig load_config(const CliOptions& opt) {
  if (opt.config_path.empty()) throw ConfigError("missing --config");
  ExperimentConfig cfg = parse_config(read_json_file(opt.config_path));
  if (opt.has_seed_override) {
    cfg.seed = opt.seed_override;
    cfg.raw["seed"] = opt.seed_override;
  }
  if (const char* env = std::getenv("HIERLEARN_OUT"); env && *env) cfg.out_dir = env;
  if (!opt.out_override.empty()) cfg.out_dir = opt.out_override;
  return cfg;
}

json write_manifest(const ExperimentConfig& cfg, const fs::path& dir) {
  json manifest = make_manifest(cfg.raw, cfg.seed);
  fs::create_directories(dir);
  write_json_file(dir / "manifest.json", manifest);
  return manifest;
}

int run_gen(const CliOptions& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const fs::path dir(cfg.out_dir);
  const json manifest = write_manifest(cfg, dir);
  const std::string hash = manifest.at("manifest_hash").get<std::string>();

  Dataset ds;
  json model;
  if (cfg.generator.kind == "junta-hierarchy") {
    const Hierarchy h =
        gen_junta_hierarchy(cfg.generator.d, cfg.generator.n, cfg.generator.r, cfg.generator.K,
                            cfg.proximity(), cfg.generator.level_sizes, cfg.seed);
    ds = sample_dataset(h, cfg.generator.m, cfg.seed);
    model = hierarchy_to_json(h, hash);
  } else {
    const BrainDumpModel b = gen_braindump(cfg.generator.d, cfg.generator.r, cfg.generator.K,
                                           cfg.generator.k, cfg.generator.q_labels, cfg.seed);
    ds = sample_dataset(b, cfg.generator.m, cfg.seed);
    model = braindump_to_json(b, hash);
  }
  write_json_file(dir / "model.json", model);
  write_json_file(dir / "dataset.json", dataset_to_json(ds, hash, cfg.generator.r));
  std::cout << "wrote " << (dir / "model.json").string() << ", "
            << (dir / "dataset.json").string() << " (manifest " << hash << ")\n";
  return 0;
}

int run_train(const CliOptions& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const fs::path dir(cfg.out_dir);
  const json manifest = write_manifest(cfg, dir);
  const std::string hash = manifest.at("manifest_hash").get<std::string>();

  const Dataset ds = dataset_from_json(read_json_file(dir / "dataset.json"));
  ActivationSpec act = make_activation(cfg.network.activation, cfg.generator.K);
  const double beta = cfg.resolve_beta(act);

  json resolved = manifest;
  resolved["resolved"] = {{"beta", beta}};
  write_json_file(dir / "manifest.json", resolved);

  ResNetParams params =
      init_network(ds.d, ds.n, cfg.network.q_width, cfg.network.D, cfg.proximity(), beta,
                   cfg.network.orthogonal_mode, cfg.seed, std::move(act));
  const LossParams lp = cfg.loss_params(ds.samples(), ds.locations);
  const TrainConfig tc = cfg.train_config(opt.threads);
  const TrainTrace trace = train_all(params, ds, lp, tc);

  write_json_file(dir / "checkpoint.json", checkpoint_to_json(params, hash));
  write_json_file(dir / "trace.json", trace_to_json(trace, hash));
  write_text_file(dir / "trace.csv", trace_to_csv(trace, hash));
  std::cout << "trained " << params.trainable_layers() << " layers; final Err_{S,0} = "
            << trace.layers.back().err_zero << " (manifest " << hash << ")\n";
  return 0;
}

std::vector<int> level_sets_from_model(const json& model) {
  std::vector<int> cumulative;
  if (model.at("type") == "junta-hierarchy") {
    int cum = 0;
    for (int c : model.at("level_counts").get<std::vector<int>>()) cumulative.push_back(cum += c);
  } else {
    const int r = model.at("r").get<int>();
    const int q = model.at("q_labels").get<int>();
    for (int i = 1; i <= r; ++i) cumulative.push_back(i * q);
  }
  return cumulative;
}

std::string render_report(const MetricsReport& rep, const TrainTrace& trace) {
  std::ostringstream out;
  out << "layerwise training report\n";
  out << "  eps_opt = " << trace.eps_opt << ", gamma = " << trace.gamma
      << ", theorem eps_opt bound = " << trace.theorem_eps_bound
      << (trace.eps_within_theorem_bound ? " (satisfied)" : " (not satisfied, desk scale)")
      << "\n\n";
  out << "layer   Err_{S,0}   Err_{S,1/2}   min margin   max loss\n";
  for (std::size_t k = 0; k < rep.err_zero.size(); ++k) {
    double worst = std::numeric_limits<double>::infinity(), maxloss = 0.0;
    for (std::size_t j = 0; j < rep.loss[k].size(); ++j) {
      worst = std::min(worst, rep.worst_margin[k][j]);
      maxloss = std::max(maxloss, rep.loss[k][j]);
    }
    out << "  " << k + 1 << "     " << rep.err_zero[k] << "     " << rep.err_half[k] << "     "
        << worst << "     " << maxloss << "\n";
  }
  out << "\nacquisition layer per level (first layer with all margins positive):\n";
  for (std::size_t i = 0; i < rep.acquisition_layer.size(); ++i)
    out << "  level " << i + 1 << ": "
        << (rep.acquisition_layer[i] < 0 ? std::string("never")
                                         : std::to_string(rep.acquisition_layer[i]))
        << "\n";
  out << "\nloss decay (threshold " << rep.decay.threshold << ", target ratio e^-gamma = "
      << std::exp(-rep.decay.gamma) << "):\n";
  for (const LabelDecay& ld : rep.decay.labels) {
    out << "  label " << ld.label << ": ";
    if (!ld.entered_regime)
      out << "never below threshold\n";
    else if (ld.at_floor)
      out << "at floor\n";
    else
      out << "max ratio " << ld.max_ratio << (ld.within_theory ? " (within theory)" : " (above)")
          << "\n";
  }
  return out.str();
}

int run_report(const CliOptions& opt) {
  const ExperimentConfig cfg = load_config(opt);
  const fs::path dir(cfg.out_dir);
  const TrainTrace trace = trace_from_json(read_json_file(dir / "trace.json"));
  const json model = read_json_file(dir / "model.json");
  const LossParams lp = cfg.loss_params(cfg.generator.m, cfg.proximity().locations);
  const MetricsReport rep = build_metrics(trace, level_sets_from_model(model), lp);
  const std::string text = render_report(rep, trace);
  write_text_file(dir / "report.txt", text);
  std::cout << text;
  return 0;
}

struct CheckSink {
  int failures = 0;
  void operator()(bool ok, const std::string& label) {
    std::cout << (ok ? "[ok]   " : "[FAIL] ") << label << "\n";
    if (!ok) ++failures;
  }
};

int run_verify_kernel(std::uint64_t seed) {
  CheckSink check;
  const ActivationSpec spec = make_activation("tanh", 2);

  bool ortho = true;
  const GaussHermiteRule rule = gauss_hermite(96);
  for (int i = 0; i <= 12 && ortho; ++i)
    for (int j = 0; j <= 12 && ortho; ++j) {
      double ip = 0.0;
      for (int t = 0; t < rule.nodes.size(); ++t)
        ip += rule.weights[t] * hermite_eval(i, rule.nodes[t]) * hermite_eval(j, rule.nodes[t]);
      ortho = std::abs(ip - (i == j ? 1.0 : 0.0)) < 1e-8;
    }
  check(ortho, "quadrature orthonormality (i,j <= 12, 1e-8)");

  bool deriv = true;
  for (int s = 1; s <= 8 && deriv; ++s)
    for (double x : {-1.5, 0.3, 2.0}) {
      const double fd = (hermite_eval(s, x + 1e-6) - hermite_eval(s, x - 1e-6)) / 2e-6;
      const double exact = std::sqrt(double(s)) * hermite_eval(s - 1, x);
      if (std::abs(fd - exact) / std::max(1.0, std::abs(exact)) > 1e-6) deriv = false;
    }
  check(deriv, "derivative identity h_s' = sqrt(s) h_{s-1} (finite differences)");

  int agree = 0;
  Rng rng(seed, "verify");
  const int total = 25;
  for (int t = 0; t < total; ++t) {
    KernelQuery q;
    q.x.resize(8);
    q.y.resize(8);
    for (int i = 0; i < 8; ++i) {
      q.x[i] = 2 * rng.uniform() - 1;
      q.y[i] = 2 * rng.uniform() - 1;
    }
    q.beta = 0.9;
    const KernelValue ka = kernel_analytic(q, spec);
    const McEstimate mc = kernel_mc(q, spec, 20000, seed + 100 + t);
    if (std::abs(ka.value - mc.estimate) <= 3.0 * mc.stderr_ + ka.tail) ++agree;
  }
  check(agree >= 23, "kernel series vs Monte Carlo agreement (>= 23/25)");

  check(beta_threshold(spec, 1e9) == 0.75, "beta threshold floor at 3/4");
  check(beta_threshold(spec, 0.05) >= beta_threshold(spec, 0.1),
        "beta threshold nonincreasing in eps");
  const double d1 = delta_bound(0.5, 0.95, 1e12, 0.05, 2, spec);
  const double d2 = delta_bound(0.5, 0.95, 2e12, 0.05, 2, spec);
  check(std::abs(d2 - d1 * d1 / 2) <= 1e-9 * d2, "delta doubling identity");
  return check.failures == 0 ? 0 : 1;
}

int run_verify_rf(std::uint64_t seed, int threads) {
  (void)threads;
  CheckSink check;
  const ActivationSpec spec = make_activation("tanh", 2);
  const int n = 6;
  Rng rng(seed, "verify-rf");
  // normalized random quadratic target on random boolean points
  SparsePoly p = SparsePoly::zero(n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      std::vector<int> alpha(n, 0);
      alpha[i] = 1;
      alpha[j] = 1;
      p.add_term(alpha, rng.normal());
    }
  const int N = 128;
  Eigen::MatrixXd X(n, N);
  for (int t = 0; t < N; ++t)
    for (int i = 0; i < n; ++i) X(i, t) = rng.sign();
  Eigen::VectorXd targets(N);
  for (int t = 0; t < N; ++t) targets[t] = poly_eval(p, X.col(t));
  targets /= targets.cwiseAbs().maxCoeff();

  const double beta = 0.8;
  std::vector<double> errs;
  for (int qw : {256, 1024}) {
    Rng wrng(seed, "verify-rf/weights" + std::to_string(qw));
    XavierPair xp = xavier_pair(qw, n, beta, wrng);
    Eigen::MatrixXd feats(qw, N);
    for (int t = 0; t < N; ++t)
      feats.col(t) = ((xp.W * X.col(t) + xp.b).array().tanh()).matrix();
    const RfFitReport rep = rf_fit(feats, targets, 1e-6);
    check(rep.solver_ok, "ridge solve well-posed at q=" + std::to_string(qw));
    errs.push_back(rep.max_abs_error);
    std::cout << "       q=" << qw << ": max error " << rep.max_abs_error << ", ||w|| "
              << rep.weight_norm << "\n";
  }
  check(errs.back() <= errs.front() + 1e-12, "max error nonincreasing with width");
  check(errs.back() <= 0.1, "wide fit reaches 0.1 sup error");
  return check.failures == 0 ? 0 : 1;
}

int run_verify_braindump(std::uint64_t seed) {
  CheckSink check;
  check(std::abs(alpha_dk(10, 3) - 0.15) < 1e-15, "alpha_{10,3} = 0.15 exactly");
  check(alpha_dk(1, 1) == 1.0, "alpha_{1,1} = 1");

  bool asym = true;
  for (int k = 20; k <= 40; k += 5) {
    double binom = 0.0;  // log C(2k,k)
    for (int i = 1; i <= k; ++i) binom += std::log((k + i) / double(i));
    const double ratio = std::sqrt(M_PI * k) * std::exp(binom - 2 * k * std::log(2.0));
    if (std::abs(ratio - 1.0) > 0.02) asym = false;
  }
  check(asym, "central binomial asymptotics within 2% for k >= 20");

  const BrainDumpModel m = gen_braindump(32, 2, 2, 5, 4000, seed);
  Rng rng(seed, "verify-braindump");
  int good = 0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd x(32);
    for (int i = 0; i < 32; ++i) x[i] = rng.sign();
    if (reconstruction_error(m, 1, x) <= 0.5) ++good;
  }
  check(good >= trials - 2, "majority reconstruction error <= 0.5 at q=4000");
  return check.failures == 0 ? 0 : 1;
}

int run_verify_loss() {
  CheckSink check;
  bool grid_ok = true;
  for (const auto& [B, xi] : std::vector<std::pair<double, double>>{
           {1, 1}, {2, 0.5}, {3, 0.25}, {10, 0.1}}) {
    LossParams lp;
    lp.B = B;
    lp.xi = xi;
    lp.m = 1;
    lp.G_size = 1;
    const double gamma = lp.gamma();
    const double decay = std::exp(-gamma);
    const long pts = 100000;
    const double lo = 1.0 / (4.0 * B);
    for (long i = 0; i <= pts; ++i) {
      const double x = lo + (1.0 - lo) * double(i) / pts;
      const double pushed = 1.5 * x - 0.5 * x * x * x;
      if (margin_loss(pushed - gamma, lp).value > decay * margin_loss(x, lp).value) {
        grid_ok = false;
        break;
      }
    }
  }
  check(grid_ok, "cubic push decay inequality, zero violations on the grid");

  LossParams lp;
  lp.B = 2;
  lp.xi = 0.5;
  lp.m = 10;
  lp.G_size = 1;
  check(margin_loss(0.0, lp).value == 1.0 + lp.mix_weight(), "loss at margin 0");
  check(margin_loss(1.0, lp).value == 0.0, "loss at margin 1");
  check(!margin_loss(-0.1, lp).feasible, "negative margin flagged infeasible");
  check(robust_loss(0.3, 0.0, lp).value == margin_loss(0.3, lp).value, "rob loss at eps=0");
  return check.failures == 0 ? 0 : 1;
}

json error_record(const std::string& type, const std::string& message) {
  return json{{"error", {{"type", type}, {"message", message}}}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layerwise residual-network training on hierarchical synthetic targets"};
  app.require_subcommand(1);

  CliOptions opt;
  app.add_option("--config", opt.config_path, "experiment config JSON");
  app.add_option("--out", opt.out_override, "output directory override");
  app.add_option("--threads", opt.threads, "worker thread cap");
  auto* seed_opt = app.add_option("--seed", opt.seed_override, "master seed override");

  auto* gen = app.add_subcommand("gen", "generate model + dataset files");
  auto* train = app.add_subcommand("train", "run layerwise training");
  auto* report = app.add_subcommand("report", "render metrics from a trace");
  auto* vk = app.add_subcommand("verify-kernel", "Hermite/kernel property suite");
  auto* vr = app.add_subcommand("verify-rf", "random-features fit sweeps");
  auto* vb = app.add_subcommand("verify-braindump", "majority reconstruction checks");
  auto* vl = app.add_subcommand("verify-loss", "loss unit checks and cubic push grid");
  for (auto* sub : {gen, train, report, vk, vr, vb, vl}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  opt.has_seed_override = seed_opt->count() > 0;

  try {
    const std::uint64_t vseed = opt.has_seed_override ? opt.seed_override : 1;
    if (gen->parsed()) return run_gen(opt);
    if (train->parsed()) return run_train(opt);
    if (report->parsed()) return run_report(opt);
    if (vk->parsed()) return run_verify_kernel(vseed);
    if (vr->parsed()) return run_verify_rf(vseed, opt.threads);
    if (vb->parsed()) return run_verify_braindump(vseed);
    if (vl->parsed()) return run_verify_loss();
  } catch (const ConfigError& e) {
    std::cerr << error_record("config", e.what()).dump() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << error_record("io", e.what()).dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << error_record("internal", e.what()).dump() << "\n";
    return 1;
  }
  return 0;
}
