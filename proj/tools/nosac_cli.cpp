#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "nosac/config.hpp"
#include "nosac/errors.hpp"
#include "nosac/pipeline.hpp"

namespace {

enum Exit { kOk = 0, kRuntime = 1, kUsage = 2 };

struct Common {
  std::string config;
  std::string out;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON experiment config (defaults when omitted)");
  cmd->add_option("-o,--out", c.out, "Output directory (default: io.output_dir/<command>, or $NOSAC_OUTPUT_DIR)");
  cmd->add_flag("-q,--quiet", c.quiet, "Suppress progress lines");
}

std::filesystem::path output_dir(const Common& c, const nosac::ExperimentConfig& cfg, const std::string& command) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("NOSAC_OUTPUT_DIR"); env && *env) return std::filesystem::path(env) / command;
  return cfg.output_dir / command;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-compensating boundary control lab: plant simulation, operator pretraining, SAC/NO-SAC"};
  app.require_subcommand(1);

  Common common;
  nlohmann::json args = nlohmann::json::object();

  std::string controller = "zero";
  double v0 = 6.0;
  bool v0_set = false;
  auto* simulate = app.add_subcommand("simulate", "Open- or closed-loop rollout to trajectory.csv and signals.csv");
  add_common(simulate, common);
  simulate->add_option("--controller", controller,
                       "zero | expert:zero | expert:synthetic-linear | sac:<weights> | nosac:<weights>");
  simulate->add_option("--v0", v0, "Constant initial profile")->each([&](const std::string&) { v0_set = true; });

  std::uint64_t seed = 0;
  bool seed_set = false;
  auto* gen = app.add_subcommand("gen-dataset", "Closed-loop expert rollouts to dataset.ods");
  add_common(gen, common);
  gen->add_option("--seed", seed, "Master seed")->each([&](const std::string&) { seed_set = true; });

  std::string dataset;
  auto* pre = app.add_subcommand("pretrain", "Fit the DeepONet to a dataset; writes deeponet.now1 and loss.csv");
  add_common(pre, common);
  pre->add_option("--dataset", dataset, "dataset.ods from gen-dataset")->required();
  pre->add_option("--seed", seed, "Master seed")->each([&](const std::string&) { seed_set = true; });

  std::string algo = "nosac", deeponet;
  bool random_extractor = false;
  std::vector<std::uint64_t> seeds;
  auto* train = app.add_subcommand("train", "Train SAC or NO-SAC; per seed train.csv, weights.now1, eval/");
  add_common(train, common);
  train->add_option("--algo", algo, "sac | nosac")->check(CLI::IsMember({"sac", "nosac"}));
  train->add_option("--deeponet", deeponet, "Pretrained weights (deeponet.now1) for NO-SAC");
  train->add_flag("--random-extractor", random_extractor, "NO-SAC with randomly initialised extractors");
  train->add_option("--seed,--seeds", seeds, "Master seeds, e.g. --seeds 1,2,3")->delimiter(',');

  std::string policy = "zero";
  auto* eval = app.add_subcommand("eval", "Deterministic 5 s evaluation; writes states/control/norms/metrics CSVs");
  add_common(eval, common);
  eval->add_option("--policy", policy, "Same syntax as simulate --controller");
  eval->add_option("--v0", v0, "Constant initial profile")->each([&](const std::string&) { v0_set = true; });

  std::string weights, export_dataset;
  auto* exp = app.add_subcommand("export", "Split a weights file per network or convert a dataset to CSV");
  add_common(exp, common);
  exp->add_option("--weights", weights, "Weights file (NOW1)");
  exp->add_option("--dataset", export_dataset, "Dataset file (ODS1)");

  std::string manifest;
  auto* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a manifest.json into a new directory");
  rerun->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  rerun->add_option("-o,--out", common.out, "Output directory")->required();
  rerun->add_flag("-q,--quiet", common.quiet, "Suppress progress lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  auto log = [&](const std::string& line) {
    if (!common.quiet) std::cout << line << std::endl;
  };

  try {
    if (rerun->parsed()) {
      const auto m = nosac::rerun_manifest(manifest, common.out, log);
      log("wrote " + (std::filesystem::path(common.out) / "manifest.json").string());
      return kOk;
    }

    nosac::CommandRequest req;
    req.command = app.get_subcommands().front()->get_name();
    req.cfg = common.config.empty() ? nosac::ExperimentConfig{} : nosac::load_config(common.config);
    req.cfg.validate();
    req.log = log;
    if (simulate->parsed()) {
      args["controller"] = controller;
      if (v0_set) args["v0"] = v0;
    } else if (gen->parsed() || pre->parsed()) {
      if (seed_set) args["seed"] = seed;
      if (pre->parsed()) args["dataset"] = dataset;
    } else if (train->parsed()) {
      args["algo"] = algo;
      args["random_extractor"] = random_extractor;
      if (!deeponet.empty()) args["deeponet"] = deeponet;
      if (!seeds.empty()) args["seeds"] = seeds;
    } else if (eval->parsed()) {
      args["policy"] = policy;
      if (v0_set) args["v0"] = v0;
    } else if (exp->parsed()) {
      if (!weights.empty()) args["weights"] = weights;
      if (!export_dataset.empty()) args["dataset"] = export_dataset;
    }
    req.args = args;
    req.out_dir = output_dir(common, req.cfg, req.command);
    nosac::run_command(req);
    log("wrote " + (req.out_dir / "manifest.json").string());
    return kOk;
  } catch (const nosac::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const nosac::DependencyError& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
