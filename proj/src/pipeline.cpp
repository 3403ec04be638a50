#include "nosac/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "nosac/csv.hpp"
#include "nosac/dataset.hpp"
#include "nosac/errors.hpp"
#include "nosac/networks.hpp"
#include "nosac/nosac.hpp"
#include "nosac/pretrain.hpp"
#include "nosac/seed.hpp"

namespace nosac {

namespace fs = std::filesystem;
using nlohmann::json;

Algo algo_from_string(const std::string& s) {
  if (s == "sac") return Algo::Sac;
  if (s == "nosac") return Algo::NoSac;
  throw ConfigError("unknown algorithm '" + s + "' (expected sac or nosac)");
}

std::string to_string(Algo a) { return a == Algo::Sac ? "sac" : "nosac"; }

std::unique_ptr<ExpertController> make_expert(const std::string& name, const SpatialGrid& grid) {
  if (name == "zero") return std::make_unique<ZeroExpert>();
  if (name == "synthetic-linear" || name == "synthetic") {
    return std::make_unique<SyntheticLinearExpert>(SyntheticLinearExpert::reference(grid));
  }
  throw ConfigError("unknown expert '" + name + "' (expected zero or synthetic-linear)");
}

namespace {

NetworkWeights load_required_weights(const fs::path& path, const std::string& producer) {
  if (!fs::exists(path)) {
    throw DependencyError("weights file " + path.string() + " not found; produce it with the '" + producer +
                          "' command");
  }
  return load_weights(path);
}

std::unique_ptr<ActorNetwork<float>> make_actor(Algo algo, const ExperimentConfig& cfg) {
  if (algo == Algo::Sac) return std::make_unique<MlpActor<float>>(cfg.plant.nx, cfg.sac.hidden, 0);
  return std::make_unique<NoSacActor<float>>(DeepONet<float>(0), 0);
}

EvalConfig eval_config(const ExperimentConfig& cfg, const DelayFunction& tau) {
  return EvalConfig{cfg.env_config(tau), cfg.eval.v0, cfg.eval.settle_fraction, cfg.eval.window};
}

template <typename T>
TrainOutcome train_typed(const ExperimentConfig& cfg, const TrainRequest& req) {
  TrainOutcome out;
  const std::uint64_t s = req.seed;
  for (const char* label : {"env", "policy", "buffer", "init", "update"}) out.seeds[label] = derive_seed(s, label);

  SacNetworks<T> nets;
  if (req.algo == Algo::Sac) {
    nets = make_mlp_networks<T>(cfg.plant.nx, cfg.sac.hidden, out.seeds["init"]);
  } else if (req.pretrained) {
    nets = std::move(assemble<T>(*req.pretrained, out.seeds["init"], cfg.train.freeze_extractor).nets);
  } else {
    nets = std::move(assemble_random<T>(out.seeds["init"], cfg.train.freeze_extractor).nets);
  }

  PdeEnv env(cfg.env_config());
  SacAgent<T> agent(std::move(nets), cfg.sac.hyper, cfg.plant.u_max, out.seeds["update"]);
  TrainConfig tc;
  tc.episodes = cfg.train.episodes;
  tc.max_agent_steps = cfg.train.max_agent_steps;
  tc.init = cfg.train.init;
  tc.checkpoint_every = req.out_dir.empty() ? 0 : cfg.train.checkpoint_every;
  if (!req.out_dir.empty()) tc.checkpoint_dir = req.out_dir / "checkpoints";
  const TrainSeeds seeds{out.seeds["env"], out.seeds["policy"], out.seeds["buffer"]};

  out.log = train_loop(env, agent, tc, seeds, req.on_episode);
  out.weights = agent.networks().export_weights();
  out.eval = evaluate(actor_policy(*agent.networks().actor, cfg.plant.u_max), eval_config(cfg, cfg.tau()));

  if (!req.out_dir.empty()) {
    fs::create_directories(req.out_dir);
    write_train_csv(req.out_dir / "train.csv", out.log);
    save_weights(req.out_dir / "weights.now1", out.weights);
    write_report(req.out_dir / "eval", out.eval);
  }
  return out;
}

void add_artifacts(RunManifest& m, const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) m.add_artifact(root, f);
}

template <typename V>
V arg_or(const json& args, const char* key, V fallback) {
  auto it = args.find(key);
  if (it == args.end() || it->is_null()) return fallback;
  try {
    return it->get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("argument '") + key + "': " + e.what());
  }
}

void cmd_simulate(const CommandRequest& req, RunManifest&) {
  const auto ctl = load_controller(arg_or<std::string>(req.args, "controller", "zero"), req.cfg);
  EvalConfig ec = eval_config(req.cfg, req.cfg.tau());
  ec.v0 = arg_or<double>(req.args, "v0", req.cfg.eval.v0);
  const auto r = evaluate(ctl.policy, ec);

  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < r.x.size(); ++i) header.push_back("x_" + std::to_string(i));
  CsvWriter traj(req.out_dir / "trajectory.csv", header);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    std::vector<double> row{r.times[k]};
    row.insert(row.end(), r.states[k].begin(), r.states[k].end());
    traj.row(row);
  }
  CsvWriter sig(req.out_dir / "signals.csv", {"t", "U", "norm"});
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    const double u = k < r.controls.size() ? r.controls[k] : r.controls.empty() ? 0.0 : r.controls.back();
    sig.row(r.times[k], u, r.augmented_norms[k]);
  }
  if (req.log) req.log(ctl.description + ": final norm " + format_number(r.metrics.final_norm));
}

void cmd_gen_dataset(const CommandRequest& req, RunManifest& m) {
  const auto seed = arg_or<std::uint64_t>(req.args, "seed", req.cfg.train.seeds.front());
  m.master_seed = seed;
  m.seeds["dataset"] = derive_seed(seed, "dataset");
  const auto env = req.cfg.env_config();
  const auto expert = make_expert(req.cfg.dataset.expert, env.plant.grid);
  const auto res = generate_dataset(env, *expert, req.cfg.dataset.generation, m.seeds["dataset"]);
  save_dataset(req.out_dir / "dataset.ods", res.data);
  CsvWriter csv(req.out_dir / "dataset_summary.csv", {"name", "value"});
  csv.row("samples", static_cast<double>(res.data.samples.size()));
  csv.row("discarded_trajectories", static_cast<double>(res.discarded_trajectories));
  if (req.log) {
    req.log(std::to_string(res.data.samples.size()) + " samples, " + std::to_string(res.discarded_trajectories) +
            " diverged trajectories discarded");
  }
}

void cmd_pretrain(const CommandRequest& req, RunManifest& m) {
  const auto path = arg_or<std::string>(req.args, "dataset", "");
  if (path.empty() || !fs::exists(path)) {
    throw DependencyError("pretrain needs a dataset file" + (path.empty() ? std::string() : " (" + path + ")") +
                          "; produce one with the 'gen-dataset' command");
  }
  const auto seed = arg_or<std::uint64_t>(req.args, "seed", req.cfg.train.seeds.front());
  m.master_seed = seed;
  m.seeds["pretrain"] = derive_seed(seed, "pretrain");
  const auto data = load_dataset(path);
  const auto res = pretrain(data, req.cfg.deeponet, m.seeds["pretrain"]);
  save_weights(req.out_dir / "deeponet.now1", res.weights.export_weights());
  write_loss_csv(req.out_dir / "loss.csv", res.curve);
  CsvWriter csv(req.out_dir / "pretrain_summary.csv", {"name", "value"});
  csv.row("best_epoch", static_cast<double>(res.best_epoch));
  csv.row("best_val_mse", res.best_val_mse);
  csv.row("val_relative_l2", res.val_relative_l2);
  csv.row("train_size", static_cast<double>(res.train_size));
  csv.row("val_size", static_cast<double>(res.val_size));
  if (req.log) req.log("validation relative L2 " + format_number(res.val_relative_l2));
}

void cmd_train(const CommandRequest& req, RunManifest& m) {
  const Algo algo = algo_from_string(arg_or<std::string>(req.args, "algo", "nosac"));
  const bool random_extractor = arg_or<bool>(req.args, "random_extractor", false);
  const auto deeponet = arg_or<std::string>(req.args, "deeponet", "");
  std::optional<NetworkWeights> pretrained;
  if (algo == Algo::NoSac) {
    if (!deeponet.empty()) {
      pretrained = load_required_weights(deeponet, "pretrain");
    } else if (!random_extractor) {
      throw DependencyError("train --algo nosac needs pretrained DeepONet weights from the 'pretrain' command "
                            "(--deeponet) or --random-extractor");
    }
  }
  const auto seeds = arg_or<std::vector<std::uint64_t>>(req.args, "seeds", req.cfg.train.seeds);
  if (seeds.empty()) throw ConfigError("train: no seeds given");
  m.master_seed = seeds.front();

  for (auto s : seeds) {
    TrainRequest tr;
    tr.algo = algo;
    tr.seed = s;
    tr.pretrained = pretrained;
    tr.out_dir = req.out_dir / ("seed_" + std::to_string(s));
    if (req.log) {
      tr.on_episode = [&req, s](const EpisodeLog& e) {
        req.log("seed " + std::to_string(s) + " episode " + std::to_string(e.episode) + " return " +
                format_number(e.episode_return) + " final_norm " + format_number(e.final_norm));
      };
    }
    const auto out = req.cfg.sac.precision == Precision::Float32 ? train_typed<float>(req.cfg, tr)
                                                                  : train_typed<double>(req.cfg, tr);
    for (const auto& [label, v] : out.seeds) m.seeds["seed_" + std::to_string(s) + "." + label] = v;
  }
}

void cmd_eval(const CommandRequest& req, RunManifest&) {
  const auto ctl = load_controller(arg_or<std::string>(req.args, "policy", "zero"), req.cfg);
  EvalConfig ec = eval_config(req.cfg, req.cfg.tau());
  ec.v0 = arg_or<double>(req.args, "v0", req.cfg.eval.v0);
  const auto r = evaluate(ctl.policy, ec);
  write_report(req.out_dir, r);
  if (req.log) {
    req.log(ctl.description + ": final norm " + format_number(r.metrics.final_norm) + ", steady-state error " +
            format_number(r.metrics.steady_state_error));
  }
}

void cmd_export(const CommandRequest& req, RunManifest&) {
  const auto weights = arg_or<std::string>(req.args, "weights", "");
  const auto dataset = arg_or<std::string>(req.args, "dataset", "");
  if (weights.empty() == dataset.empty()) throw ConfigError("export: give exactly one of --weights or --dataset");
  if (!dataset.empty()) {
    if (!fs::exists(dataset)) throw DependencyError("dataset " + dataset + " not found; run 'gen-dataset' first");
    export_dataset_csv(req.out_dir / "dataset.csv", load_dataset(dataset));
    return;
  }
  const auto w = load_required_weights(weights, "train");
  std::map<std::string, NetworkWeights> roles;
  CsvWriter csv(req.out_dir / "tensors.csv", {"name", "shape", "numel", "l2"});
  for (const auto& t : w.tensors) {
    const auto dot = t.name.find('.');
    const std::string role = dot == std::string::npos ? "network" : t.name.substr(0, dot);
    roles[role].tensors.push_back(t);
    std::string shape;
    for (std::size_t i = 0; i < t.dims.size(); ++i) shape += (i ? "x" : "") + std::to_string(t.dims[i]);
    double l2 = 0.0;
    for (float v : t.data) l2 += double(v) * double(v);
    csv.row(t.name, shape, static_cast<double>(t.data.size()), std::sqrt(l2));
  }
  for (const auto& [role, rw] : roles) save_weights(req.out_dir / (role + ".now1"), rw);
}

} // namespace

LoadedController load_controller(const std::string& spec, const ExperimentConfig& cfg) {
  LoadedController c;
  c.description = spec;
  if (spec == "zero") {
    c.policy = zero_policy();
    return c;
  }
  const auto colon = spec.find(':');
  if (colon == std::string::npos || colon + 1 == spec.size()) {
    throw ConfigError("invalid controller '" + spec + "' (expected zero, expert:<name>, sac:<weights> or "
                      "nosac:<weights>)");
  }
  const std::string kind = spec.substr(0, colon), rest = spec.substr(colon + 1);
  if (kind == "expert") {
    auto e = std::shared_ptr<ExpertController>(make_expert(rest, SpatialGrid(cfg.plant.nx)));
    c.policy = expert_policy(*e, cfg.plant.u_max);
    c.owner = e;
    return c;
  }
  if (kind == "sac" || kind == "nosac") {
    const Algo algo = algo_from_string(kind);
    const auto w = load_required_weights(rest, "train");
    std::shared_ptr<ActorNetwork<float>> actor = make_actor(algo, cfg);
    import_params(w, actor->params(), "actor.");
    c.policy = actor_policy(*actor, cfg.plant.u_max);
    c.owner = actor;
    return c;
  }
  throw ConfigError("invalid controller kind '" + kind + "' in '" + spec + "'");
}

TrainOutcome train_agent(const ExperimentConfig& cfg, const TrainRequest& req) {
  return cfg.sac.precision == Precision::Float32 ? train_typed<float>(cfg, req) : train_typed<double>(cfg, req);
}

EvalReport evaluate_weights(Algo algo, const NetworkWeights& w, const ExperimentConfig& cfg, const DelayFunction& tau) {
  auto actor = make_actor(algo, cfg);
  import_params(w, actor->params(), "actor.");
  return evaluate(actor_policy(*actor, cfg.plant.u_max), eval_config(cfg, tau));
}

RunManifest run_command(const CommandRequest& req) {
  const auto start = std::chrono::steady_clock::now();
  RunManifest m;
  m.command = req.command;
  m.args = req.args;
  m.config = config_to_json(req.cfg);
  m.master_seed = req.cfg.train.seeds.front();
  const bool existed = fs::exists(req.out_dir);
  fs::create_directories(req.out_dir);
  try {
    if (req.command == "simulate") {
      cmd_simulate(req, m);
    } else if (req.command == "gen-dataset") {
      cmd_gen_dataset(req, m);
    } else if (req.command == "pretrain") {
      cmd_pretrain(req, m);
    } else if (req.command == "train") {
      cmd_train(req, m);
    } else if (req.command == "eval") {
      cmd_eval(req, m);
    } else if (req.command == "export") {
      cmd_export(req, m);
    } else {
      throw ConfigError("unknown command '" + req.command + "'");
    }
  } catch (...) {
    std::error_code ec;
    if (!existed) fs::remove_all(req.out_dir, ec);
    throw;
  }

  add_artifacts(m, req.out_dir);
  m.timings["total"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.write(req.out_dir / "manifest.json");
  return m;
}

RunManifest rerun_manifest(const fs::path& manifest, const fs::path& out_dir,
                           std::function<void(const std::string&)> log) {
  if (!fs::exists(manifest)) throw DependencyError("manifest " + manifest.string() + " not found");
  const auto m = RunManifest::read(manifest);
  CommandRequest req;
  req.command = m.command;
  req.cfg = config_from_json(m.config);
  req.args = m.args;
  req.out_dir = out_dir;
  req.log = std::move(log);
  return run_command(req);
}

} // namespace nosac
