#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "nosac/config.hpp"
#include "nosac/eval.hpp"
#include "nosac/manifest.hpp"
#include "nosac/sac.hpp"

namespace nosac {

enum class Algo { Sac, NoSac };

Algo algo_from_string(const std::string& s);
std::string to_string(Algo a);

/// A deterministic controller together with whatever it borrows.
struct LoadedController {
  std::shared_ptr<void> owner;
  Policy policy;
  std::string description;
};

/// zero | expert:zero | expert:synthetic-linear | sac:<weights> | nosac:<weights>.
/// Malformed specs raise ConfigError; missing weight files DependencyError.
LoadedController load_controller(const std::string& spec, const ExperimentConfig& cfg);

std::unique_ptr<ExpertController> make_expert(const std::string& name, const SpatialGrid& grid);

struct TrainRequest {
  Algo algo = Algo::NoSac;
  std::uint64_t seed = 0;
  std::optional<NetworkWeights> pretrained; // NO-SAC only; empty means random extractors
  std::filesystem::path out_dir;            // empty: nothing written
  std::function<void(const EpisodeLog&)> on_episode;
};

struct TrainOutcome {
  TrainLog log;
  EvalReport eval;
  NetworkWeights weights;
  std::map<std::string, std::uint64_t> seeds;
};

/// One seeded training run followed by a deterministic evaluation on the
/// configured delay from v0 = eval.v0.
TrainOutcome train_agent(const ExperimentConfig& cfg, const TrainRequest& req);

/// Evaluates the actor stored in a training weights file.
EvalReport evaluate_weights(Algo algo, const NetworkWeights& w, const ExperimentConfig& cfg, const DelayFunction& tau);

/// Command options: simulate {controller, v0}; gen-dataset {seed};
/// pretrain {dataset, seed}; train {algo, deeponet, random_extractor, seeds};
/// eval {policy, v0}; export {weights | dataset}.
struct CommandRequest {
  std::string command;
  ExperimentConfig cfg;
  nlohmann::json args = nlohmann::json::object();
  std::filesystem::path out_dir;
  std::function<void(const std::string&)> log;
};

/// Runs one command, writes its outputs and manifest.json under out_dir.
RunManifest run_command(const CommandRequest& req);

/// Re-executes the command recorded in a manifest into a new directory.
RunManifest rerun_manifest(const std::filesystem::path& manifest, const std::filesystem::path& out_dir,
                           std::function<void(const std::string&)> log = {});

} // namespace nosac
