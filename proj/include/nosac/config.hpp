#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nosac/dataset.hpp"
#include "nosac/env.hpp"
#include "nosac/pretrain.hpp"
#include "nosac/sac.hpp"

namespace nosac {

enum class Precision { Float32, Float64 };

struct PlantSection {
  std::size_t nx = 21;
  double dt = 0.002;
  int hold = 100;
  double u_max = 30.0;
  double horizon_seconds = 5.0;
  double divergence_limit = 200.0;
  DelayFamily tau_family = DelayFamily::Cosine4;
  std::vector<double> tau_params{0.7, 0.3};
  CoefficientId c = CoefficientId::Paper;
  CoefficientId f = CoefficientId::Paper;
};

struct DatasetSection {
  DatasetConfig generation;
  std::string expert = "synthetic-linear"; // synthetic-linear | zero
};

struct SacSection {
  SacHyperparams hyper;
  std::vector<std::size_t> hidden{256, 256}; // baseline MLP widths
  Precision precision = Precision::Float32;
};

struct TrainSection {
  int episodes = 100;
  std::int64_t max_agent_steps = 0;
  std::vector<std::uint64_t> seeds{0};
  int checkpoint_every = 0;
  InitSpec init = InitSpec::training();
  bool freeze_extractor = false;
};

struct EvalSection {
  double v0 = 6.0;
  double settle_fraction = 0.05;
  double window = 1.0;
};

/// Every run parameter. Defaults reproduce the reference experiment.
struct ExperimentConfig {
  PlantSection plant;
  RewardParams reward;
  PretrainConfig deeponet;
  DatasetSection dataset;
  SacSection sac;
  TrainSection train;
  EvalSection eval;
  std::filesystem::path output_dir = "runs";

  /// Range checks on every field; throws ConfigError.
  void validate() const;

  EnvConfig env_config() const;
  EnvConfig env_config(const DelayFunction& tau) const;
  DelayFunction tau() const;
};

/// Strict parse: unknown keys and out-of-range values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(Precision p);

} // namespace nosac
