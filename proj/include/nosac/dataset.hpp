#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nosac/delay.hpp"
#include "nosac/env.hpp"
#include "nosac/expert.hpp"

namespace nosac {

/// One supervised tuple (tau, v, u) -> U.
struct OperatorSample {
  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> u;
  double label = 0.0;
};

/// "ODS1" file: magic, u32 version, u32 sample count, u32 nx, then per
/// sample tau[nx], v[nx], u[nx*nx], label as little-endian float32.
struct OperatorSamples {
  static constexpr std::uint32_t kVersion = 1;
  std::size_t nx = 21;
  std::vector<OperatorSample> samples;
};

std::vector<std::uint8_t> encode_dataset(const OperatorSamples& d);
OperatorSamples decode_dataset(const std::vector<std::uint8_t>& bytes);
void save_dataset(const std::filesystem::path& path, const OperatorSamples& d);
OperatorSamples load_dataset(const std::filesystem::path& path);
void export_dataset_csv(const std::filesystem::path& path, const OperatorSamples& d);

struct TauSamplerConfig {
  std::vector<DelayFamily> families{DelayFamily::Cosine4, DelayFamily::Exponential};
  double a_low = 0.5, a_high = 0.9;   // cosine4 offset
  double b_low = 0.1, b_high = 0.4;   // cosine4 amplitude
  double c_low = 0.3, c_high = 1.0;   // exp rate
  double fixed_value = 0.7;           // constant family

  /// Throws ConfigError when a range admits tau <= 0.
  void validate() const;
};

/// Draws a delay: family uniformly from `families`, parameters uniformly in range.
DelayFunction tau_sampler(const TauSamplerConfig& cfg, std::mt19937_64& rng);

struct DatasetConfig {
  int n_trajectories = 400;
  int snapshot_stride = 1;
  bool clamp_labels = false;
  TauSamplerConfig tau;
  InitSpec init = InitSpec::training();
};

struct DatasetResult {
  OperatorSamples data;
  int discarded_trajectories = 0;
};

/// Closed-loop rollouts of `expert` under ZOH, one sampled delay and v0 per
/// trajectory, recording every stride-th agent step. Diverged trajectories
/// are dropped. The result is shuffled; deterministic in `seed`.
DatasetResult generate_dataset(const EnvConfig& base, const ExpertController& expert, const DatasetConfig& cfg,
                               std::uint64_t seed);

} // namespace nosac
