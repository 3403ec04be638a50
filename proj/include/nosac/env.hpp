#pragma once

#include <cstdint>
#include <vector>

#include "nosac/plant.hpp"
#include "nosac/reward.hpp"

namespace nosac {

/// Distribution of the constant initial profile v0(x).
struct InitSpec {
  double low = 1.0;
  double high = 8.0;

  static InitSpec training() { return {1.0, 8.0}; }
  static InitSpec fixed(double value) { return {value, value}; }
  bool is_fixed() const { return low == high; }
};

struct EnvConfig {
  PlantConfig plant;
  RewardParams reward;
  double divergence_limit = 200.0;

  void validate() const;
};

/// Agent-visible observation: the augmented state plus the delay samples.
struct Observation {
  std::vector<double> tau;
  std::vector<double> v;
  std::vector<double> u;
};

struct StepResult {
  double reward = 0.0;
  RewardTerms terms;
  double applied_action = 0.0;
  double norm = 0.0;
  bool truncated = false;
  bool diverged = false;
};

/// Gym-style wrapper: one step holds the action for `hold` simulator steps.
class PdeEnv {
public:
  explicit PdeEnv(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  const Plant& plant() const { return plant_; }
  const AugmentedState& state() const { return plant_.state(); }

  /// Constant v0 drawn from init with an RNG seeded by `seed`; u0 = 0.
  const AugmentedState& reset(const InitSpec& init, std::uint64_t seed);
  const AugmentedState& reset_profile(std::span<const double> v0);

  /// Throws ProtocolError if the episode is already over or never started.
  StepResult step(double action);

  Observation observe() const;
  int agent_step() const { return agent_step_; }
  bool done() const { return done_; }
  const std::vector<double>& norm_trace() const { return norm_trace_; }
  double episode_return() const { return episode_return_; }

private:
  EnvConfig cfg_;
  Plant plant_;
  int agent_step_ = 0;
  bool started_ = false;
  bool done_ = false;
  double episode_return_ = 0.0;
  std::vector<double> norm_trace_;
};

} // namespace nosac
