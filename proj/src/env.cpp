#include "nosac/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "nosac/errors.hpp"

namespace nosac {

void EnvConfig::validate() const {
  plant.validate();
  reward.validate();
  if (!(divergence_limit > 0.0)) throw ConfigError("plant: divergence_limit must be positive");
}

PdeEnv::PdeEnv(EnvConfig cfg) : cfg_(std::move(cfg)), plant_(cfg_.plant) { cfg_.validate(); }

const AugmentedState& PdeEnv::reset(const InitSpec& init, std::uint64_t seed) {
  double v0 = init.low;
  if (!init.is_fixed()) {
    std::mt19937_64 rng(seed);
    v0 = std::uniform_real_distribution<double>(init.low, init.high)(rng);
  }
  const std::vector<double> profile(cfg_.plant.nx(), v0);
  return reset_profile(profile);
}

const AugmentedState& PdeEnv::reset_profile(std::span<const double> v0) {
  plant_.reset(v0);
  agent_step_ = 0;
  started_ = true;
  done_ = false;
  episode_return_ = 0.0;
  norm_trace_.assign(1, l2_norm(plant_.state(), cfg_.plant.grid, cfg_.reward.norm));
  return plant_.state();
}

StepResult PdeEnv::step(double action) {
  if (!started_) throw ProtocolError("PdeEnv::step called before reset");
  if (done_) throw ProtocolError("PdeEnv::step called after the episode ended; call reset first");

  StepResult out;
  out.applied_action = std::clamp(action, -cfg_.plant.u_max, cfg_.plant.u_max);
  const AugmentedState prev = plant_.state();
  bool finite = true;
  for (int k = 0; k < cfg_.plant.hold && finite; ++k) {
    finite = plant_.step(out.applied_action);
  }
  ++agent_step_;

  const auto& grid = cfg_.plant.grid;
  const auto& cur = plant_.state();
  out.norm = finite ? l2_norm(cur, grid, cfg_.reward.norm) : std::numeric_limits<double>::infinity();
  out.diverged = !finite || out.norm > cfg_.divergence_limit;
  const bool horizon = agent_step_ >= cfg_.plant.horizon_steps();
  out.truncated = horizon || out.diverged;
  norm_trace_.push_back(out.norm);

  const double diff = finite ? l2_distance(prev, cur, grid, cfg_.reward.norm) : out.norm;
  out.terms = reward_from_norms(diff, out.norm, cfg_.reward, out.truncated, norm_trace_);
  out.reward = out.terms.total();
  episode_return_ += out.reward;
  done_ = out.truncated;
  return out;
}

Observation PdeEnv::observe() const {
  const auto tau = plant_.tau_samples();
  return Observation{std::vector<double>(tau.begin(), tau.end()), plant_.state().v, plant_.state().u};
}

} // namespace nosac
