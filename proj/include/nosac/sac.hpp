#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nosac/env.hpp"
#include "nosac/optim.hpp"
#include "nosac/replay.hpp"
#include "nosac/tensor.hpp"
#include "nosac/weights_io.hpp"

namespace nosac {

using ObsBatch = std::vector<const Observation*>;

/// Policy network: observations -> [B,2] raw (mean, log-std) before clamping.
template <typename T>
class ActorNetwork {
public:
  virtual ~ActorNetwork() = default;
  virtual ad::Var<T> forward(ad::Tape<T>& tape, const ObsBatch& obs, bool track) = 0;
  virtual ad::ParamRefs<T> params() = 0;
  virtual std::unique_ptr<ActorNetwork> clone() const = 0;
};

/// Q network: (observations, action / u_max) -> [B,1].
template <typename T>
class CriticNetwork {
public:
  virtual ~CriticNetwork() = default;
  virtual ad::Var<T> forward(ad::Tape<T>& tape, const ObsBatch& obs, ad::Var<T> action_unit, bool track) = 0;
  virtual ad::ParamRefs<T> params() = 0;
  virtual std::unique_ptr<CriticNetwork> clone() const = 0;
};

/// Actor, twin critics and their targets. Parameter order is identical
/// between a critic and its target.
template <typename T>
struct SacNetworks {
  std::unique_ptr<ActorNetwork<T>> actor;
  std::unique_ptr<CriticNetwork<T>> critic1;
  std::unique_ptr<CriticNetwork<T>> critic2;
  std::unique_ptr<CriticNetwork<T>> target1;
  std::unique_ptr<CriticNetwork<T>> target2;

  /// Targets start as exact copies of the online critics.
  static SacNetworks make(std::unique_ptr<ActorNetwork<T>> actor, std::unique_ptr<CriticNetwork<T>> critic1,
                          std::unique_ptr<CriticNetwork<T>> critic2);

  NetworkWeights export_weights();
  void import_weights(const NetworkWeights& w);
};

struct SacHyperparams {
  double gamma = 0.99;
  double lr = 9e-5;
  double polyak = 0.003;     // eta in theta_bar <- eta theta + (1 - eta) theta_bar
  int policy_delay = 2;      // actor, temperature and target updates every n critic updates
  bool alpha_auto = true;
  double alpha_init = 1.0;
  double target_entropy = -1.0;
  std::size_t batch = 256;
  std::size_t warmup = 100;  // uniform random actions and no updates before this many agent steps
  int gradient_steps = 1;    // per agent step
  std::size_t buffer_capacity = 100000;
  double log_std_min = -20.0;
  double log_std_max = 2.0;
  double squash_eps = 1e-6;

  void validate() const;
};

/// Sampled action with its statistics. action = u_max tanh(z).
struct PolicyOutput {
  double mean = 0.0;
  double log_std = 0.0;
  double z = 0.0;
  double action = 0.0;
  double log_prob = 0.0;
};

/// Squashed Gaussian from a raw head output. Deterministic mode uses
/// z = mean and reports the density at that point.
PolicyOutput squash_policy(double mean, double raw_log_std, double noise, double u_max, bool deterministic,
                           const SacHyperparams& hp = {});

/// log N(z; mu, sigma) - log(u_max (1 - tanh^2 z + eps)).
double squashed_log_prob(double z, double mean, double log_std, double u_max, double eps = 1e-6);

/// Tape version over a batch: returns (action/u_max, log_prob), each [B,1].
template <typename T>
struct PolicyBatch {
  ad::Var<T> action_unit;
  ad::Var<T> log_prob;
};

template <typename T>
PolicyBatch<T> sample_policy_batch(ad::Var<T> head, std::span<const T> noise, double u_max, const SacHyperparams& hp);

/// theta_bar <- eta theta + (1 - eta) theta_bar, elementwise.
template <typename T>
void polyak_update(const ad::ParamRefs<T>& online, const ad::ParamRefs<T>& target, double eta);

/// y = r + gamma (min(q1, q2) - alpha log_prob); no terminal mask.
double soft_target(double reward, double gamma, double q1, double q2, double alpha, double log_prob);

struct UpdateStats {
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  std::optional<double> actor_loss;
  double alpha = 0.0;
};

template <typename T>
class SacAgent {
public:
  SacAgent(SacNetworks<T> nets, SacHyperparams hp, double u_max, std::uint64_t update_seed);

  PolicyOutput act(const Observation& obs, std::mt19937_64& rng, bool deterministic);

  /// One gradient step: both critics; then, every policy_delay-th call, the
  /// actor, the temperature (auto mode) and the Polyak targets.
  UpdateStats update(const std::vector<const Transition*>& batch);

  /// Soft targets y for a batch using the target critics and a fresh policy sample.
  std::vector<double> target_values(const std::vector<const Transition*>& batch);

  double alpha() const;
  const SacHyperparams& hyperparams() const { return hp_; }
  double u_max() const { return u_max_; }
  SacNetworks<T>& networks() { return nets_; }
  std::int64_t critic_updates() const { return critic_updates_; }

private:
  SacNetworks<T> nets_;
  SacHyperparams hp_;
  double u_max_;
  std::mt19937_64 rng_;
  ad::Adam<T> actor_opt_;
  ad::Adam<T> critic1_opt_;
  ad::Adam<T> critic2_opt_;
  ad::Parameter<T> log_alpha_{"log_alpha", {1}};
  ad::Adam<T> alpha_opt_;
  std::int64_t critic_updates_ = 0;
};

struct TrainConfig {
  int episodes = 100;
  std::int64_t max_agent_steps = 0; // 0: episodes only
  InitSpec init = InitSpec::training();
  int checkpoint_every = 0;         // episodes; 0 disables
  std::filesystem::path checkpoint_dir;
};

struct EpisodeLog {
  int episode = 0;
  double episode_return = 0.0;
  double final_norm = 0.0;
  double alpha = 0.0;
  double actor_loss = 0.0;
  double critic1_loss = 0.0;
  double critic2_loss = 0.0;
  int steps = 0;
  bool diverged = false;
};

struct TrainLog {
  std::vector<EpisodeLog> episodes;
  std::uint64_t transitions = 0;
  std::int64_t gradient_steps = 0;
};

struct TrainSeeds {
  std::uint64_t env = 0;
  std::uint64_t policy = 0;
  std::uint64_t buffer = 0;
};

/// Interaction loop: observe, act, store, reset on truncation, then
/// gradient steps once warmup has passed.
template <typename T>
TrainLog train_loop(PdeEnv& env, SacAgent<T>& agent, const TrainConfig& cfg, const TrainSeeds& seeds,
                    const std::function<void(const EpisodeLog&)>& on_episode = {});

/// episode, return, final_norm, alpha, actor_loss, critic1_loss, critic2_loss
void write_train_csv(const std::filesystem::path& path, const TrainLog& log);

extern template class SacAgent<float>;
extern template class SacAgent<double>;

} // namespace nosac
