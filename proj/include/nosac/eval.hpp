#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nosac/env.hpp"
#include "nosac/expert.hpp"
#include "nosac/sac.hpp"

namespace nosac {

/// Deterministic feedback law evaluated at agent-step boundaries.
using Policy = std::function<double(const Observation&)>;

Policy zero_policy();
Policy expert_policy(const ExpertController& expert, double u_max);
/// u_max tanh(mean) from the actor head.
template <typename T>
Policy actor_policy(ActorNetwork<T>& actor, double u_max);

struct EvalConfig {
  EnvConfig env;
  double v0 = 6.0;
  double settle_fraction = 0.05; // settling threshold as a fraction of ||v0||
  double window = 1.0;           // seconds for the steady-state error
};

struct EvalMetrics {
  bool settled = false;
  double settling_time = 0.0;     // horizon when not settled
  double overshoot = 0.0;         // max ||v|| / ||v0|| - 1, or max ||v|| when v0 = 0
  double steady_state_error = 0.0;
  double episode_return = 0.0;
  double final_norm = 0.0;        // augmented ||s_T||
  bool diverged = false;
};

/// Traces share the agent-step time base t_k = k hold dt.
struct EvalReport {
  std::vector<double> x;
  std::vector<double> times;
  std::vector<std::vector<double>> states; // v(., t_k)
  std::vector<double> controls;            // U held on [t_k, t_k+1); one fewer than times
  std::vector<double> norms;               // ||v(., t_k)||
  std::vector<double> augmented_norms;     // ||s(t_k)|| in the reward's norm
  EvalMetrics metrics;
};

EvalReport evaluate(const Policy& policy, const EvalConfig& cfg);

/// Mean of the norm samples with t >= t_end - window.
double steady_state_error(std::span<const double> times, std::span<const double> norms, double window);

/// Earliest sample time after which every norm stays <= threshold. When the
/// final sample is above it, `settled` is false and the horizon is returned.
double settling_time(std::span<const double> times, std::span<const double> norms, double threshold, bool& settled);

/// Writes states.csv (t, x, v), control.csv (t, U), norms.csv (t, norm,
/// augmented_norm) and metrics.csv (name, value) into `dir`.
void write_report(const std::filesystem::path& dir, const EvalReport& report);

} // namespace nosac
