#include "nosac/eval.hpp"

#include <algorithm>
#include <cmath>

#include "nosac/csv.hpp"
#include "nosac/errors.hpp"

namespace nosac {

Policy zero_policy() {
  return [](const Observation&) { return 0.0; };
}

Policy expert_policy(const ExpertController& expert, double u_max) {
  return [&expert, u_max](const Observation& o) { return expert_control(expert, o.tau, o.v, o.u, u_max); };
}

template <typename T>
Policy actor_policy(ActorNetwork<T>& actor, double u_max) {
  return [&actor, u_max](const Observation& o) {
    ad::Tape<T> tape;
    const auto head = actor.forward(tape, ObsBatch{&o}, false);
    return u_max * std::tanh(double(head.value()[0]));
  };
}

template Policy actor_policy<float>(ActorNetwork<float>&, double);
template Policy actor_policy<double>(ActorNetwork<double>&, double);

double steady_state_error(std::span<const double> times, std::span<const double> norms, double window) {
  if (times.empty() || times.size() != norms.size()) throw ShapeError("steady_state_error: trace mismatch");
  const double start = times.back() - window - 1e-9;
  double acc = 0.0;
  int n = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] >= start) {
      acc += norms[k];
      ++n;
    }
  }
  return acc / n;
}

double settling_time(std::span<const double> times, std::span<const double> norms, double threshold, bool& settled) {
  if (times.empty() || times.size() != norms.size()) throw ShapeError("settling_time: trace mismatch");
  std::size_t k = norms.size();
  while (k > 0 && norms[k - 1] <= threshold) --k;
  settled = k < norms.size();
  return settled ? times[k] : times.back();
}

EvalReport evaluate(const Policy& policy, const EvalConfig& cfg) {
  PdeEnv env(cfg.env);
  const auto& grid = cfg.env.plant.grid;
  env.reset(InitSpec::fixed(cfg.v0), 0);

  EvalReport r;
  r.x.assign(grid.nodes().begin(), grid.nodes().end());
  const double agent_dt = cfg.env.plant.hold * cfg.env.plant.dt;
  auto record = [&](int k) {
    r.times.push_back(k * agent_dt);
    r.states.push_back(env.state().v);
    r.norms.push_back(l2_norm_v(env.state().v, grid));
    r.augmented_norms.push_back(env.norm_trace().back());
  };

  record(0);
  bool diverged = false;
  while (!env.done()) {
    const double u = policy(env.observe());
    const auto res = env.step(u);
    r.controls.push_back(res.applied_action);
    diverged = res.diverged;
    record(env.agent_step());
  }

  auto& m = r.metrics;
  const double n0 = r.norms.front();
  m.settling_time = settling_time(r.times, r.norms, cfg.settle_fraction * n0, m.settled);
  const double peak = *std::max_element(r.norms.begin(), r.norms.end());
  m.overshoot = n0 > 0.0 ? peak / n0 - 1.0 : peak;
  m.steady_state_error = steady_state_error(r.times, r.norms, cfg.window);
  m.episode_return = env.episode_return();
  m.final_norm = r.augmented_norms.back();
  m.diverged = diverged;
  return r;
}

void write_report(const std::filesystem::path& dir, const EvalReport& r) {
  std::filesystem::create_directories(dir);
  {
    CsvWriter csv(dir / "states.csv", {"t", "x", "v"});
    for (std::size_t k = 0; k < r.times.size(); ++k)
      for (std::size_t i = 0; i < r.x.size(); ++i) csv.row(r.times[k], r.x[i], r.states[k][i]);
  }
  {
    CsvWriter csv(dir / "control.csv", {"t", "U"});
    for (std::size_t k = 0; k < r.controls.size(); ++k) csv.row(r.times[k], r.controls[k]);
  }
  {
    CsvWriter csv(dir / "norms.csv", {"t", "norm", "augmented_norm"});
    for (std::size_t k = 0; k < r.times.size(); ++k) csv.row(r.times[k], r.norms[k], r.augmented_norms[k]);
  }
  const auto& m = r.metrics;
  CsvWriter csv(dir / "metrics.csv", {"name", "value"});
  csv.row("settled", m.settled ? 1.0 : 0.0);
  csv.row("settling_time", m.settling_time);
  csv.row("overshoot", m.overshoot);
  csv.row("steady_state_error", m.steady_state_error);
  csv.row("episode_return", m.episode_return);
  csv.row("final_norm", m.final_norm);
  csv.row("diverged", m.diverged ? 1.0 : 0.0);
}

} // namespace nosac
