#include "nosac/sac.hpp"

#include <cmath>
#include <numbers>

#include "nosac/csv.hpp"
#include "nosac/errors.hpp"
#include "nosac/seed.hpp"

namespace nosac {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

template <typename T>
ad::ParamRefs<T> trainable(const ad::ParamRefs<T>& all) {
  ad::ParamRefs<T> out;
  for (auto* p : all) {
    if (p->trainable) out.push_back(p);
  }
  return out;
}

bool finite(double x) { return std::isfinite(x); }

} // namespace

void SacHyperparams::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("sac.gamma must lie in (0, 1)");
  if (!(polyak > 0.0 && polyak <= 1.0)) throw ConfigError("sac.polyak must lie in (0, 1]");
  if (!(lr > 0.0)) throw ConfigError("sac.lr must be positive");
  if (policy_delay < 1) throw ConfigError("sac.policy_delay must be >= 1");
  if (alpha_auto ? !(alpha_init > 0.0) : !(alpha_init >= 0.0)) {
    throw ConfigError(alpha_auto ? "sac.alpha must be positive in auto mode" : "sac.alpha must be non-negative");
  }
  if (batch < 1) throw ConfigError("sac.batch must be >= 1");
  if (gradient_steps < 0) throw ConfigError("sac.gradient_steps must be >= 0");
  if (buffer_capacity < 1) throw ConfigError("sac.buffer_capacity must be >= 1");
  if (!(log_std_min < log_std_max)) throw ConfigError("sac.log_std_min must be below log_std_max");
  if (!(squash_eps >= 0.0)) throw ConfigError("sac.squash_eps must be non-negative");
}

double squashed_log_prob(double z, double mean, double log_std, double u_max, double eps) {
  const double xi = (z - mean) / std::exp(log_std);
  const double t = std::tanh(z);
  return -0.5 * xi * xi - log_std - kHalfLog2Pi - std::log(u_max * (1.0 - t * t + eps));
}

PolicyOutput squash_policy(double mean, double raw_log_std, double noise, double u_max, bool deterministic,
                           const SacHyperparams& hp) {
  PolicyOutput out;
  out.mean = mean;
  out.log_std = std::clamp(raw_log_std, hp.log_std_min, hp.log_std_max);
  out.z = deterministic ? mean : mean + std::exp(out.log_std) * noise;
  out.action = u_max * std::tanh(out.z);
  out.log_prob = squashed_log_prob(out.z, mean, out.log_std, u_max, hp.squash_eps);
  return out;
}

template <typename T>
PolicyBatch<T> sample_policy_batch(ad::Var<T> head, std::span<const T> noise, double u_max, const SacHyperparams& hp) {
  const auto& s = head.shape();
  if (s.size() != 2 || s[1] != 2 || noise.size() != s[0]) {
    throw ShapeError("policy head: expected [B,2] with B noise draws, got " + ad::shape_str(s));
  }
  auto& tape = *head.tape;
  const std::size_t b = s[0];
  auto mu = ad::slice(head, 0, 1);
  auto log_std = ad::clamp(ad::slice(head, 1, 2), static_cast<T>(hp.log_std_min), static_cast<T>(hp.log_std_max));
  auto eps = tape.constant(ad::Shape{b, 1}, noise);
  auto z = ad::add(mu, ad::mul(ad::exp(log_std), eps));
  auto t = ad::tanh(z);

  std::vector<T> base(b);
  for (std::size_t i = 0; i < b; ++i) {
    base[i] = static_cast<T>(-0.5 * double(noise[i]) * double(noise[i]) - kHalfLog2Pi - std::log(u_max));
  }
  auto jac = ad::log(ad::add_scalar(ad::scale(ad::square(t), T(-1)), static_cast<T>(1.0 + hp.squash_eps)));
  auto log_prob = ad::sub(ad::sub(tape.constant(ad::Shape{b, 1}, std::span<const T>(base)), log_std), jac);
  return {t, log_prob};
}

template PolicyBatch<float> sample_policy_batch<float>(ad::Var<float>, std::span<const float>, double,
                                                       const SacHyperparams&);
template PolicyBatch<double> sample_policy_batch<double>(ad::Var<double>, std::span<const double>, double,
                                                         const SacHyperparams&);

template <typename T>
void polyak_update(const ad::ParamRefs<T>& online, const ad::ParamRefs<T>& target, double eta) {
  if (online.size() != target.size()) throw ShapeError("polyak_update: parameter count mismatch");
  const T a = static_cast<T>(eta), b = static_cast<T>(1.0 - eta);
  for (std::size_t k = 0; k < online.size(); ++k) {
    const auto& src = online[k]->value;
    auto& dst = target[k]->value;
    if (src.shape != dst.shape) {
      throw ShapeError("polyak_update: '" + online[k]->name + "' " + ad::shape_str(src.shape) + " vs " +
                       ad::shape_str(dst.shape));
    }
    for (std::size_t i = 0; i < src.data.size(); ++i) dst.data[i] = a * src.data[i] + b * dst.data[i];
  }
}

template void polyak_update<float>(const ad::ParamRefs<float>&, const ad::ParamRefs<float>&, double);
template void polyak_update<double>(const ad::ParamRefs<double>&, const ad::ParamRefs<double>&, double);

double soft_target(double reward, double gamma, double q1, double q2, double alpha, double log_prob) {
  return reward + gamma * (std::min(q1, q2) - alpha * log_prob);
}

template <typename T>
SacNetworks<T> SacNetworks<T>::make(std::unique_ptr<ActorNetwork<T>> actor, std::unique_ptr<CriticNetwork<T>> critic1,
                                    std::unique_ptr<CriticNetwork<T>> critic2) {
  SacNetworks n;
  n.target1 = critic1->clone();
  n.target2 = critic2->clone();
  n.actor = std::move(actor);
  n.critic1 = std::move(critic1);
  n.critic2 = std::move(critic2);
  return n;
}

template <typename T>
NetworkWeights SacNetworks<T>::export_weights() {
  NetworkWeights all;
  auto append = [&](const ad::ParamRefs<T>& p, const std::string& role) {
    auto w = export_params(p, role + ".");
    for (auto& t : w.tensors) all.tensors.push_back(std::move(t));
  };
  append(actor->params(), "actor");
  append(critic1->params(), "critic1");
  append(critic2->params(), "critic2");
  append(target1->params(), "target1");
  append(target2->params(), "target2");
  return all;
}

template <typename T>
void SacNetworks<T>::import_weights(const NetworkWeights& w) {
  import_params(w, actor->params(), "actor.");
  import_params(w, critic1->params(), "critic1.");
  import_params(w, critic2->params(), "critic2.");
  import_params(w, target1->params(), "target1.");
  import_params(w, target2->params(), "target2.");
}

template struct SacNetworks<float>;
template struct SacNetworks<double>;

template <typename T>
SacAgent<T>::SacAgent(SacNetworks<T> nets, SacHyperparams hp, double u_max, std::uint64_t update_seed)
    : nets_(std::move(nets)),
      hp_(hp),
      u_max_(u_max),
      rng_(update_seed),
      actor_opt_(trainable(nets_.actor->params()), ad::AdamConfig{hp.lr}),
      critic1_opt_(trainable(nets_.critic1->params()), ad::AdamConfig{hp.lr}),
      critic2_opt_(trainable(nets_.critic2->params()), ad::AdamConfig{hp.lr}) {
  hp_.validate();
  if (!(u_max > 0.0)) throw ConfigError("SacAgent: u_max must be positive");
  log_alpha_.value.data[0] = static_cast<T>(std::log(hp_.alpha_init));
  alpha_opt_ = ad::Adam<T>({&log_alpha_}, ad::AdamConfig{hp.lr});
}

template <typename T>
double SacAgent<T>::alpha() const {
  return hp_.alpha_auto ? std::exp(double(log_alpha_.value.data[0])) : hp_.alpha_init;
}

template <typename T>
PolicyOutput SacAgent<T>::act(const Observation& obs, std::mt19937_64& rng, bool deterministic) {
  ad::Tape<T> tape;
  auto head = nets_.actor->forward(tape, ObsBatch{&obs}, false);
  const auto h = head.value();
  std::normal_distribution<double> normal;
  const double noise = deterministic ? 0.0 : normal(rng);
  return squash_policy(double(h[0]), double(h[1]), noise, u_max_, deterministic, hp_);
}

template <typename T>
std::vector<double> SacAgent<T>::target_values(const std::vector<const Transition*>& batch) {
  const std::size_t b = batch.size();
  if (b == 0) throw ShapeError("target_values: empty batch");
  ObsBatch next(b);
  for (std::size_t i = 0; i < b; ++i) next[i] = &batch[i]->s_next;

  std::normal_distribution<double> normal;
  std::vector<T> noise(b);
  for (auto& n : noise) n = static_cast<T>(normal(rng_));

  ad::Tape<T> tape;
  auto head = nets_.actor->forward(tape, next, false);
  auto pol = sample_policy_batch<T>(head, noise, u_max_, hp_);
  auto a_next = ad::detach(pol.action_unit);
  const auto q1 = nets_.target1->forward(tape, next, a_next, false).value();
  const auto q2 = nets_.target2->forward(tape, next, a_next, false).value();
  const auto lp = pol.log_prob.value();
  const double a = alpha();
  std::vector<double> y(b);
  for (std::size_t i = 0; i < b; ++i) {
    y[i] = soft_target(batch[i]->r, hp_.gamma, double(q1[i]), double(q2[i]), a, double(lp[i]));
  }
  return y;
}

template <typename T>
UpdateStats SacAgent<T>::update(const std::vector<const Transition*>& batch) {
  const std::size_t b = batch.size();
  const auto y = target_values(batch);

  ObsBatch obs(b);
  std::vector<T> a_unit(b), y_t(b);
  for (std::size_t i = 0; i < b; ++i) {
    obs[i] = &batch[i]->s;
    a_unit[i] = static_cast<T>(batch[i]->a / u_max_);
    y_t[i] = static_cast<T>(y[i]);
  }

  UpdateStats stats;
  auto critic_step = [&](CriticNetwork<T>& critic, ad::Adam<T>& opt) {
    ad::Tape<T> tape;
    auto a = tape.constant(ad::Shape{b, 1}, std::span<const T>(a_unit));
    auto q = critic.forward(tape, obs, a, true);
    auto target = tape.constant(ad::Shape{b, 1}, std::span<const T>(y_t));
    auto loss = ad::mean(ad::square(ad::sub(q, target)));
    opt.zero_grad();
    tape.backward(loss);
    opt.step();
    return double(loss.item());
  };
  stats.critic1_loss = critic_step(*nets_.critic1, critic1_opt_);
  stats.critic2_loss = critic_step(*nets_.critic2, critic2_opt_);
  ++critic_updates_;

  if (critic_updates_ % hp_.policy_delay == 0) {
    std::normal_distribution<double> normal;
    std::vector<T> noise(b);
    for (auto& n : noise) n = static_cast<T>(normal(rng_));
    const double a_coef = alpha();

    ad::Tape<T> tape;
    auto head = nets_.actor->forward(tape, obs, true);
    auto pol = sample_policy_batch<T>(head, noise, u_max_, hp_);
    auto q1 = nets_.critic1->forward(tape, obs, pol.action_unit, false);
    auto q2 = nets_.critic2->forward(tape, obs, pol.action_unit, false);
    auto loss = ad::mean(ad::sub(ad::scale(pol.log_prob, static_cast<T>(a_coef)), ad::minimum(q1, q2)));
    actor_opt_.zero_grad();
    tape.backward(loss);
    actor_opt_.step();
    stats.actor_loss = double(loss.item());

    if (hp_.alpha_auto) {
      // d/d(log alpha) of -mean(log_alpha (log_prob + target_entropy))
      double g = 0.0;
      for (T lp : pol.log_prob.value()) g += double(lp) + hp_.target_entropy;
      log_alpha_.grad.data[0] = static_cast<T>(-g / double(b));
      alpha_opt_.step();
    }

    polyak_update(nets_.critic1->params(), nets_.target1->params(), hp_.polyak);
    polyak_update(nets_.critic2->params(), nets_.target2->params(), hp_.polyak);
  }
  stats.alpha = alpha();
  return stats;
}

template class SacAgent<float>;
template class SacAgent<double>;

template <typename T>
TrainLog train_loop(PdeEnv& env, SacAgent<T>& agent, const TrainConfig& cfg, const TrainSeeds& seeds,
                    const std::function<void(const EpisodeLog&)>& on_episode) {
  const auto& hp = agent.hyperparams();
  ReplayBuffer buffer(hp.buffer_capacity);
  std::mt19937_64 policy_rng(seeds.policy);
  std::mt19937_64 buffer_rng(seeds.buffer);
  std::uniform_real_distribution<double> warmup_action(-agent.u_max(), agent.u_max());

  auto checkpoint = [&](const std::string& name) {
    if (cfg.checkpoint_dir.empty()) return std::filesystem::path{};
    std::filesystem::create_directories(cfg.checkpoint_dir);
    const auto path = cfg.checkpoint_dir / name;
    save_weights(path, agent.networks().export_weights());
    return path;
  };

  TrainLog log;
  std::int64_t total = 0;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    if (cfg.max_agent_steps > 0 && total >= cfg.max_agent_steps) break;
    env.reset(cfg.init, stream_seed(seeds.env, static_cast<std::uint64_t>(ep)));
    EpisodeLog row;
    row.episode = ep;
    double c1 = 0.0, c2 = 0.0, al = 0.0;
    int n_updates = 0, n_actor = 0;
    StepResult last;

    while (!env.done()) {
      Observation s = env.observe();
      const bool warm = static_cast<std::size_t>(total) < hp.warmup;
      const double a = warm ? warmup_action(policy_rng) : agent.act(s, policy_rng, false).action;
      last = env.step(a);
      buffer.push(Transition{std::move(s), last.applied_action, last.reward, env.observe(), last.truncated});
      ++total;
      ++row.steps;

      if (static_cast<std::size_t>(total) >= hp.warmup) {
        for (int g = 0; g < hp.gradient_steps; ++g) {
          const auto stats = agent.update(buffer.sample(hp.batch, buffer_rng));
          ++log.gradient_steps;
          const bool ok = finite(stats.critic1_loss) && finite(stats.critic2_loss) &&
                          (!stats.actor_loss || finite(*stats.actor_loss));
          if (!ok) {
            const auto path = checkpoint("diverged.now1");
            throw Error("training aborted: non-finite loss at episode " + std::to_string(ep) + ", agent step " +
                        std::to_string(total) + " (critic1=" + format_number(stats.critic1_loss) +
                        ", critic2=" + format_number(stats.critic2_loss) + ")" +
                        (path.empty() ? "" : "; diagnostic weights at " + path.string()));
          }
          c1 += stats.critic1_loss;
          c2 += stats.critic2_loss;
          ++n_updates;
          if (stats.actor_loss) {
            al += *stats.actor_loss;
            ++n_actor;
          }
        }
      }
      if (cfg.max_agent_steps > 0 && total >= cfg.max_agent_steps) break;
    }

    row.episode_return = env.episode_return();
    row.final_norm = env.norm_trace().back();
    row.diverged = last.diverged;
    row.alpha = agent.alpha();
    row.critic1_loss = n_updates ? c1 / n_updates : 0.0;
    row.critic2_loss = n_updates ? c2 / n_updates : 0.0;
    row.actor_loss = n_actor ? al / n_actor : 0.0;
    log.episodes.push_back(row);
    if (on_episode) on_episode(row);
    if (cfg.checkpoint_every > 0 && (ep + 1) % cfg.checkpoint_every == 0) {
      checkpoint("checkpoint_ep" + std::to_string(ep + 1) + ".now1");
    }
  }
  log.transitions = buffer.pushed();
  return log;
}

template TrainLog train_loop<float>(PdeEnv&, SacAgent<float>&, const TrainConfig&, const TrainSeeds&,
                                    const std::function<void(const EpisodeLog&)>&);
template TrainLog train_loop<double>(PdeEnv&, SacAgent<double>&, const TrainConfig&, const TrainSeeds&,
                                     const std::function<void(const EpisodeLog&)>&);

void write_train_csv(const std::filesystem::path& path, const TrainLog& log) {
  CsvWriter csv(path, {"episode", "return", "final_norm", "alpha", "actor_loss", "critic1_loss", "critic2_loss"});
  for (const auto& e : log.episodes) {
    csv.row(e.episode, e.episode_return, e.final_norm, e.alpha, e.actor_loss, e.critic1_loss, e.critic2_loss);
  }
}

} // namespace nosac
