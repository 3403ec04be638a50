#include <doctest.h>

#include <fstream>
#include <numbers>
#include <sstream>

#include "nosac/errors.hpp"
#include "nosac/networks.hpp"
#include "nosac/replay.hpp"
#include "nosac/sac.hpp"
#include "nosac/seed.hpp"
#include "support.hpp"

using namespace nosac;

namespace {

constexpr double kUmax = 30.0;

// Q(s, a) = -(a - target)^2 on the unit action; no parameters.
class QuadraticCritic final : public CriticNetwork<double> {
public:
  explicit QuadraticCritic(double target) : target_(target) {}
  ad::Var<double> forward(ad::Tape<double>&, const ObsBatch&, ad::Var<double> a, bool) override {
    return ad::scale(ad::square(ad::add_scalar(a, -target_)), -1.0);
  }
  ad::ParamRefs<double> params() override { return {}; }
  std::unique_ptr<CriticNetwork<double>> clone() const override { return std::make_unique<QuadraticCritic>(*this); }

private:
  double target_;
};

class ActionBlindCritic final : public CriticNetwork<double> {
public:
  ad::Var<double> forward(ad::Tape<double>&, const ObsBatch&, ad::Var<double> a, bool) override {
    return ad::scale(a, 0.0);
  }
  ad::ParamRefs<double> params() override { return {}; }
  std::unique_ptr<CriticNetwork<double>> clone() const override { return std::make_unique<ActionBlindCritic>(); }
};

Observation random_obs(std::mt19937_64& rng, std::size_t nx = 3) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Observation o{std::vector<double>(nx, 0.7), std::vector<double>(nx), std::vector<double>(nx * nx)};
  for (auto& x : o.v) x = d(rng);
  for (auto& x : o.u) x = d(rng);
  return o;
}

std::vector<Transition> random_transitions(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<Transition> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(Transition{random_obs(rng), kUmax * d(rng), d(rng), random_obs(rng), false});
  }
  return out;
}

std::vector<const Transition*> pointers(const std::vector<Transition>& t) {
  std::vector<const Transition*> p;
  for (const auto& x : t) p.push_back(&x);
  return p;
}

double mean_raw_log_std(ActorNetwork<double>& actor, const std::vector<Transition>& batch) {
  ObsBatch obs;
  for (const auto& t : batch) obs.push_back(&t.s);
  ad::Tape<double> tape;
  const auto h = actor.forward(tape, obs, false).value();
  double acc = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) acc += h[2 * b + 1];
  return acc / double(batch.size());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

} // namespace

TEST_CASE("squashed gaussian limits") {
  const auto tiny = squash_policy(0.0, -20.0, 1.3, kUmax, false);
  CHECK(std::abs(tiny.action) < 1e-6);
  CHECK(squash_policy(50.0, 0.0, 0.0, kUmax, true).action == doctest::Approx(kUmax));
  CHECK(squash_policy(-50.0, 0.0, 0.0, kUmax, true).action == doctest::Approx(-kUmax));
  CHECK(squash_policy(0.1, 7.0, 0.0, kUmax, false).log_std == 2.0);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int k = 0; k < 10000; ++k) {
    const double a = squash_policy(3.0 * n(rng), 2.0, n(rng), kUmax, false).action;
    CHECK(std::abs(a) <= kUmax);
  }
}

TEST_CASE("squashed log-density agrees with a numerical change-of-variables oracle") {
  const double mu = 0.3, sigma = 0.8;
  auto density = [&](double a) {
    const double y = a / kUmax;
    const double z = std::atanh(y);
    const double xi = (z - mu) / sigma;
    return std::exp(-0.5 * xi * xi) / (sigma * std::sqrt(2.0 * std::numbers::pi)) / (kUmax * (1.0 - y * y));
  };
  // Midpoint rule in a.
  const int cells = 400000;
  const double h = 2.0 * kUmax / cells;
  double mass = 0.0, expected_log = 0.0;
  for (int k = 0; k < cells; ++k) {
    const double a = -kUmax + (k + 0.5) * h;
    const double p = density(a);
    mass += p * h;
    if (p > 0.0) expected_log += p * std::log(p) * h;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));

  std::mt19937_64 rng(42);
  std::normal_distribution<double> n;
  double mc = 0.0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) mc += squash_policy(mu, std::log(sigma), n(rng), kUmax, false).log_prob;
  mc /= draws;
  const double ratio = std::exp(mc) / std::exp(expected_log);
  CHECK(std::abs(ratio - 1.0) <= 0.02);
}

TEST_CASE("tape log-probability matches the scalar formula and its gradient") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> head(10), noise(5);
  for (auto& x : head) x = 0.5 * n(rng);
  for (auto& x : noise) x = n(rng);
  ad::Tape<double> tape;
  auto pol = sample_policy_batch<double>(tape.constant({5, 2}, std::span<const double>(head)), noise, kUmax, {});
  for (std::size_t b = 0; b < 5; ++b) {
    const auto ref = squash_policy(head[2 * b], head[2 * b + 1], noise[b], kUmax, false);
    CHECK(pol.log_prob.value()[b] == doctest::Approx(ref.log_prob).epsilon(1e-12));
    CHECK(pol.action_unit.value()[b] * kUmax == doctest::Approx(ref.action).epsilon(1e-12));
  }

  ad::Parameter<double> p("head", {5, 2});
  p.value.data = head;
  const double err = testing::gradcheck(
      {&p},
      [&](ad::Tape<double>&, const std::vector<testing::VarD>& v) {
        auto r = sample_policy_batch<double>(v[0], noise, kUmax, {});
        return ad::concat(r.action_unit, r.log_prob);
      },
      9);
  CHECK(err <= 1e-4);
}

TEST_CASE("gaussian entropy identity") {
  CHECK(0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) == doctest::Approx(1.41894).epsilon(1e-5));
  // -E[log N(z; 0, 1)] estimated through the squashed density plus its Jacobian term.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  double acc = 0.0;
  const int draws = 200000;
  for (int k = 0; k < draws; ++k) {
    const double z = n(rng);
    const double t = std::tanh(z);
    acc -= squashed_log_prob(z, 0.0, 0.0, 1.0, 0.0) + std::log(1.0 - t * t);
  }
  CHECK(acc / draws == doctest::Approx(1.41894).epsilon(5e-3));
}

TEST_CASE("soft target arithmetic") {
  CHECK(soft_target(1.0, 0.99, 2.0, 3.0, 0.0, -4.0) == doctest::Approx(2.98));
  CHECK(soft_target(1.0, 0.99, 2.0, 2.0, 0.0, -4.0) == soft_target(1.0, 0.99, 2.0, 2.0, 0.0, 17.0));
  CHECK(soft_target(0.5, 0.9, 1.5, -2.0, 0.2, 0.7) == soft_target(0.5, 0.9, -2.0, 1.5, 0.2, 0.7));
  CHECK(soft_target(0.0, 0.5, 1.0, 1.0, 2.0, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("polyak averaging") {
  ad::Parameter<double> online("w", {2}), target("w", {2});
  online.value.data = {1.0, 1.0};
  target.value.data = {0.0, 0.0};
  polyak_update<double>({&online}, {&target}, 0.003);
  CHECK(target.value.data[0] == doctest::Approx(0.003));
  polyak_update<double>({&online}, {&target}, 0.0);
  CHECK(target.value.data[0] == doctest::Approx(0.003));
  polyak_update<double>({&online}, {&target}, 1.0);
  CHECK(target.value.data[1] == 1.0);
  ad::Parameter<double> other("v", {3});
  CHECK_THROWS_AS(polyak_update<double>({&online}, {&other}, 0.5), ShapeError);
}

TEST_CASE("replay buffer") {
  ReplayBuffer buf(5);
  for (int k = 0; k < 6; ++k) buf.push(Transition{{}, double(k), 0.0, {}, false});
  CHECK(buf.size() == 5);
  CHECK(buf.pushed() == 6);
  for (std::size_t i = 0; i < 5; ++i) CHECK(buf.at(i).a == double(i + 1));

  std::mt19937_64 r1(7), r2(7);
  const auto s1 = buf.sample_indices(100, r1);
  CHECK(s1 == buf.sample_indices(100, r2));
  for (auto* t : buf.sample(50, r1)) CHECK(t->a >= 1.0);

  // Chi-square goodness of fit of uniform sampling, 9 degrees of freedom at 5%.
  ReplayBuffer small(10);
  for (int k = 0; k < 10; ++k) small.push(Transition{{}, double(k), 0.0, {}, false});
  std::mt19937_64 rng(11);
  std::vector<double> counts(10, 0.0);
  for (auto i : small.sample_indices(100000, rng)) counts[i] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(chi2 < 16.919);

  ReplayBuffer empty(3);
  CHECK_THROWS_AS(empty.sample(1, rng), ProtocolError);
}

TEST_CASE("critic loss gradient matches finite differences on a miniature critic") {
  MlpCritic<double> critic(3, {6}, 5);
  auto data = random_transitions(8, 2);
  ObsBatch obs;
  std::vector<double> a, y;
  for (const auto& t : data) {
    obs.push_back(&t.s);
    a.push_back(t.a / kUmax);
    y.push_back(t.r);
  }
  auto params = critic.params();
  const double err = testing::gradcheck(
      params,
      [&](ad::Tape<double>& tape, const std::vector<testing::VarD>&) {
        auto q = critic.forward(tape, obs, tape.constant({8, 1}, std::span<const double>(a)), true);
        return ad::mean(ad::square(ad::sub(q, tape.constant({8, 1}, std::span<const double>(y)))));
      },
      3, 1e-6); // a small step keeps the ReLU pre-activations on one side of the kink
  CHECK(err <= 1e-4);
}

TEST_CASE("critic loss is invariant to batch order") {
  auto data = random_transitions(16, 3);
  auto forward = pointers(data);
  auto backward = forward;
  std::reverse(backward.begin(), backward.end());
  MlpCritic<double> critic(3, {8}, 9);
  ObsBatch o1, o2;
  std::vector<double> a1, a2, y1, y2;
  for (auto* t : forward) o1.push_back(&t->s), a1.push_back(t->a / kUmax), y1.push_back(t->r);
  for (auto* t : backward) o2.push_back(&t->s), a2.push_back(t->a / kUmax), y2.push_back(t->r);
  auto loss = [&](const ObsBatch& o, const std::vector<double>& av, const std::vector<double>& yv) {
    ad::Tape<double> tape;
    auto q = critic.forward(tape, o, tape.constant({16, 1}, std::span<const double>(av)), false);
    return ad::mean(ad::square(ad::sub(q, tape.constant({16, 1}, std::span<const double>(yv))))).item();
  };
  CHECK(loss(o1, a1, y1) == doctest::Approx(loss(o2, a2, y2)).epsilon(1e-14));
}

TEST_CASE("zero temperature with an action-blind critic gives no policy gradient") {
  SacHyperparams hp;
  hp.alpha_auto = false;
  hp.alpha_init = 0.0;
  hp.policy_delay = 1;
  auto nets = SacNetworks<double>::make(std::make_unique<MlpActor<double>>(3, std::vector<std::size_t>{8}, 1),
                                        std::make_unique<ActionBlindCritic>(), std::make_unique<ActionBlindCritic>());
  SacAgent<double> agent(std::move(nets), hp, kUmax, 3);
  const auto before = agent.networks().export_weights();
  auto data = random_transitions(32, 4);
  const auto stats = agent.update(pointers(data));
  REQUIRE(stats.actor_loss);
  const auto after = agent.networks().export_weights();
  for (std::size_t k = 0; k < before.tensors.size(); ++k) CHECK(before.tensors[k].data == after.tensors[k].data);
}

TEST_CASE("entropy pressure widens the policy against a frozen quadratic critic") {
  SacHyperparams hp;
  hp.alpha_auto = false;
  hp.alpha_init = 50.0;
  hp.policy_delay = 1;
  hp.lr = 1e-2;
  auto nets = SacNetworks<double>::make(std::make_unique<MlpActor<double>>(3, std::vector<std::size_t>{8}, 2),
                                        std::make_unique<QuadraticCritic>(0.0),
                                        std::make_unique<QuadraticCritic>(0.0));
  SacAgent<double> agent(std::move(nets), hp, kUmax, 6);
  auto data = random_transitions(64, 5);
  const double before = mean_raw_log_std(*agent.networks().actor, data);
  agent.update(pointers(data));
  agent.update(pointers(data));
  CHECK(mean_raw_log_std(*agent.networks().actor, data) > before);
}

TEST_CASE("actor moves toward the maximiser of a frozen critic") {
  SacHyperparams hp;
  hp.alpha_auto = false;
  hp.alpha_init = 1e-3;
  hp.policy_delay = 1;
  hp.lr = 3e-3;
  auto nets = SacNetworks<double>::make(std::make_unique<MlpActor<double>>(3, std::vector<std::size_t>{16}, 3),
                                        std::make_unique<QuadraticCritic>(0.5),
                                        std::make_unique<QuadraticCritic>(0.5));
  SacAgent<double> agent(std::move(nets), hp, kUmax, 7);
  auto data = random_transitions(64, 6);
  std::mt19937_64 rng(1);
  auto mean_action = [&] {
    double acc = 0.0;
    for (const auto& t : data) acc += agent.act(t.s, rng, true).action;
    return acc / double(data.size()) / kUmax;
  };
  const double start = mean_action();
  for (int k = 0; k < 300; ++k) agent.update(pointers(data));
  const double end = mean_action();
  CHECK(std::abs(end - 0.5) < 0.1);
  CHECK(std::abs(end - 0.5) < std::abs(start - 0.5));
}

TEST_CASE("auto temperature falls when entropy exceeds its target") {
  SacHyperparams hp;
  hp.policy_delay = 1;
  hp.lr = 1e-2;
  SacAgent<double> agent(make_mlp_networks<double>(3, {8}, 4), hp, kUmax, 8);
  auto data = random_transitions(32, 7);
  const double before = agent.alpha();
  agent.update(pointers(data));
  // A fresh policy spans the whole actuator range: entropy far above -1.
  CHECK(agent.alpha() < before);
}

TEST_CASE("targets follow the critics only on the delayed cadence") {
  SacHyperparams hp;
  hp.batch = 16;
  SacAgent<double> agent(make_mlp_networks<double>(3, {8}, 5), hp, kUmax, 9);
  auto data = random_transitions(16, 8);
  auto target_weights = [&] { return export_params(agent.networks().target1->params()).tensors[0].data; };
  const auto t0 = target_weights();
  auto s1 = agent.update(pointers(data));
  CHECK_FALSE(s1.actor_loss);
  CHECK(target_weights() == t0);
  auto s2 = agent.update(pointers(data));
  CHECK(s2.actor_loss);
  CHECK(target_weights() != t0);
}

TEST_CASE("training loop bookkeeping") {
  EnvConfig env_cfg;
  env_cfg.plant = PlantConfig::paper(DelayFunction::cosine4(0.7, 0.3));
  env_cfg.divergence_limit = 1e300;

  SUBCASE("100 episodes store 2500 transitions; warmup beyond the run never updates") {
    SacHyperparams hp;
    hp.warmup = 1000000;
    SacAgent<float> agent(make_mlp_networks<float>(21, {32}, 1), hp, kUmax, 2);
    const auto before = agent.networks().export_weights();
    PdeEnv env(env_cfg);
    TrainConfig tc;
    const TrainSeeds seeds{11, 12, 13};
    const auto log = train_loop(env, agent, tc, seeds);
    CHECK(log.transitions == 2500);
    CHECK(log.gradient_steps == 0);
    const auto after = agent.networks().export_weights();
    for (std::size_t k = 0; k < before.tensors.size(); ++k) CHECK(before.tensors[k].data == after.tensors[k].data);

    // Replaying the same uniform action stream without an agent gives the same returns.
    PdeEnv replay(env_cfg);
    std::mt19937_64 policy_rng(seeds.policy);
    std::uniform_real_distribution<double> uniform(-kUmax, kUmax);
    for (int ep = 0; ep < 100; ++ep) {
      replay.reset(InitSpec::training(), stream_seed(seeds.env, std::uint64_t(ep)));
      while (!replay.done()) replay.step(uniform(policy_rng));
      CHECK(replay.episode_return() == log.episodes[std::size_t(ep)].episode_return);
      CHECK(log.episodes[std::size_t(ep)].episode_return <= 300.0);
    }
  }

  SUBCASE("same seeds give identical telemetry") {
    auto run = [&](const std::filesystem::path& csv) {
      SacHyperparams hp;
      hp.warmup = 40;
      hp.batch = 32;
      SacAgent<float> agent(make_mlp_networks<float>(21, {32}, 3), hp, kUmax, 4);
      PdeEnv env(env_cfg);
      TrainConfig tc;
      tc.episodes = 4;
      write_train_csv(csv, train_loop(env, agent, tc, TrainSeeds{1, 2, 3}));
    };
    const auto dir = testing::scratch_dir("train_det");
    run(dir / "a.csv");
    run(dir / "b.csv");
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.csv").rfind("episode,return,final_norm,alpha,actor_loss,critic1_loss,critic2_loss\n", 0) == 0);
  }
}

TEST_CASE("hyperparameter validation") {
  SacHyperparams hp;
  hp.gamma = 1.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = {};
  hp.policy_delay = 0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = {};
  hp.alpha_init = 0.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp.alpha_auto = false;
  CHECK_NOTHROW(hp.validate());
}
