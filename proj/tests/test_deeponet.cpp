#include <doctest.h>

#include <algorithm>
#include <numbers>

#include "nosac/dataset.hpp"
#include "nosac/deeponet.hpp"
#include "nosac/env.hpp"
#include "nosac/errors.hpp"
#include "nosac/expert.hpp"
#include "nosac/pretrain.hpp"
#include "support.hpp"

using namespace nosac;
using namespace nosac::deeponet_shape;

namespace {

template <typename T>
void zero_all(DeepONet<T>& net) {
  for (auto* p : net.params()) std::fill(p->value.data.begin(), p->value.data.end(), T(0));
}

BranchInput probe_input(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  std::vector<double> tau(21), v(21), u(441);
  for (auto& x : tau) x = 0.5 + 0.1 * std::abs(d(rng));
  for (auto& x : v) x = d(rng);
  for (auto& x : u) x = d(rng);
  return build_branch_input(tau, v, u);
}

} // namespace

TEST_CASE("branch input channels") {
  const SpatialGrid g(21);
  SUBCASE("zero state") {
    const auto tau = DelayFunction::cosine4(0.7, 0.3).sample(g);
    const auto in = build_branch_input(tau, std::vector<double>(21, 0.0), std::vector<double>(441, 0.0));
    for (std::size_t i = 0; i < 21; ++i) {
      for (std::size_t j = 0; j < 21; ++j) {
        CHECK(in.at(0, i, j) == tau[i]);
        CHECK(in.at(1, i, j) == 0.0);
        CHECK(in.at(2, i, j) == 0.0);
      }
    }
  }
  SUBCASE("constant delay") {
    const auto in = build_branch_input(std::vector<double>(21, 0.7), std::vector<double>(21, 1.0),
                                       std::vector<double>(441, 0.0));
    for (std::size_t k = 0; k < 441; ++k) CHECK(in.data[k] == 0.7);
  }
  SUBCASE("u column r = 1 carries the boundary value after a rollout") {
    EnvConfig cfg;
    cfg.plant = PlantConfig::paper(DelayFunction::cosine4(0.7, 0.3));
    PdeEnv env(cfg);
    env.reset(InitSpec::fixed(6.0), 0);
    env.step(-5.0);
    env.step(3.0);
    const auto obs = env.observe();
    const auto in = build_branch_input(obs.tau, obs.v, obs.u);
    for (std::size_t i = 0; i < 21; ++i) CHECK(in.at(2, i, 20) == obs.v[20]);
  }
  SUBCASE("other resolutions are rejected") {
    CHECK_THROWS_AS(build_branch_input(std::vector<double>(11), std::vector<double>(11), std::vector<double>(121)),
                    ShapeError);
  }
}

TEST_CASE("network shape contract") {
  DeepONet<double> net(1);
  CHECK(net.fc_w.value.shape[0] == 1152);
  CHECK(kFlatten == 1152);
  ad::Tape<double> tape;
  auto trunk = net.encode_trunk(tape);
  CHECK(trunk.shape() == ad::Shape{441, 256});
  const auto in = probe_input(3);
  auto x = branch_constant(tape, in);
  CHECK(net.encode_branch(tape, x).shape() == ad::Shape{1, 256});
  CHECK(net.features(tape, x).shape() == ad::Shape{1, 441});
  std::vector<double> wrong(20 * 20 * 3);
  CHECK_THROWS_AS(net.encode_branch(tape, tape.constant({1, 20, 20, 3}, std::span<const double>(wrong))), ShapeError);
}

TEST_CASE("branch encoder with zero input and zero biases is zero") {
  DeepONet<double> net(2);
  for (auto* p : {&net.conv1_b, &net.conv2_b, &net.fc_b}) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  ad::Tape<double> tape;
  std::vector<double> zeros(21 * 21 * 3, 0.0);
  const auto out = net.encode_branch(tape, tape.constant({1, 21, 21, 3}, std::span<const double>(zeros))).value();
  for (double x : out) CHECK(x == 0.0);
}

TEST_CASE("forward is a pure function of input and weights") {
  DeepONet<float> net(9);
  const auto in = probe_input(4);
  CHECK(net.features(in) == net.features(in));
  CHECK(net.control(in) == net.control(in));
}

TEST_CASE("trunk with zero weights broadcasts its bias") {
  DeepONet<double> net(3);
  std::fill(net.trunk1_w.value.data.begin(), net.trunk1_w.value.data.end(), 0.0);
  std::fill(net.trunk2_w.value.data.begin(), net.trunk2_w.value.data.end(), 0.0);
  for (std::size_t k = 0; k < 256; ++k) net.trunk2_b.value.data[k] = 0.01 * double(k);
  ad::Tape<double> tape;
  const auto t = net.encode_trunk(tape).value();
  for (std::size_t q = 0; q < 441; ++q) {
    for (std::size_t k = 0; k < 256; k += 37) CHECK(t[q * 256 + k] == doctest::Approx(0.01 * double(k)));
  }
}

TEST_CASE("combine is the branch-trunk inner product") {
  ad::Tape<double> tape;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> trunk(441 * 256);
  for (auto& x : trunk) x = d(rng);
  auto t = tape.constant({441, 256}, std::span<const double>(trunk));

  std::vector<double> e1(256, 0.0);
  e1[1] = 1.0;
  const auto f = combine(tape.constant({1, 256}, std::span<const double>(e1)), t).value();
  for (std::size_t j = 0; j < 441; ++j) CHECK(f[j] == trunk[j * 256 + 1]);

  std::vector<double> b(256);
  for (auto& x : b) x = d(rng);
  double c = 0.0;
  for (double x : b) c += x * x;
  std::vector<double> rows(441 * 256);
  for (std::size_t j = 0; j < 441; ++j) std::copy(b.begin(), b.end(), rows.begin() + long(j * 256));
  const auto same = combine(tape.constant({1, 256}, std::span<const double>(b)),
                            tape.constant({441, 256}, std::span<const double>(rows)))
                        .value();
  for (double x : same) CHECK(x == doctest::Approx(c));

  std::vector<double> scaled(b);
  for (auto& x : scaled) x *= 2.5;
  const auto f1 = combine(tape.constant({1, 256}, std::span<const double>(b)), t).value();
  const auto f2 = combine(tape.constant({1, 256}, std::span<const double>(scaled)), t).value();
  for (std::size_t j = 0; j < 441; ++j) CHECK(f2[j] == doctest::Approx(2.5 * f1[j]));
}

TEST_CASE("control head") {
  DeepONet<double> net(5);
  ad::Tape<double> tape;
  std::vector<double> zeros(441, 0.0);
  net.head_b.value.data[0] = 0.0;
  CHECK(net.control_head(tape, tape.constant({1, 441}, std::span<const double>(zeros))).item() == 0.0);

  // Quadrature weights as head weights realise the double integral of g(x, r) = x r.
  const SpatialGrid g(21);
  const auto w = g.trapezoid_weights();
  std::vector<double> samples(441);
  for (std::size_t i = 0; i < 21; ++i) {
    for (std::size_t j = 0; j < 21; ++j) {
      net.head_w.value.data[i * 21 + j] = w[i] * w[j];
      samples[i * 21 + j] = g.node(i) * g.node(j);
    }
  }
  const double integral = net.control_head(tape, tape.constant({1, 441}, std::span<const double>(samples))).item();
  CHECK(integral == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("weights file round trip is bit exact") {
  DeepONet<float> net(6);
  const auto in = probe_input(5);
  const auto dir = testing::scratch_dir("deeponet_io");
  save_weights(dir / "net.now1", net.export_weights());
  DeepONet<float> other(99);
  other.import_weights(load_weights(dir / "net.now1"));
  CHECK(other.features(in) == net.features(in));
  CHECK(other.control(in) == net.control(in));

  auto w = net.export_weights();
  w.tensors[0].dims[0] = 7;
  CHECK_THROWS_AS(other.import_weights(w), ShapeError);
  auto bytes = encode_weights(net.export_weights());
  bytes[0] = 'X';
  CHECK_THROWS_AS(decode_weights(bytes), FormatError);
}

TEST_CASE("gradient reaches every extractor parameter") {
  DeepONet<double> net(7);
  const auto in = probe_input(6);
  ad::Tape<double> tape;
  for (auto* p : net.params()) p->zero_grad();
  tape.backward(ad::sum(net.control_head(tape, net.features(tape, branch_constant(tape, in)))));
  for (auto* p : net.params()) {
    double g = 0.0;
    for (double x : p->grad.data) g += std::abs(x);
    INFO(p->name);
    CHECK(g > 0.0);
  }
}

TEST_CASE("pretraining on a zero operator drives validation error to zero") {
  EnvConfig env;
  env.plant = PlantConfig::paper(DelayFunction::cosine4(0.7, 0.3));
  env.divergence_limit = 1e300;
  DatasetConfig dc;
  dc.n_trajectories = 8;
  dc.init = InitSpec::fixed(1e-3);
  const auto data = generate_dataset(env, ZeroExpert{}, dc, 3).data;
  PretrainConfig pc;
  pc.epochs = 6;
  pc.batch = 32;
  pc.patience = 0;
  const auto res = pretrain(data, pc, 1);
  CHECK(res.curve.size() == 6);
  CHECK(res.best_val_mse < 1e-3);
  CHECK(res.best_val_mse < res.curve.front().train_mse);
}

TEST_CASE("pretraining on shuffled labels fits far worse than on true labels") {
  EnvConfig env;
  env.plant = PlantConfig::paper(DelayFunction::exponential(0.7));
  DatasetConfig dc;
  dc.n_trajectories = 40;
  dc.clamp_labels = true;
  const auto data = generate_dataset(env, SyntheticLinearExpert::reference(SpatialGrid(21)), dc, 4).data;
  auto shuffled = data;
  std::vector<double> labels;
  for (const auto& s : data.samples) labels.push_back(s.label);
  std::mt19937_64 rng(2);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t k = 0; k < labels.size(); ++k) shuffled.samples[k].label = labels[k];

  PretrainConfig pc;
  pc.epochs = 20;
  pc.batch = 32;
  pc.val_fraction = 0.3;
  pc.patience = 0;
  const auto truth = pretrain(data, pc, 2);
  const auto noise = pretrain(shuffled, pc, 2);
  INFO("true " << truth.val_relative_l2 << " shuffled " << noise.val_relative_l2);
  CHECK(noise.val_relative_l2 > 0.5);
  CHECK(noise.val_relative_l2 > 2.0 * truth.val_relative_l2);
}
