#include <doctest.h>

#include "nosac/dataset.hpp"
#include "nosac/env.hpp"
#include "nosac/errors.hpp"
#include "nosac/expert.hpp"
#include "support.hpp"

using namespace nosac;

namespace {

EnvConfig paper_env() {
  EnvConfig cfg;
  cfg.plant = PlantConfig::paper(DelayFunction::cosine4(0.7, 0.3));
  return cfg;
}

} // namespace

TEST_CASE("zero expert") {
  ZeroExpert e;
  std::vector<double> tau(21, 0.7), v(21, 3.0), u(441, -2.0);
  CHECK(e.control(tau, v, u) == 0.0);
}

TEST_CASE("synthetic linear expert quadrature and linearity") {
  const SpatialGrid g(21);
  std::vector<double> tau(21, 0.7), ones(21, 1.0), zeros_u(441, 0.0);
  SyntheticLinearExpert unit(g, std::vector<double>(21, 1.0), std::vector<double>(441, 0.0), 0.0);
  CHECK(unit.control(tau, ones, zeros_u) == doctest::Approx(1.0).epsilon(1e-14));

  const auto ref = SyntheticLinearExpert::reference(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  std::vector<double> v(21), u(441);
  for (auto& x : v) x = d(rng);
  for (auto& x : u) x = d(rng);
  std::vector<double> v2(v), u2(u);
  for (auto& x : v2) x *= 2.0;
  for (auto& x : u2) x *= 2.0;
  CHECK(ref.control(tau, v2, u2) == doctest::Approx(2.0 * ref.control(tau, v, u)).epsilon(1e-12));
  CHECK(expert_control(ref, tau, v2, u2, 0.5) <= 0.5);
}

TEST_CASE("tau sampler") {
  TauSamplerConfig cfg;
  std::mt19937_64 rng(1);
  const SpatialGrid g(21);
  int cos_count = 0, exp_count = 0;
  for (int k = 0; k < 500; ++k) {
    const auto tau = tau_sampler(cfg, rng);
    const auto s = tau.sample(g);
    CHECK(*std::min_element(s.begin(), s.end()) > 0.0);
    cos_count += tau.family() == DelayFamily::Cosine4;
    exp_count += tau.family() == DelayFamily::Exponential;
  }
  CHECK(cos_count > 150);
  CHECK(exp_count > 150);

  CHECK(DelayFunction::from_params(DelayFamily::Cosine4, {0.7, 0.3})(0.3) ==
        doctest::Approx(0.7 + 0.3 * std::cos(4.0 * std::acos(0.3))));
  CHECK(DelayFunction::from_params(DelayFamily::Exponential, {0.7})(0.3) == doctest::Approx(std::exp(-0.21)));

  TauSamplerConfig bad;
  bad.a_low = 0.2;
  bad.b_high = 0.4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("dataset generation counts and labels") {
  DatasetConfig dc;
  dc.n_trajectories = 100;
  const auto zero = generate_dataset(paper_env(), ZeroExpert{}, dc, 5);
  CHECK(zero.data.samples.size() <= 2500);
  CHECK(zero.data.samples.size() == 25 * std::size_t(100 - zero.discarded_trajectories));
  for (const auto& s : zero.data.samples) CHECK(s.label == 0.0);

  dc.n_trajectories = 10;
  dc.snapshot_stride = 5;
  const auto strided = generate_dataset(paper_env(), SyntheticLinearExpert::reference(SpatialGrid(21)), dc, 5);
  CHECK(strided.data.samples.size() <= 50);
  for (const auto& s : strided.data.samples) {
    CHECK(s.tau.size() == 21);
    CHECK(s.v.size() == 21);
    CHECK(s.u.size() == 441);
  }
}

TEST_CASE("dataset is deterministic in its seed and round-trips through the file format") {
  DatasetConfig dc;
  dc.n_trajectories = 6;
  const auto expert = SyntheticLinearExpert::reference(SpatialGrid(21));
  const auto a = encode_dataset(generate_dataset(paper_env(), expert, dc, 7).data);
  const auto b = encode_dataset(generate_dataset(paper_env(), expert, dc, 7).data);
  const auto c = encode_dataset(generate_dataset(paper_env(), expert, dc, 8).data);
  CHECK(a == b);
  CHECK(a != c);

  const auto dir = testing::scratch_dir("dataset_io");
  const auto original = generate_dataset(paper_env(), expert, dc, 7).data;
  save_dataset(dir / "d.ods", original);
  const auto loaded = load_dataset(dir / "d.ods");
  REQUIRE(loaded.samples.size() == original.samples.size());
  CHECK(encode_dataset(loaded) == a);
  CHECK(loaded.samples[0].label == doctest::Approx(original.samples[0].label).epsilon(1e-6));

  auto truncated = a;
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_dataset(truncated), FormatError);
}

TEST_CASE("tabulated expert looks up stored labels") {
  DatasetConfig dc;
  dc.n_trajectories = 3;
  const auto data = generate_dataset(paper_env(), SyntheticLinearExpert::reference(SpatialGrid(21)), dc, 9).data;
  const auto stored = decode_dataset(encode_dataset(data));
  TabulatedExpert table(stored);
  for (const auto& s : stored.samples) CHECK(table.control(s.tau, s.v, s.u) == s.label);
  std::vector<double> v(21, 123.0);
  CHECK_THROWS_AS(table.control(stored.samples[0].tau, v, stored.samples[0].u), LookupError);
}
