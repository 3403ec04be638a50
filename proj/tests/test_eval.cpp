#include <doctest.h>

#include <fstream>

#include "nosac/eval.hpp"
#include "nosac/expert.hpp"
#include "support.hpp"

using namespace nosac;

namespace {

EvalConfig paper_eval(double v0) {
  EvalConfig cfg;
  cfg.env.plant = PlantConfig::paper(DelayFunction::cosine4(0.7, 0.3));
  cfg.env.divergence_limit = 1e300;
  cfg.v0 = v0;
  return cfg;
}

} // namespace

TEST_CASE("zero policy from a zero state stays at zero") {
  const auto r = evaluate(zero_policy(), paper_eval(0.0));
  CHECK(r.times.size() == 26);
  CHECK(r.controls.size() == 25);
  CHECK(r.times.back() == doctest::Approx(5.0));
  for (double n : r.norms) CHECK(n == 0.0);
  for (double n : r.augmented_norms) CHECK(n == 0.0);
  CHECK(r.metrics.steady_state_error == 0.0);
  CHECK(r.metrics.overshoot == 0.0);
  CHECK(r.metrics.final_norm == 0.0);
  CHECK(r.metrics.settled);
  CHECK(r.metrics.settling_time == 0.0);
}

TEST_CASE("open loop from v0 = 6 grows") {
  const auto r = evaluate(zero_policy(), paper_eval(6.0));
  CHECK(r.norms.front() == doctest::Approx(6.0));
  CHECK(r.norms.back() > r.norms.front());
  CHECK_FALSE(r.metrics.settled);
  CHECK(r.metrics.settling_time == doctest::Approx(5.0));
  CHECK(r.metrics.overshoot > 0.0);
  for (double u : r.controls) CHECK(u == 0.0);
}

TEST_CASE("expert policy applies the clipped expert law at agent steps") {
  ZeroExpert zero;
  const auto a = evaluate(expert_policy(zero, 30.0), paper_eval(6.0));
  const auto b = evaluate(zero_policy(), paper_eval(6.0));
  CHECK(a.norms == b.norms);

  const SpatialGrid g(21);
  const auto ref = SyntheticLinearExpert::reference(g);
  const auto r = evaluate(expert_policy(ref, 30.0), paper_eval(6.0));
  for (double u : r.controls) CHECK(std::abs(u) <= 30.0);
}

TEST_CASE("steady state error is the window mean") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> n{9.0, 7.0, 5.0, 3.0, 2.0, 4.0};
  CHECK(steady_state_error(t, n, 1.0) == doctest::Approx(3.0));
  CHECK(steady_state_error(t, n, 0.5) == doctest::Approx(4.0));
  CHECK(steady_state_error(t, n, 10.0) == doctest::Approx(5.0));
}

TEST_CASE("settling time") {
  const std::vector<double> t{0.0, 1.0, 2.0, 3.0, 4.0};
  bool settled = false;
  CHECK(settling_time(t, std::vector<double>{5, 3, 0.5, 0.2, 0.1}, 1.0, settled) == 2.0);
  CHECK(settled);
  CHECK(settling_time(t, std::vector<double>{5, 0.5, 3, 0.2, 0.1}, 1.0, settled) == 3.0);
  CHECK(settled);
  CHECK(settling_time(t, std::vector<double>{0.1, 0.1, 0.1, 0.1, 2.0}, 1.0, settled) == 4.0);
  CHECK_FALSE(settled);
  CHECK(settling_time(t, std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1}, 1.0, settled) == 0.0);
  CHECK(settled);
}

TEST_CASE("report files") {
  const auto r = evaluate(zero_policy(), paper_eval(2.0));
  const auto dir = testing::scratch_dir("eval_report");
  write_report(dir, r);
  for (const char* f : {"states.csv", "control.csv", "norms.csv", "metrics.csv"}) {
    INFO(f);
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream in(dir / "norms.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,norm,augmented_norm");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == r.times.size());
}
