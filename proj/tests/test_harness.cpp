#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "nosac/config.hpp"
#include "nosac/csv.hpp"
#include "nosac/errors.hpp"
#include "nosac/manifest.hpp"
#include "nosac/pipeline.hpp"
#include "nosac/seed.hpp"
#include "support.hpp"

using namespace nosac;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NOSAC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream(p) << j.dump(2);
  return p;
}

nlohmann::json tiny_train_config() {
  return {{"train", {{"episodes", 2}}}, {"sac", {{"batch", 16}, {"warmup", 20}, {"hidden", {16, 16}}}}};
}

} // namespace

TEST_CASE("config parsing is strict") {
  CHECK_NOTHROW(config_from_json(nlohmann::json::object()));
  CHECK_THROWS_AS(config_from_json({{"plnat", nlohmann::json::object()}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"sac", {{"learning_rate", 1e-3}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"sac", {{"lr", "fast"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"plant", {{"tau", {{"family", "sine"}}}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json({{"sac", {{"alpha_mode", "fixed"}, {"alpha", -1.0}}}}), ConfigError);

  const auto cfg = config_from_json({{"sac", {{"lr", 3e-4}, {"alpha_mode", "fixed"}, {"alpha", 0.0}}}});
  CHECK(cfg.sac.hyper.lr == 3e-4);
  CHECK_FALSE(cfg.sac.hyper.alpha_auto);
  CHECK(cfg.sac.hyper.alpha_init == 0.0);

  // Defaults survive a serialise/parse round trip.
  const ExperimentConfig defaults;
  CHECK(config_to_json(config_from_json(config_to_json(defaults))) == config_to_json(defaults));
  CHECK(defaults.plant.dt == 0.002);
  CHECK(defaults.plant.hold == 100);
  CHECK(defaults.plant.u_max == 30.0);
  CHECK(defaults.sac.hyper.gamma == 0.99);
  CHECK(defaults.sac.hyper.lr == 9e-5);
  CHECK(defaults.sac.hyper.polyak == 0.003);

  const auto dir = testing::scratch_dir("config_load");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  std::ofstream(dir / "broken.json") << "{ \"plant\": ";
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("seed registry") {
  const auto labels = seed_registry();
  for (const char* needed : {"env", "policy", "buffer", "init", "dataset"}) {
    CHECK(std::find(labels.begin(), labels.end(), std::string_view(needed)) != labels.end());
  }
  std::set<std::uint64_t> seen;
  for (std::uint64_t master = 0; master < 50; ++master) {
    for (auto label : labels) {
      CHECK(derive_seed(master, label) == derive_seed(master, label));
      seen.insert(derive_seed(master, label));
    }
  }
  CHECK(seen.size() == 50 * labels.size());
  CHECK_THROWS_AS(derive_seed(1, "optimizer"), ConfigError);
  CHECK(stream_seed(3, 0) != stream_seed(3, 1));
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_hash_bytes("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash_bytes("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("manifest round trip and rerun reproduce a simulate run") {
  const auto dir = testing::scratch_dir("manifest_rerun");
  CommandRequest req;
  req.command = "simulate";
  req.args = {{"controller", "expert:synthetic-linear"}, {"v0", 3.0}};
  req.out_dir = dir / "a";
  const auto m = run_command(req);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
  CHECK(m.artifacts.size() == 2);
  const auto back = RunManifest::read(dir / "a" / "manifest.json");
  CHECK(back.to_json() == m.to_json());
  for (const auto& a : back.artifacts) CHECK(git_blob_hash(dir / "a" / a.path) == a.hash);

  const auto again = rerun_manifest(dir / "a" / "manifest.json", dir / "b");
  REQUIRE(again.artifacts.size() == m.artifacts.size());
  for (std::size_t k = 0; k < m.artifacts.size(); ++k) {
    CHECK(again.artifacts[k].path == m.artifacts[k].path);
    CHECK(again.artifacts[k].hash == m.artifacts[k].hash);
  }
}

TEST_CASE("controller specs") {
  const ExperimentConfig cfg;
  CHECK_NOTHROW(load_controller("zero", cfg));
  CHECK_NOTHROW(load_controller("expert:zero", cfg));
  CHECK_THROWS_AS(load_controller("pid", cfg), ConfigError);
  CHECK_THROWS_AS(load_controller("nosac:/nonexistent/weights.now1", cfg), DependencyError);
  CHECK(algo_from_string("sac") == Algo::Sac);
  CHECK(algo_from_string("nosac") == Algo::NoSac);
  CHECK_THROWS_AS(algo_from_string("ppo"), ConfigError);
}

TEST_CASE("cli exit codes and outputs") {
  const auto dir = testing::scratch_dir("cli");

  SUBCASE("missing config is a usage error and writes nothing") {
    CHECK(run_cli("simulate -q -c " + (dir / "nope.json").string() + " -o " + (dir / "x").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "x"));
  }
  SUBCASE("unknown config key is a usage error") {
    const auto cfg = write_json(dir / "bad.json", {{"train", {{"epochs", 3}}}});
    CHECK(run_cli("simulate -q -c " + cfg.string() + " -o " + (dir / "y").string()) == 2);
    CHECK_FALSE(fs::exists(dir / "y"));
  }
  SUBCASE("nosac training without a pretrained extractor is a dependency error") {
    CHECK(run_cli("train -q --algo nosac -o " + (dir / "z").string()) == 1);
    CHECK_FALSE(fs::exists(dir / "z"));
  }
  SUBCASE("unknown subcommand") { CHECK(run_cli("fly") == 2); }
  SUBCASE("zero expert from a zero state gives all-zero trajectories") {
    REQUIRE(run_cli("simulate -q --controller expert:zero --v0 0 -o " + (dir / "sim").string()) == 0);
    auto traj = read_csv(dir / "sim" / "trajectory.csv");
    CHECK(traj.rows.size() == 26);
    for (const auto& row : traj.rows) {
      for (std::size_t c = 1; c < row.size(); ++c) CHECK(std::stod(row[c]) == 0.0);
    }
    auto sig = read_csv(dir / "sim" / "signals.csv");
    for (const auto& row : sig.rows) {
      CHECK(std::stod(row[1]) == 0.0);
      CHECK(std::stod(row[2]) == 0.0);
    }
  }
  SUBCASE("same seed gives identical training artifacts") {
    const auto cfg = write_json(dir / "tiny.json", tiny_train_config());
    const std::string base = "train -q --algo sac --seed 7 -c " + cfg.string() + " -o ";
    REQUIRE(run_cli(base + (dir / "t1").string()) == 0);
    REQUIRE(run_cli(base + (dir / "t2").string()) == 0);
    const auto m1 = RunManifest::read(dir / "t1" / "manifest.json");
    const auto m2 = RunManifest::read(dir / "t2" / "manifest.json");
    REQUIRE(m1.artifacts.size() == m2.artifacts.size());
    for (std::size_t k = 0; k < m1.artifacts.size(); ++k) {
      INFO(m1.artifacts[k].path);
      CHECK(m1.artifacts[k].hash == m2.artifacts[k].hash);
    }
    CHECK(slurp(dir / "t1" / "seed_7" / "train.csv") == slurp(dir / "t2" / "seed_7" / "train.csv"));
    CHECK(m1.seeds == m2.seeds);
  }
}
