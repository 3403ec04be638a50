#include "nosac/config.hpp"

#include <fstream>
#include <set>

#include "nosac/errors.hpp"

namespace nosac {

using nlohmann::json;

namespace {

/// Reads keys from one JSON object and rejects any key never asked for.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<V>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  Section sub(const char* key) {
    seen_.insert(key);
    return Section(j_.at(key), path_ + "." + key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + path_ + "." + it.key() + "'");
    }
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

Precision precision_from_string(const std::string& s) {
  if (s == "float32" || s == "float") return Precision::Float32;
  if (s == "float64" || s == "double") return Precision::Float64;
  throw ConfigError("sac.precision must be float32 or float64, got '" + s + "'");
}

std::vector<DelayFamily> families_from_strings(const std::vector<std::string>& names) {
  std::vector<DelayFamily> out;
  for (const auto& n : names) out.push_back(delay_family_from_string(n));
  return out;
}

void parse_range(Section& s, const char* key, double& lo, double& hi) {
  if (!s.has(key)) return;
  std::vector<double> r;
  s.get(key, r);
  require(r.size() == 2 && r[0] <= r[1], "dataset.tau." + std::string(key) + " must be [low, high]");
  lo = r[0];
  hi = r[1];
}

} // namespace

std::string to_string(Precision p) { return p == Precision::Float32 ? "float32" : "float64"; }

DelayFunction ExperimentConfig::tau() const { return DelayFunction::from_params(plant.tau_family, plant.tau_params); }

EnvConfig ExperimentConfig::env_config() const { return env_config(tau()); }

EnvConfig ExperimentConfig::env_config(const DelayFunction& tau) const {
  EnvConfig e;
  const SpatialGrid grid(plant.nx);
  e.plant.grid = grid;
  e.plant.tau = tau;
  e.plant.c = sample_c(plant.c, grid);
  e.plant.f = sample_f(plant.f, grid);
  e.plant.dt = plant.dt;
  e.plant.hold = plant.hold;
  e.plant.u_max = plant.u_max;
  e.plant.horizon_seconds = plant.horizon_seconds;
  e.reward = reward;
  e.divergence_limit = plant.divergence_limit;
  return e;
}

void ExperimentConfig::validate() const {
  require(plant.nx >= 3, "plant.nx must be >= 3");
  env_config().validate();

  require(deeponet.epochs >= 1, "deeponet.epochs must be >= 1");
  require(deeponet.batch >= 1, "deeponet.batch must be >= 1");
  require(deeponet.lr > 0.0, "deeponet.lr must be positive");
  require(deeponet.val_fraction > 0.0 && deeponet.val_fraction < 1.0, "deeponet.val_fraction must lie in (0, 1)");
  require(deeponet.patience >= 0, "deeponet.patience must be >= 0");

  const auto& g = dataset.generation;
  require(g.n_trajectories >= 1, "dataset.n_trajectories must be >= 1");
  require(g.snapshot_stride >= 1, "dataset.snapshot_stride must be >= 1");
  require(g.init.low <= g.init.high, "dataset.init must satisfy low <= high");
  g.tau.validate();
  require(dataset.expert == "synthetic-linear" || dataset.expert == "zero",
          "dataset.expert must be synthetic-linear or zero");

  sac.hyper.validate();
  require(!sac.hidden.empty(), "sac.hidden must list at least one width");
  for (auto w : sac.hidden) require(w >= 1, "sac.hidden widths must be >= 1");

  require(train.episodes >= 1, "train.episodes must be >= 1");
  require(train.max_agent_steps >= 0, "train.max_agent_steps must be >= 0");
  require(!train.seeds.empty(), "train.seeds must not be empty");
  require(train.checkpoint_every >= 0, "train.checkpoint_every must be >= 0");
  require(train.init.low <= train.init.high, "train.init must satisfy low <= high");

  require(eval.settle_fraction > 0.0, "eval.settle_fraction must be positive");
  require(eval.window > 0.0 && eval.window <= plant.horizon_seconds, "eval.window must lie in (0, horizon]");
  require(!output_dir.empty(), "io.output_dir must not be empty");
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Section root(j, "config");

  if (root.has("plant")) {
    auto s = root.sub("plant");
    auto& p = c.plant;
    s.get("nx", p.nx);
    s.get("dt", p.dt);
    s.get("hold", p.hold);
    s.get("u_max", p.u_max);
    s.get("horizon_seconds", p.horizon_seconds);
    s.get("divergence_limit", p.divergence_limit);
    if (s.has("tau")) {
      auto t = s.sub("tau");
      std::string family = to_string(p.tau_family);
      t.get("family", family);
      p.tau_family = delay_family_from_string(family);
      t.get("params", p.tau_params);
      t.finish();
    }
    std::string cid = to_string(p.c), fid = to_string(p.f);
    s.get("c", cid);
    s.get("f", fid);
    p.c = coefficient_from_string(cid);
    p.f = coefficient_from_string(fid);
    s.finish();
  }

  if (root.has("reward")) {
    auto s = root.sub("reward");
    s.get("gamma_weight", c.reward.gamma_weight);
    s.get("sigma_scale", c.reward.sigma_scale);
    s.get("zeta", c.reward.zeta);
    std::string norm = to_string(c.reward.norm);
    s.get("norm", norm);
    c.reward.norm = norm_mode_from_string(norm);
    s.finish();
  }

  if (root.has("deeponet")) {
    auto s = root.sub("deeponet");
    s.get("epochs", c.deeponet.epochs);
    s.get("batch", c.deeponet.batch);
    s.get("lr", c.deeponet.lr);
    s.get("val_fraction", c.deeponet.val_fraction);
    s.get("patience", c.deeponet.patience);
    if (s.has("widths")) {
      auto w = s.sub("widths");
      std::size_t conv1 = deeponet_shape::kConv1, conv2 = deeponet_shape::kConv2;
      std::size_t latent = deeponet_shape::kLatent, trunk = deeponet_shape::kTrunkHidden;
      w.get("conv1", conv1);
      w.get("conv2", conv2);
      w.get("latent", latent);
      w.get("trunk_hidden", trunk);
      w.finish();
      require(conv1 == deeponet_shape::kConv1 && conv2 == deeponet_shape::kConv2 &&
                  latent == deeponet_shape::kLatent && trunk == deeponet_shape::kTrunkHidden,
              "deeponet.widths: only conv1=64, conv2=128, latent=256, trunk_hidden=128 are supported");
    }
    s.finish();
  }

  if (root.has("dataset")) {
    auto s = root.sub("dataset");
    auto& g = c.dataset.generation;
    s.get("n_trajectories", g.n_trajectories);
    s.get("snapshot_stride", g.snapshot_stride);
    s.get("clamp_labels", g.clamp_labels);
    s.get("expert", c.dataset.expert);
    if (s.has("init")) {
      std::vector<double> r;
      s.get("init", r);
      require(r.size() == 2, "dataset.init must be [low, high]");
      g.init = InitSpec{r[0], r[1]};
    }
    if (s.has("tau")) {
      auto t = s.sub("tau");
      if (t.has("families")) {
        std::vector<std::string> names;
        t.get("families", names);
        g.tau.families = families_from_strings(names);
      }
      parse_range(t, "a", g.tau.a_low, g.tau.a_high);
      parse_range(t, "b", g.tau.b_low, g.tau.b_high);
      parse_range(t, "c", g.tau.c_low, g.tau.c_high);
      t.get("fixed", g.tau.fixed_value);
      t.finish();
    }
    s.finish();
  }

  if (root.has("sac")) {
    auto s = root.sub("sac");
    auto& h = c.sac.hyper;
    s.get("gamma", h.gamma);
    s.get("lr", h.lr);
    s.get("polyak", h.polyak);
    s.get("policy_delay", h.policy_delay);
    std::string mode = h.alpha_auto ? "auto" : "fixed";
    s.get("alpha_mode", mode);
    require(mode == "auto" || mode == "fixed", "sac.alpha_mode must be auto or fixed");
    h.alpha_auto = mode == "auto";
    s.get("alpha", h.alpha_init);
    s.get("target_entropy", h.target_entropy);
    s.get("batch", h.batch);
    s.get("warmup", h.warmup);
    s.get("gradient_steps", h.gradient_steps);
    s.get("buffer_capacity", h.buffer_capacity);
    s.get("hidden", c.sac.hidden);
    std::string prec = to_string(c.sac.precision);
    s.get("precision", prec);
    c.sac.precision = precision_from_string(prec);
    s.finish();
  }

  if (root.has("train")) {
    auto s = root.sub("train");
    s.get("episodes", c.train.episodes);
    s.get("max_agent_steps", c.train.max_agent_steps);
    s.get("seeds", c.train.seeds);
    s.get("checkpoint_every", c.train.checkpoint_every);
    s.get("freeze_extractor", c.train.freeze_extractor);
    if (s.has("init")) {
      std::vector<double> r;
      s.get("init", r);
      require(r.size() == 2, "train.init must be [low, high]");
      c.train.init = InitSpec{r[0], r[1]};
    }
    s.finish();
  }

  if (root.has("eval")) {
    auto s = root.sub("eval");
    s.get("v0", c.eval.v0);
    s.get("settle_fraction", c.eval.settle_fraction);
    s.get("window", c.eval.window);
    s.finish();
  }

  if (root.has("io")) {
    auto s = root.sub("io");
    std::string dir = c.output_dir.string();
    s.get("output_dir", dir);
    c.output_dir = dir;
    s.finish();
  }

  root.finish();
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  std::vector<std::string> families;
  for (auto f : c.dataset.generation.tau.families) families.push_back(to_string(f));
  const auto& g = c.dataset.generation;
  const auto& h = c.sac.hyper;
  return json{
      {"plant",
       {{"nx", c.plant.nx},
        {"dt", c.plant.dt},
        {"hold", c.plant.hold},
        {"u_max", c.plant.u_max},
        {"horizon_seconds", c.plant.horizon_seconds},
        {"divergence_limit", c.plant.divergence_limit},
        {"tau", {{"family", to_string(c.plant.tau_family)}, {"params", c.plant.tau_params}}},
        {"c", to_string(c.plant.c)},
        {"f", to_string(c.plant.f)}}},
      {"reward",
       {{"gamma_weight", c.reward.gamma_weight},
        {"sigma_scale", c.reward.sigma_scale},
        {"zeta", c.reward.zeta},
        {"norm", to_string(c.reward.norm)}}},
      {"deeponet",
       {{"epochs", c.deeponet.epochs},
        {"batch", c.deeponet.batch},
        {"lr", c.deeponet.lr},
        {"val_fraction", c.deeponet.val_fraction},
        {"patience", c.deeponet.patience}}},
      {"dataset",
       {{"n_trajectories", g.n_trajectories},
        {"snapshot_stride", g.snapshot_stride},
        {"clamp_labels", g.clamp_labels},
        {"expert", c.dataset.expert},
        {"init", {g.init.low, g.init.high}},
        {"tau",
         {{"families", families},
          {"a", {g.tau.a_low, g.tau.a_high}},
          {"b", {g.tau.b_low, g.tau.b_high}},
          {"c", {g.tau.c_low, g.tau.c_high}},
          {"fixed", g.tau.fixed_value}}}}},
      {"sac",
       {{"gamma", h.gamma},
        {"lr", h.lr},
        {"polyak", h.polyak},
        {"policy_delay", h.policy_delay},
        {"alpha_mode", h.alpha_auto ? "auto" : "fixed"},
        {"alpha", h.alpha_init},
        {"target_entropy", h.target_entropy},
        {"batch", h.batch},
        {"warmup", h.warmup},
        {"gradient_steps", h.gradient_steps},
        {"buffer_capacity", h.buffer_capacity},
        {"hidden", c.sac.hidden},
        {"precision", to_string(c.sac.precision)}}},
      {"train",
       {{"episodes", c.train.episodes},
        {"max_agent_steps", c.train.max_agent_steps},
        {"seeds", c.train.seeds},
        {"checkpoint_every", c.train.checkpoint_every},
        {"freeze_extractor", c.train.freeze_extractor},
        {"init", {c.train.init.low, c.train.init.high}}}},
      {"eval", {{"v0", c.eval.v0}, {"settle_fraction", c.eval.settle_fraction}, {"window", c.eval.window}}},
      {"io", {{"output_dir", c.output_dir.string()}}},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

} // namespace nosac
