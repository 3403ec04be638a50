#include "nosac/dataset.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iomanip>
#include <iterator>

#include "nosac/errors.hpp"
#include "nosac/seed.hpp"

namespace nosac {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

std::uint32_t get_u32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw FormatError("dataset: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

double get_f32(const std::vector<std::uint8_t>& in, std::size_t& pos) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, pos)));
}

} // namespace

std::vector<std::uint8_t> encode_dataset(const OperatorSamples& d) {
  const std::size_t n = d.nx;
  std::vector<std::uint8_t> out{'O', 'D', 'S', '1'};
  put_u32(out, OperatorSamples::kVersion);
  put_u32(out, static_cast<std::uint32_t>(d.samples.size()));
  put_u32(out, static_cast<std::uint32_t>(n));
  out.reserve(out.size() + d.samples.size() * 4 * (2 * n + n * n + 1));
  for (const auto& s : d.samples) {
    if (s.tau.size() != n || s.v.size() != n || s.u.size() != n * n) {
      throw ShapeError("dataset: sample does not match nx=" + std::to_string(n));
    }
    for (double x : s.tau) put_f32(out, x);
    for (double x : s.v) put_f32(out, x);
    for (double x : s.u) put_f32(out, x);
    put_f32(out, s.label);
  }
  return out;
}

OperatorSamples decode_dataset(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16 || !std::equal(bytes.begin(), bytes.begin() + 4, "ODS1")) {
    throw FormatError("dataset: bad magic (expected ODS1)");
  }
  std::size_t pos = 4;
  const auto version = get_u32(bytes, pos);
  if (version != OperatorSamples::kVersion) throw FormatError("dataset: unsupported version " + std::to_string(version));
  const auto count = get_u32(bytes, pos);
  OperatorSamples d;
  d.nx = get_u32(bytes, pos);
  const std::size_t n = d.nx;
  const std::size_t per_sample = 4 * (2 * n + n * n + 1);
  if (bytes.size() - pos != per_sample * count) throw FormatError("dataset: payload size does not match header");
  d.samples.resize(count);
  for (auto& s : d.samples) {
    s.tau.resize(n);
    s.v.resize(n);
    s.u.resize(n * n);
    for (auto& x : s.tau) x = get_f32(bytes, pos);
    for (auto& x : s.v) x = get_f32(bytes, pos);
    for (auto& x : s.u) x = get_f32(bytes, pos);
    s.label = get_f32(bytes, pos);
  }
  return d;
}

void save_dataset(const std::filesystem::path& path, const OperatorSamples& d) {
  const auto bytes = encode_dataset(d);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

OperatorSamples load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_dataset(bytes);
}

void export_dataset_csv(const std::filesystem::path& path, const OperatorSamples& d) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  const std::size_t n = d.nx;
  out << "label";
  for (std::size_t i = 0; i < n; ++i) out << ",tau_" << i;
  for (std::size_t i = 0; i < n; ++i) out << ",v_" << i;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out << ",u_" << i << "_" << j;
  out << "\n" << std::setprecision(9);
  for (const auto& s : d.samples) {
    out << static_cast<float>(s.label);
    for (double x : s.tau) out << "," << static_cast<float>(x);
    for (double x : s.v) out << "," << static_cast<float>(x);
    for (double x : s.u) out << "," << static_cast<float>(x);
    out << "\n";
  }
}

void TauSamplerConfig::validate() const {
  if (families.empty()) throw ConfigError("tau sampler: no families configured");
  auto ordered = [](double lo, double hi, const char* what) {
    if (!(lo <= hi)) throw ConfigError(std::string("tau sampler: empty range for ") + what);
  };
  for (auto f : families) {
    switch (f) {
    case DelayFamily::Cosine4:
      ordered(a_low, a_high, "a");
      ordered(b_low, b_high, "b");
      if (!(a_low - std::max(std::abs(b_low), std::abs(b_high)) > 0.0)) {
        throw ConfigError("tau sampler: cosine4 ranges admit tau <= 0 (need a_low > |b|)");
      }
      break;
    case DelayFamily::Exponential:
      ordered(c_low, c_high, "c");
      if (!std::isfinite(c_low) || !std::isfinite(c_high)) throw ConfigError("tau sampler: exp rate must be finite");
      break;
    case DelayFamily::Constant:
      if (!(fixed_value > 0.0)) throw ConfigError("tau sampler: fixed delay must be positive");
      break;
    case DelayFamily::Tabulated:
      throw ConfigError("tau sampler: tabulated delays cannot be sampled");
    }
  }
}

DelayFunction tau_sampler(const TauSamplerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  std::uniform_int_distribution<std::size_t> pick(0, cfg.families.size() - 1);
  switch (cfg.families[pick(rng)]) {
  case DelayFamily::Cosine4: {
    const double a = uniform(cfg.a_low, cfg.a_high);
    const double b = uniform(cfg.b_low, cfg.b_high);
    return DelayFunction::cosine4(a, b);
  }
  case DelayFamily::Exponential:
    return DelayFunction::exponential(uniform(cfg.c_low, cfg.c_high));
  case DelayFamily::Constant:
    return DelayFunction::constant(cfg.fixed_value);
  case DelayFamily::Tabulated:
    break;
  }
  throw ConfigError("tau sampler: unsupported family");
}

DatasetResult generate_dataset(const EnvConfig& base, const ExpertController& expert, const DatasetConfig& cfg,
                               std::uint64_t seed) {
  if (cfg.n_trajectories < 0 || cfg.snapshot_stride < 1) {
    throw ConfigError("dataset: n_trajectories must be >= 0 and snapshot_stride >= 1");
  }
  cfg.tau.validate();
  DatasetResult result;
  result.data.nx = base.plant.nx();
  for (int traj = 0; traj < cfg.n_trajectories; ++traj) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(traj)));
    EnvConfig env_cfg = base;
    env_cfg.plant.tau = tau_sampler(cfg.tau, rng);
    PdeEnv env(env_cfg);
    env.reset(cfg.init, rng());
    std::vector<OperatorSample> kept;
    bool diverged = false;
    while (!env.done()) {
      const Observation obs = env.observe();
      const double label =
          expert_control(expert, obs.tau, obs.v, obs.u, cfg.clamp_labels ? env_cfg.plant.u_max : 0.0);
      if (env.agent_step() % cfg.snapshot_stride == 0) {
        kept.push_back(OperatorSample{obs.tau, obs.v, obs.u, label});
      }
      diverged = env.step(label).diverged;
    }
    if (diverged) {
      ++result.discarded_trajectories;
      continue;
    }
    for (auto& s : kept) result.data.samples.push_back(std::move(s));
  }
  std::mt19937_64 shuffle_rng(stream_seed(seed, 0xD5E7ULL));
  std::shuffle(result.data.samples.begin(), result.data.samples.end(), shuffle_rng);
  return result;
}

} // namespace nosac
