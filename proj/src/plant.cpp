#include "nosac/plant.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "nosac/errors.hpp"

namespace nosac {

CoefficientId coefficient_from_string(const std::string& name) {
  if (name == "paper") return CoefficientId::Paper;
  if (name == "zero") return CoefficientId::Zero;
  throw ConfigError("unknown coefficient id '" + name + "' (expected paper|zero)");
}

std::string to_string(CoefficientId id) { return id == CoefficientId::Paper ? "paper" : "zero"; }

std::vector<double> sample_c(CoefficientId id, const SpatialGrid& grid) {
  std::vector<double> c(grid.size(), 0.0);
  if (id == CoefficientId::Paper) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      c[i] = 20.0 * (1.0 - grid.node(i));
    }
  }
  return c;
}

std::vector<double> sample_f(CoefficientId id, const SpatialGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> f(n * n, 0.0);
  if (id == CoefficientId::Paper) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        f[i * n + j] = 5.0 * std::cos(two_pi * grid.node(j)) + 5.0 * std::sin(two_pi * grid.node(i));
      }
    }
  }
  return f;
}

PlantConfig PlantConfig::paper(const DelayFunction& tau, std::size_t nx) {
  PlantConfig cfg;
  cfg.grid = SpatialGrid(nx);
  cfg.tau = tau;
  cfg.c = sample_c(CoefficientId::Paper, cfg.grid);
  cfg.f = sample_f(CoefficientId::Paper, cfg.grid);
  return cfg;
}

PlantConfig PlantConfig::transport(const DelayFunction& tau, std::size_t nx) {
  PlantConfig cfg;
  cfg.grid = SpatialGrid(nx);
  cfg.tau = tau;
  cfg.c = sample_c(CoefficientId::Zero, cfg.grid);
  cfg.f = sample_f(CoefficientId::Zero, cfg.grid);
  return cfg;
}

void PlantConfig::validate() const {
  const std::size_t n = nx();
  if (c.size() != n || f.size() != n * n) {
    throw ConfigError("plant: coefficient samples do not match the grid");
  }
  if (!(dt > 0.0)) throw ConfigError("plant: dt must be positive");
  if (dt / grid.dx() > 1.0) {
    std::ostringstream os;
    os << "plant: CFL number dt/dx = " << dt / grid.dx() << " exceeds 1";
    throw ConfigError(os.str());
  }
  if (hold < 1) throw ConfigError("plant: hold must be >= 1");
  if (!(u_max > 0.0)) throw ConfigError("plant: u_max must be positive");
  if (!(horizon_seconds > 0.0)) throw ConfigError("plant: horizon_seconds must be positive");
  if (horizon_steps() < 1) throw ConfigError("plant: horizon shorter than one hold period");
  for (double value : tau.sample(grid)) {
    if (!std::isfinite(value) || value <= 0.0) {
      throw ConfigError("plant: delay " + tau.describe() + " must be positive and finite on the grid");
    }
  }
}

int PlantConfig::horizon_steps() const {
  return static_cast<int>(std::llround(horizon_seconds / (dt * hold)));
}

AugmentedState AugmentedState::zeros(std::size_t nx) {
  AugmentedState s;
  s.v.assign(nx, 0.0);
  s.u.assign(nx * nx, 0.0);
  return s;
}

bool AugmentedState::finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  for (double x : u) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

std::vector<double> lift_history_to_u(const BoundaryHistory& history, std::span<const double> tau_samples,
                                      const SpatialGrid& grid, double t) {
  const std::size_t n = grid.size();
  std::vector<double> u(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      u[i * n + j] = history.delayed_boundary(t, tau_samples[i] * (1.0 - grid.node(j)));
    }
  }
  return u;
}

NormMode norm_mode_from_string(const std::string& name) {
  if (name == "augmented") return NormMode::Augmented;
  if (name == "state") return NormMode::StateOnly;
  throw ConfigError("unknown norm mode '" + name + "' (expected augmented|state)");
}

std::string to_string(NormMode mode) { return mode == NormMode::Augmented ? "augmented" : "state"; }

namespace {

double squared_norm_v(std::span<const double> v, const SpatialGrid& grid) {
  const auto w = grid.trapezoid_weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += w[i] * v[i] * v[i];
  return acc;
}

double squared_norm_u(std::span<const double> u, const SpatialGrid& grid) {
  const auto w = grid.trapezoid_weights();
  const std::size_t n = grid.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += w[j] * u[i * n + j] * u[i * n + j];
    acc += w[i] * row;
  }
  return acc;
}

} // namespace

double l2_norm_v(std::span<const double> v, const SpatialGrid& grid) { return std::sqrt(squared_norm_v(v, grid)); }

double l2_norm(const AugmentedState& s, const SpatialGrid& grid, NormMode mode) {
  double sq = squared_norm_v(s.v, grid);
  if (mode == NormMode::Augmented) sq += squared_norm_u(s.u, grid);
  return std::sqrt(sq);
}

double l2_distance(const AugmentedState& a, const AugmentedState& b, const SpatialGrid& grid, NormMode mode) {
  AugmentedState d;
  d.v.resize(a.v.size());
  d.u.resize(a.u.size());
  for (std::size_t i = 0; i < a.v.size(); ++i) d.v[i] = a.v[i] - b.v[i];
  for (std::size_t i = 0; i < a.u.size(); ++i) d.u[i] = a.u[i] - b.u[i];
  return l2_norm(d, grid, mode);
}

std::vector<double> build_integral_kernel(const PlantConfig& cfg) {
  const std::size_t n = cfg.nx();
  const double dx = cfg.grid.dx();
  std::vector<double> k(n * n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double w = (j == i || j == n - 1) ? 0.5 * dx : dx;
      k[i * n + j] = w * cfg.f[i * n + j];
    }
  }
  return k;
}

Plant::Plant(PlantConfig cfg)
    : cfg_(std::move(cfg)), history_(cfg_.dt, cfg_.tau.tau_bar(cfg_.grid)) {
  cfg_.validate();
  tau_ = cfg_.tau.sample(cfg_.grid);
  kernel_ = build_integral_kernel(cfg_);
  state_ = AugmentedState::zeros(cfg_.nx());
  scratch_.resize(cfg_.nx());
  history_.push(0.0);
}

void Plant::reset(std::span<const double> v0) {
  if (v0.size() != cfg_.nx()) {
    throw ShapeError("Plant::reset: initial profile has wrong length");
  }
  state_.v.assign(v0.begin(), v0.end());
  state_.step = 0;
  state_.t = 0.0;
  history_.clear();
  history_.push(state_.v.back());
  state_.u.assign(cfg_.nx() * cfg_.nx(), 0.0);
}

void Plant::refresh_lift() { state_.u = lift_history_to_u(history_, tau_, cfg_.grid, state_.t); }

bool Plant::step(double held_input) {
  const std::size_t n = cfg_.nx();
  const double dt = cfg_.dt;
  const double inv_dx = 1.0 / cfg_.grid.dx();
  const auto& v = state_.v;
  auto& next = scratch_;
  next[0] = held_input;
  for (std::size_t i = 1; i < n; ++i) {
    double integral = 0.0;
    const double* row = &kernel_[i * n];
    for (std::size_t j = i; j < n; ++j) integral += row[j] * v[j];
    const double delayed = cfg_.c[i] == 0.0 ? 0.0 : cfg_.c[i] * history_.delayed_boundary(state_.t, tau_[i]);
    next[i] = v[i] + dt * (-(v[i] - v[i - 1]) * inv_dx + integral + delayed);
  }
  state_.v.swap(next);
  ++state_.step;
  state_.t = static_cast<double>(state_.step) * dt;
  history_.push(state_.v.back());
  refresh_lift();
  return state_.finite();
}

} // namespace nosac
