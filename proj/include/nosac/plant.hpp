#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nosac/delay.hpp"
#include "nosac/grid.hpp"
#include "nosac/history.hpp"

namespace nosac {

/// Registered coefficient functions for c(x) and f(x, q).
enum class CoefficientId { Paper, Zero };

CoefficientId coefficient_from_string(const std::string& name);
std::string to_string(CoefficientId id);

/// c(x_i) per node. Paper: 20 (1 - x).
std::vector<double> sample_c(CoefficientId id, const SpatialGrid& grid);
/// f(x_i, q_j) row-major. Paper: 5 cos(2 pi q) + 5 sin(2 pi x).
std::vector<double> sample_f(CoefficientId id, const SpatialGrid& grid);

struct PlantConfig {
  SpatialGrid grid{21};
  DelayFunction tau = DelayFunction::cosine4(0.7, 0.3);
  std::vector<double> c;  // nx
  std::vector<double> f;  // nx*nx
  double dt = 0.002;
  int hold = 100;
  double u_max = 30.0;
  double horizon_seconds = 5.0;

  /// Paper coefficients on an nx grid with the given delay.
  static PlantConfig paper(const DelayFunction& tau, std::size_t nx = 21);
  /// Pure transport (c = 0, f = 0).
  static PlantConfig transport(const DelayFunction& tau, std::size_t nx = 21);

  /// Throws ConfigError on a violated range or CFL condition.
  void validate() const;

  std::size_t nx() const { return grid.size(); }
  int horizon_steps() const; // agent steps per episode
};

/// MDP state: v on the grid, u[i*nx + j] ~ u(x_i, r_j, t).
struct AugmentedState {
  std::vector<double> v;
  std::vector<double> u;
  std::int64_t step = 0; // simulator step count
  double t = 0.0;

  static AugmentedState zeros(std::size_t nx);
  bool finite() const;
};

/// u[i][j] = v(1, t - tau(x_i) (1 - r_j)), the characteristic solution of
/// the transport lift, read from the boundary history.
std::vector<double> lift_history_to_u(const BoundaryHistory& history, std::span<const double> tau_samples,
                                      const SpatialGrid& grid, double t);

enum class NormMode { Augmented, StateOnly };

NormMode norm_mode_from_string(const std::string& name);
std::string to_string(NormMode mode);

/// sqrt(||v||^2 + ||u||^2) with trapezoid quadrature; StateOnly drops u.
double l2_norm(const AugmentedState& s, const SpatialGrid& grid, NormMode mode = NormMode::Augmented);
double l2_norm_v(std::span<const double> v, const SpatialGrid& grid);
/// Norm of the componentwise difference a - b.
double l2_distance(const AugmentedState& a, const AugmentedState& b, const SpatialGrid& grid,
                   NormMode mode = NormMode::Augmented);

/// Explicit upwind discretisation of the delayed PIDE with boundary history.
class Plant {
public:
  explicit Plant(PlantConfig cfg);

  const PlantConfig& config() const { return cfg_; }
  const AugmentedState& state() const { return state_; }
  const BoundaryHistory& history() const { return history_; }
  std::span<const double> tau_samples() const { return tau_; }

  /// Sets v(., 0) = v0, u = 0, zero pre-history and t = 0.
  void reset(std::span<const double> v0);

  /// One dt with v(0) = held_input. Returns false if the state became non-finite.
  bool step(double held_input);

  /// The integral operator matrix K[i][j] with sum_j K_ij v_j ~ int_x^1 f(x, q) v(q) dq.
  const std::vector<double>& integral_kernel() const { return kernel_; }

private:
  void refresh_lift();

  PlantConfig cfg_;
  std::vector<double> tau_;
  std::vector<double> kernel_;
  BoundaryHistory history_;
  AugmentedState state_;
  std::vector<double> scratch_;
};

/// Trapezoid kernel for int_{x_i}^1 f(x_i, q) v(q) dq over nodes q_j >= x_i.
std::vector<double> build_integral_kernel(const PlantConfig& cfg);

} // namespace nosac
