#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nosac/grid.hpp"

namespace nosac {

struct OperatorSamples;

/// A controller operator U = U(tau, v, u) evaluated on the grid.
class ExpertController {
public:
  virtual ~ExpertController() = default;
  virtual double control(std::span<const double> tau, std::span<const double> v,
                         std::span<const double> u) const = 0;
  virtual std::string id() const = 0;
};

/// Evaluates the expert, optionally clamping to [-u_max, u_max] (u_max <= 0 disables).
double expert_control(const ExpertController& e, std::span<const double> tau, std::span<const double> v,
                      std::span<const double> u, double u_max = 0.0);

class ZeroExpert final : public ExpertController {
public:
  double control(std::span<const double>, std::span<const double>, std::span<const double>) const override {
    return 0.0;
  }
  std::string id() const override { return "zero"; }
};

/// U = sum_i w_i k1(x_i) v_i + sum_ij w_i w_j k2(x_i, r_j) u_ij + k0 v(1),
/// w the trapezoid weights. Linear in (v, u) and independent of tau.
class SyntheticLinearExpert final : public ExpertController {
public:
  SyntheticLinearExpert(SpatialGrid grid, std::vector<double> k1, std::vector<double> k2, double k0);

  /// Low-order polynomial kernels tuned offline to hold the paper plant
  /// near the origin for both reference delays under ZOH.
  static SyntheticLinearExpert reference(const SpatialGrid& grid);

  double control(std::span<const double> tau, std::span<const double> v, std::span<const double> u) const override;
  std::string id() const override { return "synthetic-linear"; }

  const std::vector<double>& k1() const { return k1_; }
  const std::vector<double>& k2() const { return k2_; }
  double k0() const { return k0_; }

private:
  SpatialGrid grid_;
  std::vector<double> k1_;
  std::vector<double> k2_;
  double k0_;
  std::vector<double> wv_; // w_i k1_i
  std::vector<double> wu_; // w_i w_j k2_ij
};

/// Labels supplied externally (e.g. by a backstepping implementation),
/// looked up by the exact float32 image of (tau, v, u).
class TabulatedExpert final : public ExpertController {
public:
  explicit TabulatedExpert(const OperatorSamples& labelled);

  /// Throws LookupError for inputs absent from the table.
  double control(std::span<const double> tau, std::span<const double> v, std::span<const double> u) const override;
  std::string id() const override { return "tabulated"; }
  std::size_t size() const { return table_.size(); }

  static std::uint64_t key(std::span<const double> tau, std::span<const double> v, std::span<const double> u);

private:
  std::unordered_map<std::uint64_t, double> table_;
};

} // namespace nosac
