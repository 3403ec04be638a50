#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nosac {

/// Uniform grid on [0,1] with nx nodes, x_i = i * dx.
class SpatialGrid {
public:
  explicit SpatialGrid(std::size_t nx = 21);

  std::size_t size() const { return nodes_.size(); }
  double dx() const { return dx_; }
  double node(std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }

  /// Composite trapezoid weights over the whole grid.
  std::span<const double> trapezoid_weights() const { return weights_; }

  /// Trapezoid integral of samples over [0,1].
  double integrate(std::span<const double> values) const;

  /// Trapezoid integral over the unit square of an nx*nx row-major field.
  double integrate_2d(std::span<const double> field) const;

private:
  double dx_;
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

} // namespace nosac
