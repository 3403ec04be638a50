#include "nosac/grid.hpp"

#include <stdexcept>

namespace nosac {

SpatialGrid::SpatialGrid(std::size_t nx) {
  if (nx < 2) {
    throw std::invalid_argument("SpatialGrid: need at least two nodes");
  }
  dx_ = 1.0 / static_cast<double>(nx - 1);
  nodes_.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    nodes_[i] = static_cast<double>(i) / static_cast<double>(nx - 1);
  }
  nodes_.back() = 1.0;
  weights_.assign(nx, dx_);
  weights_.front() = 0.5 * dx_;
  weights_.back() = 0.5 * dx_;
}

double SpatialGrid::integrate(std::span<const double> values) const {
  if (values.size() != size()) {
    throw std::invalid_argument("SpatialGrid::integrate: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    acc += weights_[i] * values[i];
  }
  return acc;
}

double SpatialGrid::integrate_2d(std::span<const double> field) const {
  const std::size_t n = size();
  if (field.size() != n * n) {
    throw std::invalid_argument("SpatialGrid::integrate_2d: size mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row += weights_[j] * field[i * n + j];
    }
    acc += weights_[i] * row;
  }
  return acc;
}

} // namespace nosac
