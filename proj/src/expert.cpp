#include "nosac/expert.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "nosac/dataset.hpp"
#include "nosac/errors.hpp"

namespace nosac {

double expert_control(const ExpertController& e, std::span<const double> tau, std::span<const double> v,
                      std::span<const double> u, double u_max) {
  const double value = e.control(tau, v, u);
  if (!std::isfinite(value)) throw Error("expert '" + e.id() + "' produced a non-finite control");
  return u_max > 0.0 ? std::clamp(value, -u_max, u_max) : value;
}

SyntheticLinearExpert::SyntheticLinearExpert(SpatialGrid grid, std::vector<double> k1, std::vector<double> k2,
                                             double k0)
    : grid_(std::move(grid)), k1_(std::move(k1)), k2_(std::move(k2)), k0_(k0) {
  const std::size_t n = grid_.size();
  if (k1_.size() != n || k2_.size() != n * n) throw ShapeError("SyntheticLinearExpert: kernel size mismatch");
  const auto w = grid_.trapezoid_weights();
  wv_.resize(n);
  wu_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    wv_[i] = w[i] * k1_[i];
    for (std::size_t j = 0; j < n; ++j) wu_[i * n + j] = w[i] * w[j] * k2_[i * n + j];
  }
}

SyntheticLinearExpert SyntheticLinearExpert::reference(const SpatialGrid& grid) {
  // k1(x) = a0 + a1 x + a2 x^2 + a3 x^3
  // k2(x, r) = b0 + b1 x + b2 r + b3 x r + b4 r^2 + b5 x^2
  constexpr double a[4] = {-8.295, -27.355, 17.498, 0.0};
  constexpr double b[6] = {-78.431, -18.05, 96.422, 0.0, 0.0, 0.0};
  constexpr double k0 = -5.67;
  const std::size_t n = grid.size();
  std::vector<double> k1(n), k2(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid.node(i);
    k1[i] = a[0] + x * (a[1] + x * (a[2] + x * a[3]));
    for (std::size_t j = 0; j < n; ++j) {
      const double r = grid.node(j);
      k2[i * n + j] = b[0] + b[1] * x + b[2] * r + b[3] * x * r + b[4] * r * r + b[5] * x * x;
    }
  }
  return SyntheticLinearExpert(grid, std::move(k1), std::move(k2), k0);
}

double SyntheticLinearExpert::control(std::span<const double> tau, std::span<const double> v,
                                      std::span<const double> u) const {
  (void)tau;
  if (v.size() != wv_.size() || u.size() != wu_.size()) throw ShapeError("SyntheticLinearExpert: input size mismatch");
  double acc = k0_ * v.back();
  for (std::size_t i = 0; i < v.size(); ++i) acc += wv_[i] * v[i];
  for (std::size_t k = 0; k < u.size(); ++k) acc += wu_[k] * u[k];
  return acc;
}

std::uint64_t TabulatedExpert::key(std::span<const double> tau, std::span<const double> v,
                                   std::span<const double> u) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::span<const double> xs) {
    for (double x : xs) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
      for (int b = 0; b < 4; ++b) {
        h ^= (bits >> (8 * b)) & 0xFFu;
        h *= 1099511628211ULL;
      }
    }
  };
  mix(tau);
  mix(v);
  mix(u);
  return h;
}

TabulatedExpert::TabulatedExpert(const OperatorSamples& labelled) {
  for (const auto& s : labelled.samples) table_[key(s.tau, s.v, s.u)] = s.label;
}

double TabulatedExpert::control(std::span<const double> tau, std::span<const double> v,
                                std::span<const double> u) const {
  const auto it = table_.find(key(tau, v, u));
  if (it == table_.end()) throw LookupError("tabulated expert: no label for the queried state");
  return it->second;
}

} // namespace nosac
