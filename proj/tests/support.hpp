#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nosac/tensor.hpp"

namespace nosac::testing {

using VarD = ad::Var<double>;
using Builder = std::function<VarD(ad::Tape<double>&, const std::vector<VarD>&)>;

inline void fill_uniform(ad::Parameter<double>& p, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& x : p.value.data) x = d(rng);
}

/// Worst norm-wise relative error, over all inputs, between the tape gradient
/// of sum(build(inputs) * R) and its central finite difference.
inline double gradcheck(const std::vector<ad::Parameter<double>*>& inputs, const Builder& build,
                        std::uint64_t seed, double h = 1e-3) {
  std::vector<double> weights;
  auto loss_value = [&](bool backward) {
    ad::Tape<double> tape;
    std::vector<VarD> vars;
    for (auto* p : inputs) vars.push_back(tape.parameter(*p));
    auto out = build(tape, vars);
    if (weights.empty()) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> d(-1.0, 1.0);
      weights.resize(out.size());
      for (auto& w : weights) w = d(rng);
    }
    auto loss = ad::sum(ad::mul(out, tape.constant(out.shape(), std::span<const double>(weights))));
    if (backward) tape.backward(loss);
    return loss.item();
  };

  for (auto* p : inputs) p->zero_grad();
  loss_value(true);

  double worst = 0.0;
  for (auto* p : inputs) {
    const std::vector<double> analytic = p->grad.data;
    double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
    for (std::size_t k = 0; k < p->value.size(); ++k) {
      const double keep = p->value.data[k];
      p->value.data[k] = keep + h;
      const double up = loss_value(false);
      p->value.data[k] = keep - h;
      const double down = loss_value(false);
      p->value.data[k] = keep;
      const double fd = (up - down) / (2.0 * h);
      diff2 += (fd - analytic[k]) * (fd - analytic[k]);
      a2 += analytic[k] * analytic[k];
      f2 += fd * fd;
    }
    const double scale = std::sqrt(std::max(a2, f2));
    if (scale > 0.0) worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  return worst;
}

/// Pushes entries away from a kink at `at` so that x +- h never crosses it.
inline void avoid_kink(ad::Parameter<double>& p, double at, double margin) {
  for (auto& x : p.value.data) {
    if (std::abs(x - at) < margin) x = at + (x < at ? -margin : margin);
  }
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nosac_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace nosac::testing
