#pragma once

#include <string>
#include <vector>

#include "nosac/grid.hpp"

namespace nosac {

enum class DelayFamily { Cosine4, Exponential, Constant, Tabulated };

std::string to_string(DelayFamily family);
DelayFamily delay_family_from_string(const std::string& name);

/// Spatially varying delay tau(x) on [0,1].
///
///   Cosine4      a + b cos(4 arccos x)     params {a, b}
///   Exponential  exp(-c x)                 params {c}
///   Constant     a                         params {a}
///   Tabulated    piecewise-linear through equispaced samples on [0,1]
class DelayFunction {
public:
  static DelayFunction cosine4(double a, double b);
  static DelayFunction exponential(double rate);
  static DelayFunction constant(double value);
  static DelayFunction tabulated(std::vector<double> samples);
  static DelayFunction from_params(DelayFamily family, const std::vector<double>& params);

  double operator()(double x) const;

  DelayFamily family() const { return family_; }
  const std::vector<double>& params() const { return params_; }

  std::vector<double> sample(const SpatialGrid& grid) const;

  /// Largest value over the grid nodes.
  double tau_bar(const SpatialGrid& grid) const;

  std::string describe() const;

private:
  DelayFunction(DelayFamily family, std::vector<double> params)
      : family_(family), params_(std::move(params)) {}

  DelayFamily family_;
  std::vector<double> params_;
};

struct DelayViolation {
  enum class Kind { NonPositive, Slope };
  Kind kind;
  double x;
  double value; // tau(x) for NonPositive, |tau'(x)| for Slope
};

struct DelayReport {
  bool in_class_d = true;
  std::vector<DelayViolation> violations;
};

/// Checks membership of the backstepping delay class: tau > 0 everywhere and
/// |tau'(x)| < 1 wherever tau(x) < x. Diagnostic only.
/// Throws InvalidDelayError if tau is not finite on the grid.
DelayReport validate_delay(const DelayFunction& tau, const SpatialGrid& grid);

} // namespace nosac
