#include "nosac/delay.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nosac/errors.hpp"

namespace nosac {

std::string to_string(DelayFamily family) {
  switch (family) {
  case DelayFamily::Cosine4:
    return "cosine4";
  case DelayFamily::Exponential:
    return "exp";
  case DelayFamily::Constant:
    return "constant";
  case DelayFamily::Tabulated:
    return "table";
  }
  return "unknown";
}

DelayFamily delay_family_from_string(const std::string& name) {
  if (name == "cosine4") return DelayFamily::Cosine4;
  if (name == "exp") return DelayFamily::Exponential;
  if (name == "constant" || name == "fixed") return DelayFamily::Constant;
  if (name == "table") return DelayFamily::Tabulated;
  throw ConfigError("unknown delay family '" + name + "'");
}

DelayFunction DelayFunction::cosine4(double a, double b) {
  return DelayFunction(DelayFamily::Cosine4, {a, b});
}

DelayFunction DelayFunction::exponential(double rate) {
  return DelayFunction(DelayFamily::Exponential, {rate});
}

DelayFunction DelayFunction::constant(double value) {
  return DelayFunction(DelayFamily::Constant, {value});
}

DelayFunction DelayFunction::tabulated(std::vector<double> samples) {
  if (samples.size() < 2) {
    throw ConfigError("tabulated delay needs at least two samples");
  }
  return DelayFunction(DelayFamily::Tabulated, std::move(samples));
}

DelayFunction DelayFunction::from_params(DelayFamily family, const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n) {
      throw ConfigError("delay family " + to_string(family) + " expects " + std::to_string(n) +
                        " parameters, got " + std::to_string(params.size()));
    }
  };
  switch (family) {
  case DelayFamily::Cosine4:
    need(2);
    return cosine4(params[0], params[1]);
  case DelayFamily::Exponential:
    need(1);
    return exponential(params[0]);
  case DelayFamily::Constant:
    need(1);
    return constant(params[0]);
  case DelayFamily::Tabulated:
    return tabulated(params);
  }
  throw ConfigError("unknown delay family");
}

double DelayFunction::operator()(double x) const {
  switch (family_) {
  case DelayFamily::Cosine4:
    return params_[0] + params_[1] * std::cos(4.0 * std::acos(std::clamp(x, -1.0, 1.0)));
  case DelayFamily::Exponential:
    return std::exp(-params_[0] * x);
  case DelayFamily::Constant:
    return params_[0];
  case DelayFamily::Tabulated: {
    const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(params_.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), params_.size() - 2);
    const double frac = pos - static_cast<double>(k);
    return params_[k] * (1.0 - frac) + params_[k + 1] * frac;
  }
  }
  return 0.0;
}

std::vector<double> DelayFunction::sample(const SpatialGrid& grid) const {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out[i] = (*this)(grid.node(i));
  }
  return out;
}

double DelayFunction::tau_bar(const SpatialGrid& grid) const {
  const auto s = sample(grid);
  return *std::max_element(s.begin(), s.end());
}

std::string DelayFunction::describe() const {
  std::ostringstream os;
  os << to_string(family_) << "(";
  for (std::size_t i = 0; i < params_.size(); ++i) {
    os << (i ? "," : "") << params_[i];
  }
  os << ")";
  return os.str();
}

DelayReport validate_delay(const DelayFunction& tau, const SpatialGrid& grid) {
  constexpr double h = 1e-5;
  DelayReport report;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    const double value = tau(x);
    if (!std::isfinite(value)) {
      std::ostringstream os;
      os << "delay " << tau.describe() << " is not finite at x=" << x;
      throw InvalidDelayError(os.str());
    }
    if (value <= 0.0) {
      report.violations.push_back({DelayViolation::Kind::NonPositive, x, value});
      continue;
    }
    if (value < x) {
      const double lo = std::max(0.0, x - h);
      const double hi = std::min(1.0, x + h);
      const double slope = std::abs((tau(hi) - tau(lo)) / (hi - lo));
      if (!(slope < 1.0)) {
        report.violations.push_back({DelayViolation::Kind::Slope, x, slope});
      }
    }
  }
  report.in_class_d = report.violations.empty();
  return report;
}

} // namespace nosac
