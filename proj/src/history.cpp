#include "nosac/history.hpp"

#include <cmath>
#include <sstream>

#include "nosac/errors.hpp"

namespace nosac {

BoundaryHistory::BoundaryHistory(double dt, double span) : dt_(dt) {
  if (!(dt > 0.0) || !(span >= 0.0)) {
    throw std::invalid_argument("BoundaryHistory: dt must be positive and span non-negative");
  }
  samples_.resize(static_cast<std::size_t>(std::ceil(span / dt)) + 2);
}

void BoundaryHistory::clear() { count_ = 0; }

void BoundaryHistory::push(double value) {
  samples_[count_ % samples_.size()] = value;
  ++count_;
}

double BoundaryHistory::latest() const {
  if (empty()) {
    throw ProtocolError("BoundaryHistory: no samples recorded");
  }
  return sample(step());
}

double BoundaryHistory::sample(std::int64_t k) const {
  return samples_[static_cast<std::size_t>(k) % samples_.size()];
}

double BoundaryHistory::at_position(double position) const {
  if (empty()) {
    throw ProtocolError("BoundaryHistory: no samples recorded");
  }
  if (position < 0.0) {
    return 0.0;
  }
  const auto newest = step();
  if (position > static_cast<double>(newest) + 1e-9) {
    std::ostringstream os;
    os << "BoundaryHistory: query at step " << position << " is ahead of newest sample " << newest;
    throw ProtocolError(os.str());
  }
  auto k0 = static_cast<std::int64_t>(std::floor(position));
  double frac = position - static_cast<double>(k0);
  if (k0 >= newest) {
    return sample(newest);
  }
  const auto oldest = newest - static_cast<std::int64_t>(samples_.size()) + 1;
  if (k0 < oldest) {
    std::ostringstream os;
    os << "BoundaryHistory: query at step " << position << " precedes retained window starting at "
       << oldest;
    throw HistoryUnderrunError(os.str());
  }
  if (frac == 0.0) {
    return sample(k0);
  }
  return sample(k0) * (1.0 - frac) + sample(k0 + 1) * frac;
}

double BoundaryHistory::delayed(double delay) const {
  if (delay < 0.0) {
    throw std::invalid_argument("BoundaryHistory: negative delay");
  }
  return at_position(static_cast<double>(step()) - delay / dt_);
}

double BoundaryHistory::delayed_boundary(double t, double delay) const {
  if (delay < 0.0) {
    throw std::invalid_argument("BoundaryHistory: negative delay");
  }
  double steps = t / dt_;
  const double nearest = std::round(steps);
  if (std::abs(steps - nearest) < 1e-9) {
    steps = nearest;
  }
  return at_position(steps - delay / dt_);
}

double BoundaryHistory::value_at(double s) const { return delayed_boundary(s, 0.0); }

} // namespace nosac
