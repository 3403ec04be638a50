#pragma once

#include <cstdint>
#include <vector>

namespace nosac {

/// Ring buffer of boundary samples v(1, k*dt), k = 0..step().
///
/// Times before zero read as 0 (zero pre-history). Off-grid times are
/// linearly interpolated between neighbouring samples.
class BoundaryHistory {
public:
  BoundaryHistory(double dt, double span);

  void clear();
  void push(double value);

  bool empty() const { return count_ == 0; }
  /// Index of the newest sample; its time is step() * dt.
  std::int64_t step() const { return static_cast<std::int64_t>(count_) - 1; }
  double time() const { return static_cast<double>(step()) * dt_; }
  double dt() const { return dt_; }
  std::size_t capacity() const { return samples_.size(); }
  double latest() const;

  /// v(1, t - delay). t is snapped to the sample grid when within 1e-9 steps.
  double delayed_boundary(double t, double delay) const;

  /// v(1, now - delay) relative to the newest sample.
  double delayed(double delay) const;

  /// v(1, s) at absolute time s.
  double value_at(double s) const;

private:
  double at_position(double position) const;
  double sample(std::int64_t k) const;

  double dt_;
  std::vector<double> samples_;
  std::size_t count_ = 0;
};

} // namespace nosac
