#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nosac/env.hpp"

namespace nosac {

struct Transition {
  Observation s;
  double a = 0.0;
  double r = 0.0;
  Observation s_next;
  bool truncated = false;
};

/// FIFO ring buffer with uniform sampling (with replacement).
class ReplayBuffer {
public:
  explicit ReplayBuffer(std::size_t capacity = 100000);

  void push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// Total pushes since construction.
  std::uint64_t pushed() const { return pushed_; }

  /// Slot order: 0 is the oldest retained transition.
  const Transition& at(std::size_t i) const;

  std::vector<std::size_t> sample_indices(std::size_t k, std::mt19937_64& rng) const;
  std::vector<const Transition*> sample(std::size_t k, std::mt19937_64& rng) const;

private:
  std::size_t capacity_;
  std::vector<Transition> slots_;
  std::size_t head_ = 0; // next write position
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

} // namespace nosac
