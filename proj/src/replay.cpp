#include "nosac/replay.hpp"

#include "nosac/errors.hpp"

namespace nosac {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (slots_.size() < capacity_) {
    slots_.push_back(std::move(t));
  } else {
    slots_[head_] = std::move(t);
  }
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  ++pushed_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at");
  const std::size_t oldest = size_ < capacity_ ? 0 : head_;
  return slots_[(oldest + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t k, std::mt19937_64& rng) const {
  if (size_ == 0) throw ProtocolError("ReplayBuffer::sample on an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(k);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t k, std::mt19937_64& rng) const {
  std::vector<const Transition*> out;
  out.reserve(k);
  for (auto i : sample_indices(k, rng)) out.push_back(&at(i));
  return out;
}

} // namespace nosac
