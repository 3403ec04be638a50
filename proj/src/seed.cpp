#include "nosac/seed.hpp"

#include <algorithm>
#include <array>

#include "nosac/errors.hpp"

namespace nosac {

namespace {
constexpr std::array<std::string_view, 8> kRegistry{"env", "policy", "buffer", "init", "dataset", "pretrain", "update", "eval"};
}

std::span<const std::string_view> seed_registry() { return kRegistry; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
  if (std::find(kRegistry.begin(), kRegistry.end(), label) == kRegistry.end()) {
    throw ConfigError("unknown seed label '" + std::string(label) + "'");
  }
  return splitmix64(master ^ fnv1a64(label));
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) { return splitmix64(seed ^ splitmix64(index + 1)); }

} // namespace nosac
