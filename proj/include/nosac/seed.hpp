#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace nosac {

/// Component labels accepted by derive_seed.
std::span<const std::string_view> seed_registry();

/// splitmix64(master ^ fnv1a64(label)). Stable across releases; throws
/// ConfigError for a label outside the registry.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// Independent stream `index` of a seed: splitmix64(seed ^ splitmix64(index + 1)).
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view bytes);

} // namespace nosac
