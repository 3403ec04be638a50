#pragma once

#include <span>

#include "nosac/plant.hpp"

namespace nosac {

struct RewardParams {
  double gamma_weight = 0.008; // weight on ln(1 + ||s_t||)
  double sigma_scale = 300.0;  // terminal bonus scale
  double zeta = 10.0;          // terminal success threshold on ||s_T||
  NormMode norm = NormMode::Augmented;

  void validate() const;
};

struct RewardTerms {
  double mid = 0.0;
  double end = 0.0;
  double total() const { return mid + end; }
};

/// r_mid = -ln(1 + ||prev - cur||) - Gamma ln(1 + ||cur||); on the final
/// step r_end = sigma / (1 + sum_i ||s_i||) when ||cur|| <= zeta, else 0.
RewardTerms compute_reward(const AugmentedState& prev, const AugmentedState& cur, const SpatialGrid& grid,
                           const RewardParams& params, bool is_final, std::span<const double> norm_trace);

/// Same formula on precomputed norms.
RewardTerms reward_from_norms(double diff_norm, double cur_norm, const RewardParams& params, bool is_final,
                              std::span<const double> norm_trace);

} // namespace nosac
