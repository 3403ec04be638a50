#include "nosac/reward.hpp"

#include <cmath>

#include "nosac/errors.hpp"

namespace nosac {

void RewardParams::validate() const {
  if (!(gamma_weight > 0.0)) throw ConfigError("reward: gamma_weight must be positive");
  if (!(sigma_scale > 0.0)) throw ConfigError("reward: sigma_scale must be positive");
  if (!(zeta > 0.0)) throw ConfigError("reward: zeta must be positive");
}

RewardTerms reward_from_norms(double diff_norm, double cur_norm, const RewardParams& params, bool is_final,
                              std::span<const double> norm_trace) {
  RewardTerms r;
  r.mid = -std::log1p(diff_norm) - params.gamma_weight * std::log1p(cur_norm);
  if (is_final && cur_norm <= params.zeta) {
    double total = 0.0;
    for (double n : norm_trace) total += n;
    r.end = params.sigma_scale / (1.0 + total);
  }
  return r;
}

RewardTerms compute_reward(const AugmentedState& prev, const AugmentedState& cur, const SpatialGrid& grid,
                           const RewardParams& params, bool is_final, std::span<const double> norm_trace) {
  return reward_from_norms(l2_distance(prev, cur, grid, params.norm), l2_norm(cur, grid, params.norm), params,
                           is_final, norm_trace);
}

} // namespace nosac
