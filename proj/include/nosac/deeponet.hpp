#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nosac/grid.hpp"
#include "nosac/tensor.hpp"
#include "nosac/weights_io.hpp"

namespace nosac {

namespace deeponet_shape {
inline constexpr std::size_t kGrid = 21;
inline constexpr std::size_t kChannels = 3;
inline constexpr std::size_t kQueries = kGrid * kGrid; // 441
inline constexpr std::size_t kKernel = 5;
inline constexpr std::size_t kStride = 2;
inline constexpr std::size_t kConv1 = 64;
inline constexpr std::size_t kConv2 = 128;
inline constexpr std::size_t kConv1Out = (kGrid - kKernel) / kStride + 1;     // 9
inline constexpr std::size_t kConv2Out = (kConv1Out - kKernel) / kStride + 1; // 3
inline constexpr std::size_t kFlatten = kConv2 * kConv2Out * kConv2Out;       // 1152
inline constexpr std::size_t kLatent = 256;
inline constexpr std::size_t kTrunkHidden = 128;

static_assert(kFlatten == 1152, "branch flatten must feed the 1152x256 layer");
static_assert(kQueries == 441, "one feature per (x, r) query point");
} // namespace deeponet_shape

/// Channel-first 3 x nx x nx input: [0] tau(x_i), [1] v(x_i), both broadcast
/// along r, and [2] u(x_i, r_j).
struct BranchInput {
  std::size_t nx = 0;
  std::vector<double> data;

  double at(std::size_t channel, std::size_t i, std::size_t j) const {
    return data[(channel * nx + i) * nx + j];
  }
};

/// Throws ShapeError unless nx == 21 (the only supported resolution).
BranchInput build_branch_input(std::span<const double> tau, std::span<const double> v, std::span<const double> u);

/// (x_i, r_j) coordinates in row-major order, 441 x 2.
std::vector<double> trunk_coordinates(const SpatialGrid& grid);

/// Writes one BranchInput as NHWC into `dst` (21*21*3 values).
template <typename T>
void pack_branch_nhwc(std::span<const double> tau, std::span<const double> v, std::span<const double> u, T* dst);

/// Branch/trunk operator network mapping (tau, v, u) to 441 features and,
/// through an affine head, to a scalar control.
///
/// Weights are stored as dense [in, out] and conv [out, k, k, in] (NHWC).
template <typename T>
class DeepONet {
public:
  explicit DeepONet(std::uint64_t seed = 0);

  ad::Parameter<T> conv1_w{"branch.conv1.w", {deeponet_shape::kConv1, 5, 5, deeponet_shape::kChannels}};
  ad::Parameter<T> conv1_b{"branch.conv1.b", {deeponet_shape::kConv1}};
  ad::Parameter<T> conv2_w{"branch.conv2.w", {deeponet_shape::kConv2, 5, 5, deeponet_shape::kConv1}};
  ad::Parameter<T> conv2_b{"branch.conv2.b", {deeponet_shape::kConv2}};
  ad::Parameter<T> fc_w{"branch.fc.w", {deeponet_shape::kFlatten, deeponet_shape::kLatent}};
  ad::Parameter<T> fc_b{"branch.fc.b", {deeponet_shape::kLatent}};
  ad::Parameter<T> trunk1_w{"trunk.fc1.w", {2, deeponet_shape::kTrunkHidden}};
  ad::Parameter<T> trunk1_b{"trunk.fc1.b", {deeponet_shape::kTrunkHidden}};
  ad::Parameter<T> trunk2_w{"trunk.fc2.w", {deeponet_shape::kTrunkHidden, deeponet_shape::kLatent}};
  ad::Parameter<T> trunk2_b{"trunk.fc2.b", {deeponet_shape::kLatent}};
  ad::Parameter<T> head_w{"head.w", {deeponet_shape::kQueries, 1}};
  ad::Parameter<T> head_b{"head.b", {1}};

  /// Branch and trunk parameters (the feature extractor).
  ad::ParamRefs<T> extractor_params();
  ad::ParamRefs<T> head_params();
  ad::ParamRefs<T> params();

  void set_extractor_trainable(bool trainable);

  /// x: [B,21,21,3] -> [B,256]
  ad::Var<T> encode_branch(ad::Tape<T>& tape, ad::Var<T> x, bool track = true);
  /// [441,256] embedding of the fixed query grid.
  ad::Var<T> encode_trunk(ad::Tape<T>& tape, bool track = true);
  /// [B,441] features; feature_j = <branch, trunk_j>.
  ad::Var<T> features(ad::Tape<T>& tape, ad::Var<T> x, bool track = true);
  /// [B,441] -> [B,1]
  ad::Var<T> control_head(ad::Tape<T>& tape, ad::Var<T> features, bool track = true);

  std::vector<T> features(const BranchInput& input);
  T control(const BranchInput& input);

  NetworkWeights export_weights(const std::string& prefix = "") const;
  void import_weights(const NetworkWeights& w, const std::string& prefix = "");

private:
  std::vector<T> trunk_coords_;
};

/// feature_j = sum_k branch_k trunk_{j,k}; branch [B,256], trunk [441,256].
template <typename T>
ad::Var<T> combine(ad::Var<T> branch, ad::Var<T> trunk) {
  return ad::matmul_nt(branch, trunk);
}

/// Packs a 3x21x21 channel-first input into a [1,21,21,3] tape constant.
template <typename T>
ad::Var<T> branch_constant(ad::Tape<T>& tape, const BranchInput& input);

extern template class DeepONet<float>;
extern template class DeepONet<double>;

} // namespace nosac
