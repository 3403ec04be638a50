#include "nosac/deeponet.hpp"

#include <random>

#include "nosac/errors.hpp"

namespace nosac {

using namespace deeponet_shape;

BranchInput build_branch_input(std::span<const double> tau, std::span<const double> v, std::span<const double> u) {
  const std::size_t n = v.size();
  if (n != kGrid || tau.size() != n || u.size() != n * n) {
    throw ShapeError("DeepONet: unsupported resolution nx=" + std::to_string(n) + " (requires " +
                     std::to_string(kGrid) + ")");
  }
  BranchInput in;
  in.nx = n;
  in.data.resize(kChannels * n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      in.data[(0 * n + i) * n + j] = tau[i];
      in.data[(1 * n + i) * n + j] = v[i];
      in.data[(2 * n + i) * n + j] = u[i * n + j];
    }
  }
  return in;
}

std::vector<double> trunk_coordinates(const SpatialGrid& grid) {
  const std::size_t n = grid.size();
  std::vector<double> q;
  q.reserve(n * n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      q.push_back(grid.node(i));
      q.push_back(grid.node(j));
    }
  }
  return q;
}

template <typename T>
void pack_branch_nhwc(std::span<const double> tau, std::span<const double> v, std::span<const double> u, T* dst) {
  if (v.size() != kGrid || tau.size() != kGrid || u.size() != kQueries) {
    throw ShapeError("DeepONet: unsupported resolution nx=" + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < kGrid; ++i) {
    for (std::size_t j = 0; j < kGrid; ++j) {
      T* px = dst + (i * kGrid + j) * kChannels;
      px[0] = static_cast<T>(tau[i]);
      px[1] = static_cast<T>(v[i]);
      px[2] = static_cast<T>(u[i * kGrid + j]);
    }
  }
}

template void pack_branch_nhwc<float>(std::span<const double>, std::span<const double>, std::span<const double>,
                                      float*);
template void pack_branch_nhwc<double>(std::span<const double>, std::span<const double>, std::span<const double>,
                                       double*);

template <typename T>
ad::Var<T> branch_constant(ad::Tape<T>& tape, const BranchInput& input) {
  if (input.nx != kGrid) throw ShapeError("DeepONet: unsupported resolution nx=" + std::to_string(input.nx));
  ad::Tensor<T> x({1, kGrid, kGrid, kChannels});
  for (std::size_t c = 0; c < kChannels; ++c)
    for (std::size_t i = 0; i < kGrid; ++i)
      for (std::size_t j = 0; j < kGrid; ++j) x.data[(i * kGrid + j) * kChannels + c] = static_cast<T>(input.at(c, i, j));
  return tape.constant(std::move(x));
}

template ad::Var<float> branch_constant<float>(ad::Tape<float>&, const BranchInput&);
template ad::Var<double> branch_constant<double>(ad::Tape<double>&, const BranchInput&);

template <typename T>
DeepONet<T>::DeepONet(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t k2 = kKernel * kKernel;
  ad::init_fan_in(conv1_w, k2 * kChannels, rng);
  ad::init_fan_in(conv1_b, k2 * kChannels, rng);
  ad::init_fan_in(conv2_w, k2 * kConv1, rng);
  ad::init_fan_in(conv2_b, k2 * kConv1, rng);
  ad::init_fan_in(fc_w, kFlatten, rng);
  ad::init_fan_in(fc_b, kFlatten, rng);
  ad::init_fan_in(trunk1_w, 2, rng);
  ad::init_fan_in(trunk1_b, 2, rng);
  ad::init_fan_in(trunk2_w, kTrunkHidden, rng);
  ad::init_fan_in(trunk2_b, kTrunkHidden, rng);
  ad::init_fan_in(head_w, kQueries, rng);
  ad::init_fan_in(head_b, kQueries, rng);
  const auto q = trunk_coordinates(SpatialGrid(kGrid));
  trunk_coords_.assign(q.begin(), q.end());
}

template <typename T>
ad::ParamRefs<T> DeepONet<T>::extractor_params() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b, &trunk1_w, &trunk1_b, &trunk2_w, &trunk2_b};
}

template <typename T>
ad::ParamRefs<T> DeepONet<T>::head_params() {
  return {&head_w, &head_b};
}

template <typename T>
ad::ParamRefs<T> DeepONet<T>::params() {
  auto p = extractor_params();
  p.push_back(&head_w);
  p.push_back(&head_b);
  return p;
}

template <typename T>
void DeepONet<T>::set_extractor_trainable(bool trainable) {
  for (auto* p : extractor_params()) p->trainable = trainable;
}

template <typename T>
ad::Var<T> DeepONet<T>::encode_branch(ad::Tape<T>& tape, ad::Var<T> x, bool track) {
  const auto& s = x.shape();
  if (s.size() != 4 || s[1] != kGrid || s[2] != kGrid || s[3] != kChannels) {
    throw ShapeError("DeepONet::encode_branch: expected [B,21,21,3], got " + ad::shape_str(s));
  }
  auto h = ad::relu(ad::conv2d(x, tape.parameter(conv1_w, track), tape.parameter(conv1_b, track), kStride));
  h = ad::relu(ad::conv2d(h, tape.parameter(conv2_w, track), tape.parameter(conv2_b, track), kStride));
  const std::size_t batch = s[0];
  h = ad::reshape(h, {batch, kFlatten});
  return ad::dense(h, tape.parameter(fc_w, track), tape.parameter(fc_b, track));
}

template <typename T>
ad::Var<T> DeepONet<T>::encode_trunk(ad::Tape<T>& tape, bool track) {
  auto q = tape.constant(ad::Shape{kQueries, 2}, std::span<const T>(trunk_coords_));
  auto h = ad::relu(ad::dense(q, tape.parameter(trunk1_w, track), tape.parameter(trunk1_b, track)));
  return ad::dense(h, tape.parameter(trunk2_w, track), tape.parameter(trunk2_b, track));
}

template <typename T>
ad::Var<T> DeepONet<T>::features(ad::Tape<T>& tape, ad::Var<T> x, bool track) {
  return combine(encode_branch(tape, x, track), encode_trunk(tape, track));
}

template <typename T>
ad::Var<T> DeepONet<T>::control_head(ad::Tape<T>& tape, ad::Var<T> f, bool track) {
  if (f.shape().size() != 2 || f.shape()[1] != kQueries) {
    throw ShapeError("DeepONet::control_head: expected [B,441], got " + ad::shape_str(f.shape()));
  }
  return ad::dense(f, tape.parameter(head_w, track), tape.parameter(head_b, track));
}

template <typename T>
std::vector<T> DeepONet<T>::features(const BranchInput& input) {
  ad::Tape<T> tape;
  auto f = features(tape, branch_constant(tape, input), false);
  return {f.value().begin(), f.value().end()};
}

template <typename T>
T DeepONet<T>::control(const BranchInput& input) {
  ad::Tape<T> tape;
  return control_head(tape, features(tape, branch_constant(tape, input), false), false).item();
}

template <typename T>
NetworkWeights DeepONet<T>::export_weights(const std::string& prefix) const {
  return export_params(const_cast<DeepONet*>(this)->params(), prefix);
}

template <typename T>
void DeepONet<T>::import_weights(const NetworkWeights& w, const std::string& prefix) {
  import_params(w, params(), prefix);
}

template class DeepONet<float>;
template class DeepONet<double>;

} // namespace nosac
