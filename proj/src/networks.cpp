#include "nosac/networks.hpp"

#include <random>

#include "nosac/deeponet.hpp"
#include "nosac/errors.hpp"
#include "nosac/seed.hpp"

namespace nosac {

template <typename T>
ad::Var<T> pack_flat_state(ad::Tape<T>& tape, const ObsBatch& obs) {
  if (obs.empty()) throw ShapeError("pack_flat_state: empty batch");
  const std::size_t nx = obs[0]->v.size();
  const std::size_t width = nx + nx * nx;
  ad::Tensor<T> x({obs.size(), width});
  for (std::size_t b = 0; b < obs.size(); ++b) {
    const auto& o = *obs[b];
    if (o.v.size() != nx || o.u.size() != nx * nx) throw ShapeError("pack_flat_state: ragged batch");
    T* row = x.data.data() + b * width;
    for (std::size_t i = 0; i < nx; ++i) row[i] = static_cast<T>(o.v[i]);
    for (std::size_t k = 0; k < nx * nx; ++k) row[nx + k] = static_cast<T>(o.u[k]);
  }
  return tape.constant(std::move(x));
}

template <typename T>
ad::Var<T> pack_branch_batch(ad::Tape<T>& tape, const ObsBatch& obs) {
  using namespace deeponet_shape;
  constexpr std::size_t per = kGrid * kGrid * kChannels;
  ad::Tensor<T> x({obs.size(), kGrid, kGrid, kChannels});
  for (std::size_t b = 0; b < obs.size(); ++b) {
    pack_branch_nhwc<T>(obs[b]->tau, obs[b]->v, obs[b]->u, x.data.data() + b * per);
  }
  return tape.constant(std::move(x));
}

template ad::Var<float> pack_flat_state<float>(ad::Tape<float>&, const ObsBatch&);
template ad::Var<double> pack_flat_state<double>(ad::Tape<double>&, const ObsBatch&);
template ad::Var<float> pack_branch_batch<float>(ad::Tape<float>&, const ObsBatch&);
template ad::Var<double> pack_branch_batch<double>(ad::Tape<double>&, const ObsBatch&);

template <typename T>
Mlp<T>::Mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, std::uint64_t seed,
            const std::string& name_prefix)
    : in_(in), out_(out) {
  std::mt19937_64 rng(seed);
  std::size_t prev = in;
  const std::size_t layers = hidden.size() + 1;
  weights_.reserve(layers);
  biases_.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const bool last = l == hidden.size();
    const std::size_t width = last ? out : hidden[l];
    const std::string name = name_prefix + (last ? "out" : "fc" + std::to_string(l + 1));
    weights_.emplace_back(name + ".w", ad::Shape{prev, width});
    biases_.emplace_back(name + ".b", ad::Shape{width});
    ad::init_fan_in(weights_.back(), prev, rng);
    ad::init_fan_in(biases_.back(), prev, rng);
    prev = width;
  }
}

template <typename T>
ad::Var<T> Mlp<T>::forward(ad::Tape<T>& tape, ad::Var<T> x, bool track) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    x = ad::dense(x, tape.parameter(weights_[l], track), tape.parameter(biases_[l], track));
    if (l + 1 < weights_.size()) x = ad::relu(x);
  }
  return x;
}

template <typename T>
ad::ParamRefs<T> Mlp<T>::params() {
  ad::ParamRefs<T> p;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    p.push_back(&weights_[l]);
    p.push_back(&biases_[l]);
  }
  return p;
}

template <typename T>
MlpActor<T>::MlpActor(std::size_t nx, const std::vector<std::size_t>& hidden, std::uint64_t seed)
    : mlp_(nx + nx * nx, hidden, 2, seed) {}

template <typename T>
ad::Var<T> MlpActor<T>::forward(ad::Tape<T>& tape, const ObsBatch& obs, bool track) {
  return mlp_.forward(tape, pack_flat_state(tape, obs), track);
}

template <typename T>
MlpCritic<T>::MlpCritic(std::size_t nx, const std::vector<std::size_t>& hidden, std::uint64_t seed)
    : mlp_(nx + nx * nx + 1, hidden, 1, seed) {}

template <typename T>
ad::Var<T> MlpCritic<T>::forward(ad::Tape<T>& tape, const ObsBatch& obs, ad::Var<T> action_unit, bool track) {
  return mlp_.forward(tape, ad::concat(pack_flat_state(tape, obs), action_unit), track);
}

template <typename T>
SacNetworks<T> make_mlp_networks(std::size_t nx, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  return SacNetworks<T>::make(std::make_unique<MlpActor<T>>(nx, hidden, stream_seed(seed, 1)),
                              std::make_unique<MlpCritic<T>>(nx, hidden, stream_seed(seed, 2)),
                              std::make_unique<MlpCritic<T>>(nx, hidden, stream_seed(seed, 3)));
}

template SacNetworks<float> make_mlp_networks<float>(std::size_t, const std::vector<std::size_t>&, std::uint64_t);
template SacNetworks<double> make_mlp_networks<double>(std::size_t, const std::vector<std::size_t>&, std::uint64_t);

template class Mlp<float>;
template class Mlp<double>;
template class MlpActor<float>;
template class MlpActor<double>;
template class MlpCritic<float>;
template class MlpCritic<double>;

} // namespace nosac
