#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "nosac/sac.hpp"

namespace nosac {

/// Row-major [B, nx + nx*nx] batch of v followed by u.
template <typename T>
ad::Var<T> pack_flat_state(ad::Tape<T>& tape, const ObsBatch& obs);

/// [B,21,21,3] NHWC batch of (tau, v, u).
template <typename T>
ad::Var<T> pack_branch_batch(ad::Tape<T>& tape, const ObsBatch& obs);

/// Stack of ReLU dense layers followed by a linear output layer.
/// Parameters are named fc1.w, fc1.b, ..., out.w, out.b.
template <typename T>
class Mlp {
public:
  Mlp() = default;
  Mlp(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out, std::uint64_t seed,
      const std::string& name_prefix = "");

  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> x, bool track);
  ad::ParamRefs<T> params();
  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  std::vector<ad::Parameter<T>> weights_;
  std::vector<ad::Parameter<T>> biases_;
};

/// Baseline actor on the flattened augmented state.
template <typename T>
class MlpActor final : public ActorNetwork<T> {
public:
  MlpActor(std::size_t nx, const std::vector<std::size_t>& hidden, std::uint64_t seed);
  ad::Var<T> forward(ad::Tape<T>& tape, const ObsBatch& obs, bool track) override;
  ad::ParamRefs<T> params() override { return mlp_.params(); }
  std::unique_ptr<ActorNetwork<T>> clone() const override { return std::make_unique<MlpActor>(*this); }

private:
  Mlp<T> mlp_;
};

/// Baseline critic; the action joins the state at the first layer.
template <typename T>
class MlpCritic final : public CriticNetwork<T> {
public:
  MlpCritic(std::size_t nx, const std::vector<std::size_t>& hidden, std::uint64_t seed);
  ad::Var<T> forward(ad::Tape<T>& tape, const ObsBatch& obs, ad::Var<T> action_unit, bool track) override;
  ad::ParamRefs<T> params() override { return mlp_.params(); }
  std::unique_ptr<CriticNetwork<T>> clone() const override { return std::make_unique<MlpCritic>(*this); }

private:
  Mlp<T> mlp_;
};

/// Actor, twin critics and targets of the baseline agent.
template <typename T>
SacNetworks<T> make_mlp_networks(std::size_t nx, const std::vector<std::size_t>& hidden, std::uint64_t seed);

extern template class Mlp<float>;
extern template class Mlp<double>;
extern template class MlpActor<float>;
extern template class MlpActor<double>;
extern template class MlpCritic<float>;
extern template class MlpCritic<double>;

} // namespace nosac
