#pragma once

#include <cstdint>
#include <memory>

#include "nosac/deeponet.hpp"
#include "nosac/networks.hpp"
#include "nosac/sac.hpp"

namespace nosac {

inline constexpr std::size_t kNoSacHeadWidth = 256;

/// Extractor copy plus a 441 -> 256 -> (mean, log-std) head. Extractor
/// parameters are renamed extractor.* and head parameters head.*.
template <typename T>
class NoSacActor final : public ActorNetwork<T> {
public:
  NoSacActor(const DeepONet<T>& extractor, std::uint64_t head_seed);
  ad::Var<T> forward(ad::Tape<T>& tape, const ObsBatch& obs, bool track) override;
  ad::ParamRefs<T> params() override;
  std::unique_ptr<ActorNetwork<T>> clone() const override { return std::make_unique<NoSacActor>(*this); }

  /// [B,441] extractor output.
  ad::Var<T> features(ad::Tape<T>& tape, const ObsBatch& obs, bool track);
  DeepONet<T>& extractor() { return extractor_; }
  Mlp<T>& head() { return head_; }

private:
  DeepONet<T> extractor_;
  Mlp<T> head_;
};

/// Extractor copy plus a (441 + 1) -> 256 -> 1 head on features and action.
template <typename T>
class NoSacCritic final : public CriticNetwork<T> {
public:
  NoSacCritic(const DeepONet<T>& extractor, std::uint64_t head_seed);
  ad::Var<T> forward(ad::Tape<T>& tape, const ObsBatch& obs, ad::Var<T> action_unit, bool track) override;
  ad::ParamRefs<T> params() override;
  std::unique_ptr<CriticNetwork<T>> clone() const override { return std::make_unique<NoSacCritic>(*this); }

  ad::Var<T> features(ad::Tape<T>& tape, const ObsBatch& obs, bool track);
  DeepONet<T>& extractor() { return extractor_; }
  Mlp<T>& head() { return head_; }

private:
  DeepONet<T> extractor_;
  Mlp<T> head_;
};

/// The five networks and the untouched pretrained original.
template <typename T>
struct NoSacBundle {
  DeepONet<T> original;
  SacNetworks<T> nets;

  NoSacActor<T>& actor() { return static_cast<NoSacActor<T>&>(*nets.actor); }
  NoSacCritic<T>& critic(int i) { return static_cast<NoSacCritic<T>&>(i == 1 ? *nets.critic1 : *nets.critic2); }
  NoSacCritic<T>& target(int i) { return static_cast<NoSacCritic<T>&>(i == 1 ? *nets.target1 : *nets.target2); }
};

/// Copies the pretrained extractor into actor, critics and targets and
/// draws fresh heads; targets start equal to their critics. With
/// `freeze_extractor` the copies receive no gradient.
template <typename T>
NoSacBundle<T> assemble(const NetworkWeights& pretrained, std::uint64_t head_seed, bool freeze_extractor = false);

/// Variant with randomly initialised extractors (architecture-matched ablation).
template <typename T>
NoSacBundle<T> assemble_random(std::uint64_t seed, bool freeze_extractor = false);

extern template class NoSacActor<float>;
extern template class NoSacActor<double>;
extern template class NoSacCritic<float>;
extern template class NoSacCritic<double>;

} // namespace nosac
