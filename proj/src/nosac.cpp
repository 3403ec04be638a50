#include "nosac/nosac.hpp"

#include "nosac/errors.hpp"
#include "nosac/seed.hpp"

namespace nosac {

namespace {

template <typename T>
void rename_extractor(DeepONet<T>& net) {
  for (auto* p : net.params()) p->name = "extractor." + p->name;
}

} // namespace

template <typename T>
NoSacActor<T>::NoSacActor(const DeepONet<T>& extractor, std::uint64_t head_seed)
    : extractor_(extractor), head_(deeponet_shape::kQueries, {kNoSacHeadWidth}, 2, head_seed, "head.") {
  rename_extractor(extractor_);
}

template <typename T>
ad::Var<T> NoSacActor<T>::features(ad::Tape<T>& tape, const ObsBatch& obs, bool track) {
  return extractor_.features(tape, pack_branch_batch(tape, obs), track);
}

template <typename T>
ad::Var<T> NoSacActor<T>::forward(ad::Tape<T>& tape, const ObsBatch& obs, bool track) {
  return head_.forward(tape, features(tape, obs, track), track);
}

template <typename T>
ad::ParamRefs<T> NoSacActor<T>::params() {
  auto p = extractor_.extractor_params();
  for (auto* h : head_.params()) p.push_back(h);
  return p;
}

template <typename T>
NoSacCritic<T>::NoSacCritic(const DeepONet<T>& extractor, std::uint64_t head_seed)
    : extractor_(extractor), head_(deeponet_shape::kQueries + 1, {kNoSacHeadWidth}, 1, head_seed, "head.") {
  rename_extractor(extractor_);
}

template <typename T>
ad::Var<T> NoSacCritic<T>::features(ad::Tape<T>& tape, const ObsBatch& obs, bool track) {
  return extractor_.features(tape, pack_branch_batch(tape, obs), track);
}

template <typename T>
ad::Var<T> NoSacCritic<T>::forward(ad::Tape<T>& tape, const ObsBatch& obs, ad::Var<T> action_unit, bool track) {
  return head_.forward(tape, ad::concat(features(tape, obs, track), action_unit), track);
}

template <typename T>
ad::ParamRefs<T> NoSacCritic<T>::params() {
  auto p = extractor_.extractor_params();
  for (auto* h : head_.params()) p.push_back(h);
  return p;
}

namespace {

template <typename T>
NoSacBundle<T> assemble_from(DeepONet<T> original, std::uint64_t head_seed, bool freeze) {
  DeepONet<T> copy = original;
  copy.set_extractor_trainable(!freeze);
  auto nets = SacNetworks<T>::make(std::make_unique<NoSacActor<T>>(copy, stream_seed(head_seed, 1)),
                                   std::make_unique<NoSacCritic<T>>(copy, stream_seed(head_seed, 2)),
                                   std::make_unique<NoSacCritic<T>>(copy, stream_seed(head_seed, 3)));
  return NoSacBundle<T>{std::move(original), std::move(nets)};
}

} // namespace

template <typename T>
NoSacBundle<T> assemble(const NetworkWeights& pretrained, std::uint64_t head_seed, bool freeze_extractor) {
  DeepONet<T> original;
  original.import_weights(pretrained);
  return assemble_from(std::move(original), head_seed, freeze_extractor);
}

template <typename T>
NoSacBundle<T> assemble_random(std::uint64_t seed, bool freeze_extractor) {
  return assemble_from(DeepONet<T>(stream_seed(seed, 0)), seed, freeze_extractor);
}

template NoSacBundle<float> assemble<float>(const NetworkWeights&, std::uint64_t, bool);
template NoSacBundle<double> assemble<double>(const NetworkWeights&, std::uint64_t, bool);
template NoSacBundle<float> assemble_random<float>(std::uint64_t, bool);
template NoSacBundle<double> assemble_random<double>(std::uint64_t, bool);

template class NoSacActor<float>;
template class NoSacActor<double>;
template class NoSacCritic<float>;
template class NoSacCritic<double>;

} // namespace nosac
