#include "nosac/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nosac/csv.hpp"
#include "nosac/errors.hpp"
#include "nosac/optim.hpp"

namespace nosac {

using namespace deeponet_shape;

namespace {

constexpr std::size_t kInputSize = kGrid * kGrid * kChannels;

ad::Tensor<float> pack(const OperatorSamples& data, std::span<const std::size_t> idx) {
  ad::Tensor<float> x({idx.size(), kGrid, kGrid, kChannels});
  for (std::size_t b = 0; b < idx.size(); ++b) {
    const auto& s = data.samples[idx[b]];
    pack_branch_nhwc<float>(s.tau, s.v, s.u, x.data.data() + b * kInputSize);
  }
  return x;
}

ad::Tensor<float> labels(const OperatorSamples& data, std::span<const std::size_t> idx) {
  ad::Tensor<float> y({idx.size(), 1});
  for (std::size_t b = 0; b < idx.size(); ++b) y.data[b] = static_cast<float>(data.samples[idx[b]].label);
  return y;
}

} // namespace

FitError evaluate_fit(DeepONet<float>& net, const OperatorSamples& data, std::span<const std::size_t> indices) {
  constexpr std::size_t kChunk = 256;
  double se = 0.0, norm = 0.0;
  for (std::size_t start = 0; start < indices.size(); start += kChunk) {
    const auto chunk = indices.subspan(start, std::min(kChunk, indices.size() - start));
    ad::Tape<float> tape;
    auto pred = net.control_head(tape, net.features(tape, tape.constant(pack(data, chunk)), false), false);
    const auto p = pred.value();
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      const double y = data.samples[chunk[b]].label;
      se += (p[b] - y) * (p[b] - y);
      norm += y * y;
    }
  }
  FitError e;
  if (!indices.empty()) e.mse = se / static_cast<double>(indices.size());
  e.relative_l2 = norm > 0.0 ? std::sqrt(se / norm) : std::sqrt(se);
  return e;
}

PretrainResult pretrain(const OperatorSamples& data, const PretrainConfig& cfg, std::uint64_t seed) {
  if (data.samples.empty()) throw Error("pretrain: dataset is empty");
  if (data.nx != kGrid) throw ShapeError("pretrain: dataset nx=" + std::to_string(data.nx) + " unsupported");
  if (cfg.epochs < 1 || cfg.batch < 1 || !(cfg.lr > 0.0) || cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
    throw ConfigError("pretrain: invalid configuration");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(order.size())));
  if (cfg.val_fraction > 0.0 && order.size() >= 2) n_val = std::max<std::size_t>(n_val, 1);
  n_val = std::min(n_val, order.size() - 1);
  std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::vector<std::size_t> train(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  const auto& monitor = val.empty() ? train : val;

  PretrainResult result{DeepONet<float>(rng()), {}, 0, 0.0, 0.0, train.size(), val.size()};
  DeepONet<float> net = result.weights;
  ad::Adam<float> opt(net.params(), ad::AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  const auto batch = static_cast<std::size_t>(cfg.batch);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::span<const std::size_t> idx(train.data() + start, std::min(batch, train.size() - start));
      ad::Tape<float> tape;
      auto pred = net.control_head(tape, net.features(tape, tape.constant(pack(data, idx))));
      auto loss = ad::mean(ad::square(ad::sub(pred, tape.constant(labels(data, idx)))));
      opt.zero_grad();
      tape.backward(loss);
      opt.step();
      if (!std::isfinite(loss.item())) throw Error("pretrain: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += static_cast<double>(loss.item()) * static_cast<double>(idx.size());
    }
    const double val_mse = evaluate_fit(net, data, monitor).mse;
    result.curve.push_back({epoch, loss_sum / static_cast<double>(train.size()), val_mse});
    if (val_mse < best) {
      best = val_mse;
      since_best = 0;
      result.weights = net;
      result.best_epoch = epoch;
    } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
      break;
    }
  }
  result.best_val_mse = best;
  result.val_relative_l2 = evaluate_fit(result.weights, data, monitor).relative_l2;
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& curve) {
  CsvWriter csv(path, {"epoch", "train_mse", "val_mse"});
  for (const auto& e : curve) csv.row(e.epoch, e.train_mse, e.val_mse);
}

} // namespace nosac
