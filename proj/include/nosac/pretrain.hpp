#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "nosac/dataset.hpp"
#include "nosac/deeponet.hpp"

namespace nosac {

struct PretrainConfig {
  int epochs = 200;
  int batch = 64;
  double lr = 1e-3;
  double val_fraction = 0.1;
  int patience = 20; // epochs without validation improvement; 0 disables
};

struct EpochLoss {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct PretrainResult {
  DeepONet<float> weights;
  std::vector<EpochLoss> curve;
  int best_epoch = 0;
  double best_val_mse = 0.0;
  /// ||pred - label|| / ||label|| on the validation split at the best epoch.
  double val_relative_l2 = 0.0;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

/// Supervised regression of control_head(features(.)) on the labels with
/// Adam and early stopping; returns the best-validation weights.
PretrainResult pretrain(const OperatorSamples& data, const PretrainConfig& cfg, std::uint64_t seed);

/// Mean squared error and relative L2 error of a network on a sample subset.
struct FitError {
  double mse = 0.0;
  double relative_l2 = 0.0;
};
FitError evaluate_fit(DeepONet<float>& net, const OperatorSamples& data, std::span<const std::size_t> indices);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& curve);

} // namespace nosac
