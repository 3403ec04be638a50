#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nosac/tensor.hpp"

namespace nosac {

/// One named float32 tensor of a weights file.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

/// "NOW1" container: magic, u32 version, u32 count, then per tensor
/// u16 name length, UTF-8 name, u8 rank, u32 dims, float32 data (all LE).
struct NetworkWeights {
  static constexpr std::uint32_t kVersion = 1;
  std::vector<NamedTensor> tensors;

  const NamedTensor& at(const std::string& name) const;
  const NamedTensor* find(const std::string& name) const;
};

std::vector<std::uint8_t> encode_weights(const NetworkWeights& w);
NetworkWeights decode_weights(const std::vector<std::uint8_t>& bytes);

void save_weights(const std::filesystem::path& path, const NetworkWeights& w);
NetworkWeights load_weights(const std::filesystem::path& path);

template <typename T>
NetworkWeights export_params(const ad::ParamRefs<T>& params, const std::string& prefix = "") {
  NetworkWeights w;
  for (const auto* p : params) {
    NamedTensor t;
    t.name = prefix + p->name;
    for (auto d : p->value.shape) t.dims.push_back(static_cast<std::uint32_t>(d));
    t.data.assign(p->value.data.begin(), p->value.data.end());
    w.tensors.push_back(std::move(t));
  }
  return w;
}

/// Copies tensors named prefix + p->name into params; shapes must match.
template <typename T>
void import_params(const NetworkWeights& w, const ad::ParamRefs<T>& params, const std::string& prefix = "") {
  for (auto* p : params) {
    const auto& t = w.at(prefix + p->name);
    ad::Shape shape(t.dims.begin(), t.dims.end());
    if (shape != p->value.shape) {
      throw ShapeError("weights: tensor '" + t.name + "' has shape " + ad::shape_str(shape) + ", expected " +
                       ad::shape_str(p->value.shape));
    }
    for (std::size_t i = 0; i < t.data.size(); ++i) p->value.data[i] = static_cast<T>(t.data[i]);
  }
}

} // namespace nosac
