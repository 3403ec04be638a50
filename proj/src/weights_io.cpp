#include "nosac/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nosac/errors.hpp"

namespace nosac {

namespace {

template <typename U>
void put(std::vector<std::uint8_t>& out, U value) {
  static_assert(std::is_unsigned_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

class Reader {
public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return value;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("weights: truncated file");
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

} // namespace

const NamedTensor* NetworkWeights::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

const NamedTensor& NetworkWeights::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw LookupError("weights: no tensor named '" + name + "'");
}

std::vector<std::uint8_t> encode_weights(const NetworkWeights& w) {
  std::vector<std::uint8_t> out{'N', 'O', 'W', '1'};
  put<std::uint32_t>(out, NetworkWeights::kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(w.tensors.size()));
  for (const auto& t : w.tensors) {
    if (t.name.size() > 0xFFFF) throw FormatError("weights: tensor name too long");
    if (t.dims.size() > 0xFF) throw FormatError("weights: tensor rank too large");
    std::size_t count = 1;
    for (auto d : t.dims) count *= d;
    if (count != t.data.size()) throw FormatError("weights: tensor '" + t.name + "' data/shape mismatch");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) put<std::uint32_t>(out, d);
    for (float f : t.data) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

NetworkWeights decode_weights(const std::vector<std::uint8_t>& bytes) {
  Reader in(bytes);
  if (in.str(4) != "NOW1") throw FormatError("weights: bad magic (expected NOW1)");
  const auto version = in.get<std::uint32_t>();
  if (version != NetworkWeights::kVersion) {
    throw FormatError("weights: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>();
  NetworkWeights w;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = in.str(in.get<std::uint16_t>());
    const auto rank = in.get<std::uint8_t>();
    std::size_t n = 1;
    for (std::uint8_t r = 0; r < rank; ++r) {
      t.dims.push_back(in.get<std::uint32_t>());
      n *= t.dims.back();
    }
    t.data.resize(n);
    for (auto& f : t.data) f = std::bit_cast<float>(in.get<std::uint32_t>());
    w.tensors.push_back(std::move(t));
  }
  if (!in.done()) throw FormatError("weights: trailing bytes after last tensor");
  return w;
}

void save_weights(const std::filesystem::path& path, const NetworkWeights& w) {
  const auto bytes = encode_weights(w);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NetworkWeights load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weights file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

} // namespace nosac
