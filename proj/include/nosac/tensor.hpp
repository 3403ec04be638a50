#pragma once

// Minimal tape-based reverse-mode differentiation over dense row-major
// tensors. The layer set is exactly what the operator network and the
// actor/critic heads need; GEMM-shaped work is delegated to Eigen.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "nosac/errors.hpp"

namespace nosac::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != numel(shape)) {
      throw ShapeError("Tensor: " + std::to_string(data.size()) + " values for shape " + shape_str(shape));
    }
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  T& operator[](std::size_t i) { return data[i]; }
  T operator[](std::size_t i) const { return data[i]; }
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Shape shape) : name(std::move(n)), value(shape), grad(shape) {}

  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), T(0)); }
};

template <typename T>
using ParamRefs = std::vector<Parameter<T>*>;

/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every entry.
template <typename T>
void init_fan_in(Parameter<T>& p, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& x : p.value.data) x = static_cast<T>(dist(rng));
}

template <typename T>
class Tape;

/// Handle to a node on a tape.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Shape& shape() const { return tape->shape(id); }
  std::span<const T> value() const { return tape->value(id); }
  std::span<const T> grad() const { return tape->grad(id); }
  std::size_t size() const { return numel(shape()); }
  T item() const { return value()[0]; }
};

template <typename T>
class Tape {
public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var<T> constant(Tensor<T> t) {
    Node n;
    n.shape = std::move(t.shape);
    n.value = std::move(t.data);
    return push(std::move(n));
  }

  Var<T> constant(Shape shape, std::span<const T> values) {
    Node n;
    n.shape = std::move(shape);
    n.value.assign(values.begin(), values.end());
    if (n.value.size() != numel(n.shape)) throw ShapeError("Tape::constant: size mismatch");
    return push(std::move(n));
  }

  /// Leaf referencing a parameter. Gradients reach p.grad only when `track`
  /// is set and the parameter is trainable.
  Var<T> parameter(Parameter<T>& p, bool track = true) {
    Node n;
    n.shape = p.value.shape;
    n.param = &p;
    n.needs_grad = track && p.trainable;
    return push(std::move(n));
  }

  /// Result node for an operation; `backward` runs with this node's grad set.
  Var<T> op(Shape shape, std::vector<T> value, bool needs_grad, BackwardFn backward) {
    Node n;
    n.shape = std::move(shape);
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.backward = std::move(backward);
    return push(std::move(n));
  }

  const Shape& shape(std::size_t id) const { return nodes_[id].shape; }

  std::span<const T> value(std::size_t id) const {
    const Node& n = nodes_[id];
    if (n.param) return n.param->value.data;
    return n.value;
  }

  std::span<const T> grad(std::size_t id) const { return nodes_[id].grad; }

  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }

  /// Gradient slot of a node, zero-initialised on first access.
  std::vector<T>& grad_slot(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(numel(n.shape), T(0));
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  /// Reverse sweep from a scalar. Parameter gradients accumulate across calls.
  void backward(Var<T> loss) {
    if (numel(shape(loss.id)) != 1) {
      throw ShapeError("backward: loss must be scalar, got " + shape_str(shape(loss.id)));
    }
    for (auto& n : nodes_) n.grad.clear();
    if (!nodes_[loss.id].needs_grad) return;
    grad_slot(loss.id)[0] = T(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty()) continue;
      if (n.param) {
        auto& g = n.param->grad.data;
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.grad[k];
      } else if (n.backward) {
        n.backward(*this, i);
      }
    }
  }

  void clear() { nodes_.clear(); }

private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    Parameter<T>* param = nullptr;
    std::vector<T> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var<T> push(Node n) {
    nodes_.push_back(std::move(n));
    return Var<T>{this, nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
};

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
CMapMat<T> cmat(std::span<const T> s, std::size_t rows, std::size_t cols) {
  return CMapMat<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
MapMat<T> mat(std::vector<T>& s, std::size_t rows, std::size_t cols) {
  return MapMat<T>(s.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] inline void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

inline void require_rank(const char* op, const Shape& s, std::size_t rank) {
  if (s.size() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " + shape_str(s));
  }
}

template <typename T>
struct OpBuilder {
  Tape<T>& tape;
  std::vector<std::size_t> inputs;

  bool needs_grad() const {
    for (auto id : inputs) {
      if (tape.needs_grad(id)) return true;
    }
    return false;
  }

  /// `back(tape, out_id)` propagates grad(out_id) into the inputs.
  template <typename B>
  Var<T> emit(Shape shape, std::vector<T> value, B back) {
    return tape.op(std::move(shape), std::move(value), needs_grad(), std::move(back));
  }
};

template <typename T, typename F, typename D>
Var<T> map_unary(Var<T> a, F f, D dfdx) {
  Tape<T>& tape = *a.tape;
  const auto x = a.value();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ia = a.id;
  OpBuilder<T> b{tape, {ia}};
  return b.emit(a.shape(), std::move(y), [ia, dfdx](Tape<T>& t, std::size_t out) {
    if (!t.needs_grad(ia)) return;
    const auto g = t.grad(out);
    const auto x = t.value(ia);
    const auto y = t.value(out);
    auto& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfdx(x[i], y[i]);
  });
}

} // namespace detail

template <typename T>
Var<T> detach(Var<T> a) {
  return a.tape->constant(a.shape(), a.value());
}

/// [m,k] x [k,n] -> [m,n]
template <typename T>
Var<T> matmul(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) detail::shape_fail("matmul", sa, sb);
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  std::vector<T> y(m * n);
  detail::mat(y, m, n).noalias() = detail::cmat(a.value(), m, k) * detail::cmat(b.value(), k, n);
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit({m, n}, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = detail::cmat(t.grad(out), m, n);
    if (t.needs_grad(ia)) {
      detail::mat(t.grad_slot(ia), m, k).noalias() += g * detail::cmat(t.value(ib), k, n).transpose();
    }
    if (t.needs_grad(ib)) {
      detail::mat(t.grad_slot(ib), k, n).noalias() += detail::cmat(t.value(ia), m, k).transpose() * g;
    }
  });
}

/// [m,k] x [n,k]^T -> [m,n]
template <typename T>
Var<T> matmul_nt(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[1]) detail::shape_fail("matmul_nt", sa, sb);
  const std::size_t m = sa[0], k = sa[1], n = sb[0];
  std::vector<T> y(m * n);
  detail::mat(y, m, n).noalias() = detail::cmat(a.value(), m, k) * detail::cmat(b.value(), n, k).transpose();
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit({m, n}, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = detail::cmat(t.grad(out), m, n);
    if (t.needs_grad(ia)) {
      detail::mat(t.grad_slot(ia), m, k).noalias() += g * detail::cmat(t.value(ib), n, k);
    }
    if (t.needs_grad(ib)) {
      detail::mat(t.grad_slot(ib), n, k).noalias() += g.transpose() * detail::cmat(t.value(ia), m, k);
    }
  });
}

/// Elementwise sum of equal shapes, or a [.., n] tensor plus a [n] row
/// vector broadcast over leading dimensions.
template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const std::size_t na = numel(sa), nb = numel(sb);
  const bool same = sa == sb;
  const bool bias = !same && sb.size() == 1 && !sa.empty() && sa.back() == sb[0];
  if (!same && !bias) detail::shape_fail("add", sa, sb);
  const auto x = a.value();
  const auto z = b.value();
  std::vector<T> y(na);
  for (std::size_t i = 0; i < na; ++i) y[i] = x[i] + z[same ? i : i % nb];
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit(sa, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad_slot(ia);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < na; ++i) gb[same ? i : i % nb] += g[i];
    }
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  if (sa != b.shape()) detail::shape_fail("sub", sa, b.shape());
  const auto x = a.value();
  const auto z = b.value();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - z[i];
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit(sa, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  if (sa != b.shape()) detail::shape_fail("mul", sa, b.shape());
  const auto x = a.value();
  const auto z = b.value();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * z[i];
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit(sa, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    const auto xa = t.value(ia);
    const auto xb = t.value(ib);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad_slot(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * xb[i];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad_slot(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xa[i];
    }
  });
}

/// Elementwise minimum; ties send the gradient to the first argument.
template <typename T>
Var<T> minimum(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  if (sa != b.shape()) detail::shape_fail("minimum", sa, b.shape());
  const auto x = a.value();
  const auto z = b.value();
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::min(x[i], z[i]);
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit(sa, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    const auto xa = t.value(ia);
    const auto xb = t.value(ib);
    const bool na = t.needs_grad(ia), nb = t.needs_grad(ib);
    std::vector<T>* ga = na ? &t.grad_slot(ia) : nullptr;
    std::vector<T>* gb = nb ? &t.grad_slot(ib) : nullptr;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (xa[i] <= xb[i]) {
        if (ga) (*ga)[i] += g[i];
      } else if (gb) {
        (*gb)[i] += g[i];
      }
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, T c) {
  return detail::map_unary(a, [c](T x) { return c * x; }, [c](T, T) { return c; });
}

template <typename T>
Var<T> add_scalar(Var<T> a, T c) {
  return detail::map_unary(a, [c](T x) { return x + c; }, [](T, T) { return T(1); });
}

template <typename T>
Var<T> relu(Var<T> a) {
  return detail::map_unary(
      a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> tanh(Var<T> a) {
  return detail::map_unary(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Var<T> log(Var<T> a) {
  return detail::map_unary(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Var<T> exp(Var<T> a) {
  return detail::map_unary(a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Var<T> square(Var<T> a) {
  return detail::map_unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

/// log(1 + e^x), evaluated stably.
template <typename T>
Var<T> softplus(Var<T> a) {
  return detail::map_unary(
      a, [](T x) { return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); },
      [](T x, T) { return T(1) / (T(1) + std::exp(-x)); });
}

/// Clamp with zero gradient outside [lo, hi].
template <typename T>
Var<T> clamp(Var<T> a, T lo, T hi) {
  return detail::map_unary(
      a, [lo, hi](T x) { return std::clamp(x, lo, hi); },
      [lo, hi](T x, T) { return (x >= lo && x <= hi) ? T(1) : T(0); });
}

template <typename T>
Var<T> sum(Var<T> a) {
  const auto x = a.value();
  T acc = T(0);
  for (T v : x) acc += v;
  const std::size_t ia = a.id;
  detail::OpBuilder<T> bld{*a.tape, {ia}};
  return bld.emit({1}, {acc}, [ia](Tape<T>& t, std::size_t out) {
    const T g = t.grad(out)[0];
    auto& ga = t.grad_slot(ia);
    for (auto& v : ga) v += g;
  });
}

template <typename T>
Var<T> mean(Var<T> a) {
  const std::size_t n = a.size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), T(1) / static_cast<T>(n));
}

/// Same data under a new shape with equal element count.
template <typename T>
Var<T> reshape(Var<T> a, Shape shape) {
  if (numel(shape) != a.size()) detail::shape_fail("reshape", a.shape(), shape);
  const auto x = a.value();
  const std::size_t ia = a.id;
  detail::OpBuilder<T> bld{*a.tape, {ia}};
  return bld.emit(std::move(shape), std::vector<T>(x.begin(), x.end()), [ia](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    auto& ga = t.grad_slot(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

/// Column concatenation of [m,p] and [m,q] -> [m,p+q].
template <typename T>
Var<T> concat(Var<T> a, Var<T> b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[0] != sb[0]) detail::shape_fail("concat", sa, sb);
  const std::size_t m = sa[0], p = sa[1], q = sb[1], w = p + q;
  const auto x = a.value();
  const auto z = b.value();
  std::vector<T> y(m * w);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(x.begin() + r * p, p, y.begin() + r * w);
    std::copy_n(z.begin() + r * q, q, y.begin() + r * w + p);
  }
  const std::size_t ia = a.id, ib = b.id;
  detail::OpBuilder<T> bld{*a.tape, {ia, ib}};
  return bld.emit({m, w}, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    if (t.needs_grad(ia)) {
      auto& ga = t.grad_slot(ia);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < p; ++c) ga[r * p + c] += g[r * w + c];
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad_slot(ib);
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < q; ++c) gb[r * q + c] += g[r * w + p + c];
    }
  });
}

/// Columns [begin, end) of an [m,n] tensor.
template <typename T>
Var<T> slice(Var<T> a, std::size_t begin, std::size_t end) {
  const Shape& sa = a.shape();
  if (sa.size() != 2 || begin >= end || end > sa[1]) {
    throw ShapeError("slice: columns [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                     shape_str(sa));
  }
  const std::size_t m = sa[0], n = sa[1], w = end - begin;
  const auto x = a.value();
  std::vector<T> y(m * w);
  for (std::size_t r = 0; r < m; ++r) std::copy_n(x.begin() + r * n + begin, w, y.begin() + r * w);
  const std::size_t ia = a.id;
  detail::OpBuilder<T> bld{*a.tape, {ia}};
  return bld.emit({m, w}, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = t.grad(out);
    auto& ga = t.grad_slot(ia);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < w; ++c) ga[r * n + begin + c] += g[r * w + c];
  });
}

inline std::size_t conv_out_size(std::size_t n, std::size_t k, std::size_t stride) {
  return n < k ? 0 : (n - k) / stride + 1;
}

/// Valid (unpadded) strided 2-D convolution in NHWC layout.
///   x: [B,H,W,C]   w: [O,k,k,C]   b: [O]   ->   [B,OH,OW,O]
template <typename T>
Var<T> conv2d(Var<T> x, Var<T> w, Var<T> b, std::size_t stride) {
  const Shape& sx = x.shape();
  const Shape& sw = w.shape();
  detail::require_rank("conv2d(input)", sx, 4);
  detail::require_rank("conv2d(weight)", sw, 4);
  if (sw[1] != sw[2] || sw[3] != sx[3] || b.shape() != Shape{sw[0]} || stride == 0) {
    detail::shape_fail("conv2d", sx, sw);
  }
  const std::size_t batch = sx[0], h = sx[1], wd = sx[2], c = sx[3];
  const std::size_t o = sw[0], k = sw[1];
  const std::size_t oh = conv_out_size(h, k, stride), ow = conv_out_size(wd, k, stride);
  if (oh == 0 || ow == 0) detail::shape_fail("conv2d", sx, sw);
  const std::size_t patch = k * k * c;
  const std::size_t rows = batch * oh * ow;

  auto col = std::make_shared<std::vector<T>>(rows * patch);
  const auto xv = x.value();
  for (std::size_t n = 0; n < batch; ++n) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        T* dst = col->data() + ((n * oh + i) * ow + j) * patch;
        for (std::size_t ki = 0; ki < k; ++ki) {
          const T* src = xv.data() + ((n * h + i * stride + ki) * wd + j * stride) * c;
          std::copy_n(src, k * c, dst + ki * k * c);
        }
      }
    }
  }
  std::vector<T> y(rows * o);
  {
    auto ym = detail::mat(y, rows, o);
    ym.noalias() = detail::cmat<T>(*col, rows, patch) * detail::cmat(w.value(), o, patch).transpose();
    const auto bv = b.value();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t q = 0; q < o; ++q) y[r * o + q] += bv[q];
  }

  const std::size_t ix = x.id, iw = w.id, ib = b.id;
  detail::OpBuilder<T> bld{*x.tape, {ix, iw, ib}};
  return bld.emit({batch, oh, ow, o}, std::move(y), [=](Tape<T>& t, std::size_t out) {
    const auto g = detail::cmat(t.grad(out), rows, o);
    if (t.needs_grad(iw)) {
      detail::mat(t.grad_slot(iw), o, patch).noalias() += g.transpose() * detail::cmat<T>(*col, rows, patch);
    }
    if (t.needs_grad(ib)) {
      auto& gb = t.grad_slot(ib);
      const auto gs = t.grad(out);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t q = 0; q < o; ++q) gb[q] += gs[r * o + q];
    }
    if (t.needs_grad(ix)) {
      std::vector<T> dcol(rows * patch);
      detail::mat(dcol, rows, patch).noalias() = g * detail::cmat(t.value(iw), o, patch);
      auto& gx = t.grad_slot(ix);
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t i = 0; i < oh; ++i) {
          for (std::size_t j = 0; j < ow; ++j) {
            const T* src = dcol.data() + ((n * oh + i) * ow + j) * patch;
            for (std::size_t ki = 0; ki < k; ++ki) {
              T* dst = gx.data() + ((n * h + i * stride + ki) * wd + j * stride) * c;
              const T* s = src + ki * k * c;
              for (std::size_t e = 0; e < k * c; ++e) dst[e] += s[e];
            }
          }
        }
      }
    }
  });
}

/// x [m,in] * W [in,out] + b [out]
template <typename T>
Var<T> dense(Var<T> x, Var<T> w, Var<T> b) {
  return add(matmul(x, w), b);
}

} // namespace nosac::ad
