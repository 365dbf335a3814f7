#ifndef WSA_TENSOR_HPP
#define WSA_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wsa/errors.hpp"
#include "wsa/rng.hpp"

namespace wsa {

// Dense rank-4 shape, (batch, channel, height, width).
struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape4&) const = default;

  std::string str() const {
    return std::to_string(n) + "x" + std::to_string(c) + "x" +
           std::to_string(h) + "x" + std::to_string(w);
  }
};

// Dense NCHW tensor, row-major N->C->H->W. Values are plain contiguous
// storage; all operations treat tensors as immutable inputs.
template <class T>
struct TensorT {
  Shape4 shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(Shape4 s, T fill = T(0))
      : shape(s), data(static_cast<std::size_t>(s.numel()), fill) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0) {
      throw ValidationError("tensor shape has a negative extent: " + s.str());
    }
  }
  TensorT(Shape4 s, std::vector<T> values) : shape(s), data(std::move(values)) {
    if (static_cast<std::int64_t>(data.size()) != s.numel()) {
      throw ValidationError("tensor data length " + std::to_string(data.size()) +
                            " does not match shape " + s.str());
    }
  }

  std::int64_t numel() const { return shape.numel(); }

  T& at(int n, int c, int h, int w) {
    return data[((static_cast<std::int64_t>(n) * shape.c + c) * shape.h + h) * shape.w + w];
  }
  T at(int n, int c, int h, int w) const {
    return data[((static_cast<std::int64_t>(n) * shape.c + c) * shape.h + h) * shape.w + w];
  }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }
};

using Tensor = TensorT<double>;
using TensorF = TensorT<float>;

template <class T, class U>
TensorT<T> tensor_cast(const TensorT<U>& x) {
  TensorT<T> y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = static_cast<T>(x.data[i]);
  return y;
}

// Concatenate along the channel axis. All parts must agree on N, H, W.
template <class T>
TensorT<T> tensor_concat(std::span<const TensorT<T>> parts) {
  if (parts.empty()) throw ValidationError("tensor_concat: no parts");
  Shape4 base = parts[0].shape;
  int c_total = 0;
  for (const auto& p : parts) {
    if (p.shape.n != base.n || p.shape.h != base.h || p.shape.w != base.w) {
      throw ValidationError("tensor_concat: part shape " + p.shape.str() +
                            " does not match " + base.str() + " on N/H/W");
    }
    c_total += p.shape.c;
  }
  TensorT<T> out(Shape4{base.n, c_total, base.h, base.w});
  const std::int64_t hw = static_cast<std::int64_t>(base.h) * base.w;
  for (int n = 0; n < base.n; ++n) {
    std::int64_t c_off = 0;
    for (const auto& p : parts) {
      const std::int64_t block = static_cast<std::int64_t>(p.shape.c) * hw;
      const T* src = p.data.data() + static_cast<std::int64_t>(n) * block;
      T* dst = out.data.data() + (static_cast<std::int64_t>(n) * c_total + c_off) * hw;
      for (std::int64_t i = 0; i < block; ++i) dst[i] = src[i];
      c_off += p.shape.c;
    }
  }
  return out;
}

template <class T>
TensorT<T> tensor_concat(const TensorT<T>& a, const TensorT<T>& b) {
  const TensorT<T> parts[2] = {a, b};
  return tensor_concat(std::span<const TensorT<T>>(parts, 2));
}

// Split into contiguous channel ranges; sizes must sum to C.
template <class T>
std::vector<TensorT<T>> tensor_split(const TensorT<T>& x, std::span<const int> sizes) {
  int sum = 0;
  for (int s : sizes) {
    if (s <= 0) throw ValidationError("tensor_split: non-positive split size");
    sum += s;
  }
  if (sum != x.shape.c) {
    throw ValidationError("tensor_split: sizes sum to " + std::to_string(sum) +
                          " but tensor has " + std::to_string(x.shape.c) + " channels");
  }
  std::vector<TensorT<T>> out;
  out.reserve(sizes.size());
  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  int c_off = 0;
  for (int s : sizes) {
    TensorT<T> part(Shape4{x.shape.n, s, x.shape.h, x.shape.w});
    for (int n = 0; n < x.shape.n; ++n) {
      const T* src = x.data.data() + (static_cast<std::int64_t>(n) * x.shape.c + c_off) * hw;
      T* dst = part.data.data() + static_cast<std::int64_t>(n) * s * hw;
      for (std::int64_t i = 0; i < s * hw; ++i) dst[i] = src[i];
    }
    out.push_back(std::move(part));
    c_off += s;
  }
  return out;
}

template <class T>
inline void fill_uniform(TensorT<T>& x, SplitMix64& rng, double lo, double hi) {
  for (auto& v : x.data) v = static_cast<T>(rng.next_uniform(lo, hi));
}

inline Tensor random_tensor(Shape4 s, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  fill_uniform(t, rng, lo, hi);
  return t;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape == b.shape)) {
    throw ValidationError("max_abs_diff: shape mismatch " + a.shape.str() + " vs " + b.shape.str());
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  }
  return m;
}

}  // namespace wsa

#endif  // WSA_TENSOR_HPP
