#ifndef WSA_OPS_HPP
#define WSA_OPS_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "wsa/tensor.hpp"

namespace wsa {

// --- group normalization ----------------------------------------------------

// Per-sample, per-group zero-mean unit-variance normalization over
// (C/groups, H, W), followed by the per-channel affine gamma * xhat + beta.
template <class T>
TensorT<T> group_norm(const TensorT<T>& x, int groups, std::span<const T> gamma,
                      std::span<const T> beta, double eps = 1e-5);

struct GroupNormGrads {
  Tensor gx;
  std::vector<double> ggamma;
  std::vector<double> gbeta;
};

GroupNormGrads group_norm_vjp(const Tensor& x, int groups, std::span<const double> gamma,
                              std::span<const double> beta, double eps, const Tensor& gy);

// --- activations ------------------------------------------------------------

enum class Activation { kRelu, kSigmoid };

template <class T>
TensorT<T> activation(const TensorT<T>& x, Activation kind);

Tensor activation_vjp(const Tensor& x, Activation kind, const Tensor& gy);

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// --- softmax over a flat sequence -------------------------------------------

// Max-subtracted softmax; outputs are positive and sum to 1.
std::vector<double> softmax(std::span<const double> x);

// Backward given the forward output s and cotangent g.
std::vector<double> softmax_vjp(std::span<const double> s, std::span<const double> g);

// --- average pooling ---------------------------------------------------------

// Window mean over the zero-padded input; the divisor is the full window
// size kh*kw regardless of padding overlap.
template <class T>
TensorT<T> avg_pool2d(const TensorT<T>& x, int kh, int kw, int sh, int sw, int ph, int pw);

Shape4 pool_out_shape(const Shape4& in, int kh, int kw, int sh, int sw, int ph, int pw);

Tensor avg_pool2d_vjp(const Shape4& in_shape, int kh, int kw, int sh, int sw, int ph,
                      int pw, const Tensor& gy);

// --- top-k selection ----------------------------------------------------------

// Indices of the k largest scores; ties broken toward the smaller index.
// The result is sorted ascending by index.
std::vector<int> top_k(std::span<const double> scores, int k);

// --- scaled dot-product attention --------------------------------------------

// Row-major matrices: q is (mq x d), k and v are (mk x d). Returns
// softmax(q k^T / sqrt(d)) v, shape (mq x d).
template <class T>
std::vector<T> scaled_dot_attention(std::span<const T> q, std::span<const T> k,
                                    std::span<const T> v, int mq, int mk, int d);

struct AttentionGrads {
  std::vector<double> gq;
  std::vector<double> gk;
  std::vector<double> gv;
};

AttentionGrads scaled_dot_attention_vjp(std::span<const double> q, std::span<const double> k,
                                        std::span<const double> v, int mq, int mk, int d,
                                        std::span<const double> go);

// MACs for one attention call: the q k^T product plus the weights-times-values
// product, 2 * mq * mk * d total.
inline std::int64_t attention_macs(std::int64_t mq, std::int64_t mk, std::int64_t d) {
  return 2 * mq * mk * d;
}

// --- nearest-neighbour upsampling ---------------------------------------------

template <class T>
TensorT<T> upsample_nearest2x(const TensorT<T>& x);

Tensor upsample_nearest2x_vjp(const Tensor& gy);

}  // namespace wsa

#endif  // WSA_OPS_HPP
