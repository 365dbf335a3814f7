#ifndef WSA_LWGA_HPP
#define WSA_LWGA_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "wsa/gradcheck.hpp"
#include "wsa/tensor.hpp"

namespace wsa {

// Light-weight grouped attention over four channel quarters, fused by
// softmax-normalized learned weights and a pointwise mixing convolution.
struct LwgaConfig {
  int channels = 0;     // C, divisible by 4
  int sma_samples = 0;  // M keys on a strided grid
  int sga_k = 0;        // K top-norm keys

  static LwgaConfig make_default(int channels, int h, int w);
  void validate(int h, int w) const;
};

// Branch parameter layouts (d = C/4):
//   gpa: [0] gate conv (d, d, 1, 1)      [1] bias (1, d, 1, 1)
//   rla: [0] depthwise 3x3 (d, 1, 3, 3)  [1] bias (1, d, 1, 1)
//        [2] pointwise (d, d, 1, 1)      [3] bias (1, d, 1, 1)
// sma and sga are parameter-free.
std::vector<Shape4> gpa_param_shapes(int d);
std::vector<Shape4> rla_param_shapes(int d);

// Full block layout:
//   [0] raw fusion alphas (1, 4, 1, 1)
//   [1..2] gpa params, [3..6] rla params
//   [7] mixing conv (C, C, 1, 1)  [8] bias (1, C, 1, 1)
std::vector<Shape4> lwga_param_shapes(int channels);

// Gate point attention: sigmoid(pointwise(x)) * x.
Tensor gpa(const Tensor& xg, std::span<const Tensor> params);
BlockGrads gpa_vjp(const Tensor& xg, std::span<const Tensor> params, const Tensor& gy);

// Regular local attention: x + pointwise(relu(depthwise3x3(x))).
Tensor rla(const Tensor& xg, std::span<const Tensor> params);
BlockGrads rla_vjp(const Tensor& xg, std::span<const Tensor> params, const Tensor& gy);

// Sparse medium-range attention: all tokens query M keys sampled on a
// uniform strided grid (row-major, stride floor(H*W/M)); residual added.
Tensor sma(const Tensor& xg, int samples);
Tensor sma_vjp(const Tensor& xg, int samples, const Tensor& gy);

// Sparse global attention: keys are the top-K tokens by feature L2 norm;
// residual added. Selection indices are treated as constants by the VJP.
Tensor sga(const Tensor& xg, int k);
Tensor sga_vjp(const Tensor& xg, int k, const Tensor& gy);

// Key indices used by sma at a given token count.
std::vector<int> sma_sample_indices(int n_tokens, int samples);

Tensor lwga_apply(const Tensor& x, const LwgaConfig& cfg, std::span<const Tensor> params);
BlockGrads lwga_apply_vjp(const Tensor& x, const LwgaConfig& cfg, std::span<const Tensor> params,
                          const Tensor& gy);

// Attention MACs: 2*N*M*d for sma plus 2*N*K*d for sga, per sample.
std::int64_t lwga_attention_macs(const Shape4& in, const LwgaConfig& cfg);

// Parameter count of a dense-attention block of the same width (q/k/v/out
// projections), used by cost reports as a size comparison point.
std::int64_t dense_attention_param_count(int channels);

}  // namespace wsa

#endif  // WSA_LWGA_HPP
