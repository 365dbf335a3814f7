#ifndef WSA_CAA_HPP
#define WSA_CAA_HPP

#include <span>
#include <vector>

#include "wsa/gradcheck.hpp"
#include "wsa/tensor.hpp"

namespace wsa {

// Context anchor attention: average pooling, a pointwise conv, a 1xk then a
// kx1 depth-wise strip pair, a second pointwise conv and a sigmoid produce a
// recalibration map in (0,1) that multiplies the input. Every stage keeps
// H x W.
struct CaaConfig {
  int channels = 0;
  int pool_k = 7;    // stride 1, pad (pool_k-1)/2
  int strip_k = 11;  // odd

  void validate() const;
};

// params:
//   [0] pw1 (C, C, 1, 1)       [1] bias (1, C, 1, 1)
//   [2] strip 1xk (C, 1, 1, k) [3] bias (1, C, 1, 1)
//   [4] strip kx1 (C, 1, k, 1) [5] bias (1, C, 1, 1)
//   [6] pw2 (C, C, 1, 1)       [7] bias (1, C, 1, 1)
std::vector<Shape4> caa_param_shapes(const CaaConfig& cfg);

Tensor caa_apply(const Tensor& x, const CaaConfig& cfg, std::span<const Tensor> params);

// The recalibration map alone (forward stages without the final product).
Tensor caa_attention_map(const Tensor& x, const CaaConfig& cfg, std::span<const Tensor> params);

BlockGrads caa_apply_vjp(const Tensor& x, const CaaConfig& cfg, std::span<const Tensor> params,
                         const Tensor& gy);

}  // namespace wsa

#endif  // WSA_CAA_HPP
