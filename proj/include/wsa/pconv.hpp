#ifndef WSA_PCONV_HPP
#define WSA_PCONV_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "wsa/conv.hpp"
#include "wsa/gradcheck.hpp"
#include "wsa/tensor.hpp"

namespace wsa {

// Partial convolution: a 3x3 same-shape convolution over the leading c of C
// channels; the remaining C - c channels pass through untouched.
struct PConvSpec {
  int total_channels = 0;
  int touched_channels = 0;
  ConvSpec inner;  // c -> c, 3x3, stride 1, pad 1

  // c defaults to C/4 (partial ratio 1/4).
  static PConvSpec make(int total, int touched);
  static PConvSpec make_default(int total) { return make(total, default_touched(total)); }
  static int default_touched(int total);
  void validate() const;
};

Tensor pconv(const Tensor& x, const PConvSpec& spec);

struct PConvGrads {
  Tensor gx;
  Tensor gw;
  std::vector<double> gb;
};

PConvGrads pconv_vjp(const Tensor& x, const PConvSpec& spec, const Tensor& gy);

std::int64_t pconv_macs(const PConvSpec& spec, const Shape4& in);

// Builds a ConvSpec view over flat parameter tensors. The weight tensor shape
// (out, in/groups, kh, kw) fixes the kernel; bias may be null.
ConvSpec conv_spec_from(const Tensor& weights, const Tensor* bias, int sh, int sw, int ph,
                        int pw, int groups);

// FasterNet block: y = x + PW2(relu(GN(PW1(pconv(x))))), with PW1 expanding
// channels x2 and PW2 projecting back. Parameter order (width C, c = C/4):
//   [0] pconv weights (c, c, 3, 3)    [1] pconv bias (1, c, 1, 1)
//   [2] PW1 weights (2C, C, 1, 1)     [3] PW1 bias (1, 2C, 1, 1)
//   [4] GN gamma (1, 2C, 1, 1)        [5] GN beta (1, 2C, 1, 1)
//   [6] PW2 weights (C, 2C, 1, 1)     [7] PW2 bias (1, C, 1, 1)
std::vector<Shape4> faster_block_param_shapes(int width);

Tensor faster_block(const Tensor& x, std::span<const Tensor> params);

BlockGrads faster_block_vjp(const Tensor& x, std::span<const Tensor> params, const Tensor& gy);

}  // namespace wsa

#endif  // WSA_PCONV_HPP
