#ifndef WSA_CONV_HPP
#define WSA_CONV_HPP

#include <cstdint>
#include <optional>

#include "wsa/tensor.hpp"

namespace wsa {

// Grouped 2-D cross-correlation over zero-padded input. Weights are laid out
// (out_channels, in_channels/groups, kh, kw); bias, when present, has one
// entry per output channel.
template <class T>
struct ConvSpecT {
  int in_channels = 0;
  int out_channels = 0;
  int kh = 1, kw = 1;
  int sh = 1, sw = 1;
  int ph = 0, pw = 0;
  int groups = 1;
  TensorT<T> weights;
  std::optional<std::vector<T>> bias;

  void validate() const;
  Shape4 weight_shape() const {
    return Shape4{out_channels, in_channels / groups, kh, kw};
  }
  std::int64_t param_count() const {
    return weight_shape().numel() + (bias ? static_cast<std::int64_t>(bias->size()) : 0);
  }
};

using ConvSpec = ConvSpecT<double>;
using ConvSpecF = ConvSpecT<float>;

// Builds a spec with zero weights (and zero bias unless with_bias is false).
template <class T>
ConvSpecT<T> make_conv_spec(int in_ch, int out_ch, int kh, int kw, int sh, int sw,
                            int ph, int pw, int groups, bool with_bias = true);

inline ConvSpec make_pointwise(int in_ch, int out_ch, bool with_bias = true) {
  return make_conv_spec<double>(in_ch, out_ch, 1, 1, 1, 1, 0, 0, 1, with_bias);
}
inline ConvSpec make_depthwise3x3(int channels, bool with_bias = true) {
  return make_conv_spec<double>(channels, channels, 3, 3, 1, 1, 1, 1, channels, with_bias);
}

// Output spatial extent; throws unless (H + 2p - k) is divisible by the
// stride and the result is positive.
template <class T>
Shape4 conv_out_shape(const Shape4& in, const ConvSpecT<T>& spec);

template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvSpecT<T>& spec);

struct ConvGrads {
  Tensor gx;
  Tensor gw;
  std::vector<double> gb;  // empty when the spec has no bias
};

ConvGrads conv2d_vjp(const Tensor& x, const ConvSpec& spec, const Tensor& gy);

// Multiply-accumulate count for one forward pass at batch size 1:
// out_ch * (in_ch/groups) * kh * kw * Hout * Wout.
template <class T>
std::int64_t conv_macs(const ConvSpecT<T>& spec, const Shape4& in);

}  // namespace wsa

#endif  // WSA_CONV_HPP
