#include "wsa/conv.hpp"

#include <string>

namespace wsa {

template <class T>
void ConvSpecT<T>::validate() const {
  if (in_channels <= 0 || out_channels <= 0) {
    throw ValidationError("conv: channel counts must be positive");
  }
  if (groups <= 0 || in_channels % groups != 0 || out_channels % groups != 0) {
    throw ValidationError("conv: in/out channels must be divisible by groups (" +
                          std::to_string(in_channels) + "/" + std::to_string(out_channels) +
                          " vs groups " + std::to_string(groups) + ")");
  }
  if (kh < 1 || kw < 1 || sh < 1 || sw < 1 || ph < 0 || pw < 0) {
    throw ValidationError("conv: kernel/stride must be >= 1 and padding >= 0");
  }
  if (!(weights.shape == weight_shape())) {
    throw ValidationError("conv: weight tensor shape " + weights.shape.str() +
                          " does not match spec " + weight_shape().str());
  }
  if (bias && static_cast<int>(bias->size()) != out_channels) {
    throw ValidationError("conv: bias length does not match out_channels");
  }
}

template <class T>
ConvSpecT<T> make_conv_spec(int in_ch, int out_ch, int kh, int kw, int sh, int sw,
                            int ph, int pw, int groups, bool with_bias) {
  ConvSpecT<T> spec;
  spec.in_channels = in_ch;
  spec.out_channels = out_ch;
  spec.kh = kh;
  spec.kw = kw;
  spec.sh = sh;
  spec.sw = sw;
  spec.ph = ph;
  spec.pw = pw;
  spec.groups = groups;
  spec.weights = TensorT<T>(spec.weight_shape());
  if (with_bias) spec.bias = std::vector<T>(static_cast<std::size_t>(out_ch), T(0));
  spec.validate();
  return spec;
}

template <class T>
Shape4 conv_out_shape(const Shape4& in, const ConvSpecT<T>& spec) {
  spec.validate();
  if (in.c != spec.in_channels) {
    throw ValidationError("conv: input has " + std::to_string(in.c) +
                          " channels, spec expects " + std::to_string(spec.in_channels));
  }
  const int num_h = in.h + 2 * spec.ph - spec.kh;
  const int num_w = in.w + 2 * spec.pw - spec.kw;
  if (num_h < 0 || num_w < 0 || num_h % spec.sh != 0 || num_w % spec.sw != 0) {
    throw ValidationError("conv: output extent (" + std::to_string(in.h) + "+2*" +
                          std::to_string(spec.ph) + "-" + std::to_string(spec.kh) +
                          ")/" + std::to_string(spec.sh) + " is not a positive integer");
  }
  const int ho = num_h / spec.sh + 1;
  const int wo = num_w / spec.sw + 1;
  if (ho <= 0 || wo <= 0) throw ValidationError("conv: non-positive output dims");
  return Shape4{in.n, spec.out_channels, ho, wo};
}

template <class T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvSpecT<T>& spec) {
  const Shape4 out_shape = conv_out_shape(x.shape, spec);
  TensorT<T> y(out_shape);

  const int N = x.shape.n, C = x.shape.c, H = x.shape.h, W = x.shape.w;
  const int OC = out_shape.c, HO = out_shape.h, WO = out_shape.w;
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;
  const T* xd = x.data.data();
  const T* wd = spec.weights.data.data();
  T* yd = y.data.data();

  // Each (n, oc) plane is written by exactly one thread; inner accumulation
  // order is fixed, so results are identical at any thread count.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int oc = 0; oc < OC; ++oc) {
      const int g = oc / ocg;
      const T b = spec.bias ? (*spec.bias)[oc] : T(0);
      for (int oh = 0; oh < HO; ++oh) {
        for (int ow = 0; ow < WO; ++ow) {
          T acc = b;
          for (int ic = 0; ic < icg; ++ic) {
            const int c = g * icg + ic;
            const T* xc = xd + ((static_cast<std::int64_t>(n) * C + c) * H) * W;
            const T* wk = wd + ((static_cast<std::int64_t>(oc) * icg + ic) * spec.kh) * spec.kw;
            for (int kh = 0; kh < spec.kh; ++kh) {
              const int ih = oh * spec.sh - spec.ph + kh;
              if (ih < 0 || ih >= H) continue;
              for (int kw = 0; kw < spec.kw; ++kw) {
                const int iw = ow * spec.sw - spec.pw + kw;
                if (iw < 0 || iw >= W) continue;
                acc += wk[kh * spec.kw + kw] * xc[ih * W + iw];
              }
            }
          }
          yd[((static_cast<std::int64_t>(n) * OC + oc) * HO + oh) * WO + ow] = acc;
        }
      }
    }
  }
  return y;
}

ConvGrads conv2d_vjp(const Tensor& x, const ConvSpec& spec, const Tensor& gy) {
  const Shape4 out_shape = conv_out_shape(x.shape, spec);
  if (!(gy.shape == out_shape)) {
    throw ValidationError("conv2d_vjp: cotangent shape " + gy.shape.str() +
                          " does not match output " + out_shape.str());
  }

  const int N = x.shape.n, C = x.shape.c, H = x.shape.h, W = x.shape.w;
  const int OC = out_shape.c, HO = out_shape.h, WO = out_shape.w;
  const int icg = spec.in_channels / spec.groups;
  const int ocg = spec.out_channels / spec.groups;

  ConvGrads grads;
  grads.gx = Tensor(x.shape);
  grads.gw = Tensor(spec.weight_shape());
  if (spec.bias) grads.gb.assign(static_cast<std::size_t>(OC), 0.0);

  const double* xd = x.data.data();
  const double* gd = gy.data.data();
  const double* wd = spec.weights.data.data();

  // Input gradient, gather form: every (n, c, ih, iw) sums the output
  // cotangents it contributed to. No concurrent writes.
  double* gxd = grads.gx.data.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const int g = c / icg;
      const int ic = c % icg;
      for (int ih = 0; ih < H; ++ih) {
        for (int iw = 0; iw < W; ++iw) {
          double acc = 0.0;
          for (int kh = 0; kh < spec.kh; ++kh) {
            const int num_h = ih + spec.ph - kh;
            if (num_h < 0 || num_h % spec.sh != 0) continue;
            const int oh = num_h / spec.sh;
            if (oh >= HO) continue;
            for (int kw = 0; kw < spec.kw; ++kw) {
              const int num_w = iw + spec.pw - kw;
              if (num_w < 0 || num_w % spec.sw != 0) continue;
              const int ow = num_w / spec.sw;
              if (ow >= WO) continue;
              for (int oc = g * ocg; oc < (g + 1) * ocg; ++oc) {
                acc += wd[((static_cast<std::int64_t>(oc) * icg + ic) * spec.kh + kh) * spec.kw + kw] *
                       gd[((static_cast<std::int64_t>(n) * OC + oc) * HO + oh) * WO + ow];
              }
            }
          }
          gxd[((static_cast<std::int64_t>(n) * C + c) * H + ih) * W + iw] = acc;
        }
      }
    }
  }

  // Weight gradient: one thread owns one (oc, ic) kernel slice.
  double* gwd = grads.gw.data.data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int oc = 0; oc < OC; ++oc) {
    for (int ic = 0; ic < icg; ++ic) {
      const int g = oc / ocg;
      const int c = g * icg + ic;
      for (int kh = 0; kh < spec.kh; ++kh) {
        for (int kw = 0; kw < spec.kw; ++kw) {
          double acc = 0.0;
          for (int n = 0; n < N; ++n) {
            for (int oh = 0; oh < HO; ++oh) {
              const int ih = oh * spec.sh - spec.ph + kh;
              if (ih < 0 || ih >= H) continue;
              for (int ow = 0; ow < WO; ++ow) {
                const int iw = ow * spec.sw - spec.pw + kw;
                if (iw < 0 || iw >= W) continue;
                acc += gd[((static_cast<std::int64_t>(n) * OC + oc) * HO + oh) * WO + ow] *
                       xd[((static_cast<std::int64_t>(n) * C + c) * H + ih) * W + iw];
              }
            }
          }
          gwd[((static_cast<std::int64_t>(oc) * icg + ic) * spec.kh + kh) * spec.kw + kw] = acc;
        }
      }
    }
  }

  if (spec.bias) {
#pragma omp parallel for schedule(static)
    for (int oc = 0; oc < OC; ++oc) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) {
        for (int oh = 0; oh < HO; ++oh) {
          for (int ow = 0; ow < WO; ++ow) {
            acc += gd[((static_cast<std::int64_t>(n) * OC + oc) * HO + oh) * WO + ow];
          }
        }
      }
      grads.gb[oc] = acc;
    }
  }
  return grads;
}

template <class T>
std::int64_t conv_macs(const ConvSpecT<T>& spec, const Shape4& in) {
  const Shape4 out = conv_out_shape(in, spec);
  return static_cast<std::int64_t>(spec.out_channels) * (spec.in_channels / spec.groups) *
         spec.kh * spec.kw * out.h * out.w;
}

template struct ConvSpecT<float>;
template struct ConvSpecT<double>;
template ConvSpecT<float> make_conv_spec<float>(int, int, int, int, int, int, int, int, int, bool);
template ConvSpecT<double> make_conv_spec<double>(int, int, int, int, int, int, int, int, int, bool);
template Shape4 conv_out_shape<float>(const Shape4&, const ConvSpecF&);
template Shape4 conv_out_shape<double>(const Shape4&, const ConvSpec&);
template TensorF conv2d<float>(const TensorF&, const ConvSpecF&);
template Tensor conv2d<double>(const Tensor&, const ConvSpec&);
template std::int64_t conv_macs<float>(const ConvSpecF&, const Shape4&);
template std::int64_t conv_macs<double>(const ConvSpec&, const Shape4&);

}  // namespace wsa
