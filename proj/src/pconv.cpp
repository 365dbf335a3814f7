#include "wsa/pconv.hpp"

#include <string>

#include "wsa/ops.hpp"

namespace wsa {

namespace {
constexpr int kBlockGnGroups = 4;
}

int PConvSpec::default_touched(int total) {
  if (total < 4 || total % 4 != 0) {
    throw ValidationError("pconv: channel count " + std::to_string(total) +
                          " not divisible by 4 for the default 1/4 partial ratio");
  }
  return total / 4;
}

PConvSpec PConvSpec::make(int total, int touched) {
  PConvSpec spec;
  spec.total_channels = total;
  spec.touched_channels = touched;
  spec.inner = make_conv_spec<double>(touched, touched, 3, 3, 1, 1, 1, 1, 1, true);
  spec.validate();
  return spec;
}

void PConvSpec::validate() const {
  if (touched_channels < 1 || touched_channels > total_channels) {
    throw ValidationError("pconv: touched channels " + std::to_string(touched_channels) +
                          " out of range for " + std::to_string(total_channels));
  }
  if (inner.in_channels != touched_channels || inner.out_channels != touched_channels ||
      inner.kh != 3 || inner.kw != 3 || inner.sh != 1 || inner.ph != 1) {
    throw ValidationError("pconv: inner conv must be a same-shape 3x3 over touched channels");
  }
}

Tensor pconv(const Tensor& x, const PConvSpec& spec) {
  spec.validate();
  if (x.shape.c != spec.total_channels) {
    throw ValidationError("pconv: input has " + std::to_string(x.shape.c) +
                          " channels, spec expects " + std::to_string(spec.total_channels));
  }
  const int c = spec.touched_channels;
  if (c == spec.total_channels) return conv2d(x, spec.inner);

  const int sizes[] = {c, spec.total_channels - c};
  auto parts = tensor_split(x, std::span<const int>(sizes, 2));
  Tensor head = conv2d(parts[0], spec.inner);
  return tensor_concat(head, parts[1]);
}

PConvGrads pconv_vjp(const Tensor& x, const PConvSpec& spec, const Tensor& gy) {
  spec.validate();
  if (!(gy.shape == x.shape)) throw ValidationError("pconv_vjp: cotangent shape mismatch");
  const int c = spec.touched_channels;
  const int rest = spec.total_channels - c;

  if (rest == 0) {
    ConvGrads g = conv2d_vjp(x, spec.inner, gy);
    return PConvGrads{std::move(g.gx), std::move(g.gw), std::move(g.gb)};
  }
  const int sizes[] = {c, rest};
  auto xs = tensor_split(x, std::span<const int>(sizes, 2));
  auto gs = tensor_split(gy, std::span<const int>(sizes, 2));
  ConvGrads head = conv2d_vjp(xs[0], spec.inner, gs[0]);
  Tensor gx = tensor_concat(head.gx, gs[1]);
  return PConvGrads{std::move(gx), std::move(head.gw), std::move(head.gb)};
}

std::int64_t pconv_macs(const PConvSpec& spec, const Shape4& in) {
  Shape4 touched = in;
  touched.c = spec.touched_channels;
  return conv_macs(spec.inner, touched);
}

ConvSpec conv_spec_from(const Tensor& weights, const Tensor* bias, int sh, int sw, int ph,
                        int pw, int groups) {
  ConvSpec spec;
  spec.out_channels = weights.shape.n;
  spec.in_channels = weights.shape.c * groups;
  spec.kh = weights.shape.h;
  spec.kw = weights.shape.w;
  spec.sh = sh;
  spec.sw = sw;
  spec.ph = ph;
  spec.pw = pw;
  spec.groups = groups;
  spec.weights = weights;
  if (bias) {
    if (bias->shape.c != spec.out_channels || bias->numel() != spec.out_channels) {
      throw ValidationError("conv_spec_from: bias tensor must be (1, out_channels, 1, 1)");
    }
    spec.bias = std::vector<double>(bias->data.begin(), bias->data.end());
  }
  spec.validate();
  return spec;
}

std::vector<Shape4> faster_block_param_shapes(int width) {
  const int c = PConvSpec::default_touched(width);
  const int mid = 2 * width;
  return {
      Shape4{c, c, 3, 3},     Shape4{1, c, 1, 1},    // pconv
      Shape4{mid, width, 1, 1}, Shape4{1, mid, 1, 1},  // PW1
      Shape4{1, mid, 1, 1},   Shape4{1, mid, 1, 1},  // GN gamma/beta
      Shape4{width, mid, 1, 1}, Shape4{1, width, 1, 1},  // PW2
  };
}

namespace {

struct FasterBlockParts {
  PConvSpec pc;
  ConvSpec pw1;
  ConvSpec pw2;
  std::span<const double> gamma;
  std::span<const double> beta;
};

FasterBlockParts bind_faster_block(int width, std::span<const Tensor> params) {
  const auto shapes = faster_block_param_shapes(width);
  if (params.size() != shapes.size()) {
    throw ValidationError("faster_block: expected " + std::to_string(shapes.size()) +
                          " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!(params[i].shape == shapes[i])) {
      throw ValidationError("faster_block: parameter " + std::to_string(i) + " has shape " +
                            params[i].shape.str() + ", expected " + shapes[i].str());
    }
  }
  FasterBlockParts parts;
  parts.pc = PConvSpec::make(width, width / 4);
  parts.pc.inner = conv_spec_from(params[0], &params[1], 1, 1, 1, 1, 1);
  parts.pw1 = conv_spec_from(params[2], &params[3], 1, 1, 0, 0, 1);
  parts.pw2 = conv_spec_from(params[6], &params[7], 1, 1, 0, 0, 1);
  parts.gamma = std::span<const double>(params[4].data);
  parts.beta = std::span<const double>(params[5].data);
  return parts;
}

}  // namespace

Tensor faster_block(const Tensor& x, std::span<const Tensor> params) {
  const FasterBlockParts p = bind_faster_block(x.shape.c, params);
  Tensor t = pconv(x, p.pc);
  t = conv2d(t, p.pw1);
  t = group_norm<double>(t, kBlockGnGroups, p.gamma, p.beta, 1e-5);
  t = activation(t, Activation::kRelu);
  t = conv2d(t, p.pw2);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += x.data[i];
  return t;
}

BlockGrads faster_block_vjp(const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
  const FasterBlockParts p = bind_faster_block(x.shape.c, params);
  if (!(gy.shape == x.shape)) throw ValidationError("faster_block_vjp: cotangent shape mismatch");

  // Forward with saved intermediates.
  Tensor t1 = pconv(x, p.pc);
  Tensor t2 = conv2d(t1, p.pw1);
  Tensor t3 = group_norm<double>(t2, kBlockGnGroups, p.gamma, p.beta, 1e-5);
  Tensor t4 = activation(t3, Activation::kRelu);

  ConvGrads g_pw2 = conv2d_vjp(t4, p.pw2, gy);
  Tensor g_t3 = activation_vjp(t3, Activation::kRelu, g_pw2.gx);
  GroupNormGrads g_gn = group_norm_vjp(t2, kBlockGnGroups, p.gamma, p.beta, 1e-5, g_t3);
  ConvGrads g_pw1 = conv2d_vjp(t1, p.pw1, g_gn.gx);
  PConvGrads g_pc = pconv_vjp(x, p.pc, g_pw1.gx);

  BlockGrads out;
  out.gx = std::move(g_pc.gx);
  for (std::size_t i = 0; i < out.gx.data.size(); ++i) out.gx.data[i] += gy.data[i];

  const int width = x.shape.c;
  const int mid = 2 * width;
  out.gparams.resize(8);
  out.gparams[0] = std::move(g_pc.gw);
  out.gparams[1] = Tensor(Shape4{1, width / 4, 1, 1}, std::move(g_pc.gb));
  out.gparams[2] = std::move(g_pw1.gw);
  out.gparams[3] = Tensor(Shape4{1, mid, 1, 1}, std::move(g_pw1.gb));
  out.gparams[4] = Tensor(Shape4{1, mid, 1, 1}, std::move(g_gn.ggamma));
  out.gparams[5] = Tensor(Shape4{1, mid, 1, 1}, std::move(g_gn.gbeta));
  out.gparams[6] = std::move(g_pw2.gw);
  out.gparams[7] = Tensor(Shape4{1, width, 1, 1}, std::move(g_pw2.gb));
  return out;
}

}  // namespace wsa
