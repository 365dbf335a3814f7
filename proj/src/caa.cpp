#include "wsa/caa.hpp"

#include <string>

#include "wsa/conv.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"

namespace wsa {

void CaaConfig::validate() const {
  if (channels < 1) throw ValidationError("caa: channel count must be positive");
  if (pool_k < 1 || pool_k % 2 == 0) {
    throw ValidationError("caa: pool kernel must be odd, got " + std::to_string(pool_k));
  }
  if (strip_k < 1 || strip_k % 2 == 0) {
    throw ValidationError("caa: strip kernel must be odd, got " + std::to_string(strip_k));
  }
}

std::vector<Shape4> caa_param_shapes(const CaaConfig& cfg) {
  cfg.validate();
  const int C = cfg.channels;
  const int k = cfg.strip_k;
  return {
      Shape4{C, C, 1, 1}, Shape4{1, C, 1, 1},  // pw1
      Shape4{C, 1, 1, k}, Shape4{1, C, 1, 1},  // 1xk strip
      Shape4{C, 1, k, 1}, Shape4{1, C, 1, 1},  // kx1 strip
      Shape4{C, C, 1, 1}, Shape4{1, C, 1, 1},  // pw2
  };
}

namespace {

struct CaaParts {
  ConvSpec pw1, dw_h, dw_v, pw2;
};

CaaParts bind_caa(const CaaConfig& cfg, std::span<const Tensor> params) {
  const auto shapes = caa_param_shapes(cfg);
  if (params.size() != shapes.size()) {
    throw ValidationError("caa: expected " + std::to_string(shapes.size()) +
                          " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!(params[i].shape == shapes[i])) {
      throw ValidationError("caa: parameter " + std::to_string(i) + " has shape " +
                            params[i].shape.str() + ", expected " + shapes[i].str());
    }
  }
  const int pad = (cfg.strip_k - 1) / 2;
  CaaParts p;
  p.pw1 = conv_spec_from(params[0], &params[1], 1, 1, 0, 0, 1);
  p.dw_h = conv_spec_from(params[2], &params[3], 1, 1, 0, pad, cfg.channels);
  p.dw_v = conv_spec_from(params[4], &params[5], 1, 1, pad, 0, cfg.channels);
  p.pw2 = conv_spec_from(params[6], &params[7], 1, 1, 0, 0, 1);
  return p;
}

}  // namespace

Tensor caa_attention_map(const Tensor& x, const CaaConfig& cfg, std::span<const Tensor> params) {
  cfg.validate();
  if (x.shape.c != cfg.channels) throw ValidationError("caa: input channel count mismatch");
  const CaaParts p = bind_caa(cfg, params);
  const int pad = (cfg.pool_k - 1) / 2;

  Tensor t = avg_pool2d(x, cfg.pool_k, cfg.pool_k, 1, 1, pad, pad);
  t = conv2d(t, p.pw1);
  t = conv2d(t, p.dw_h);
  t = conv2d(t, p.dw_v);
  t = conv2d(t, p.pw2);
  return activation(t, Activation::kSigmoid);
}

Tensor caa_apply(const Tensor& x, const CaaConfig& cfg, std::span<const Tensor> params) {
  Tensor a = caa_attention_map(x, cfg, params);
  Tensor y(x.shape);
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = a.data[i] * x.data[i];
  return y;
}

BlockGrads caa_apply_vjp(const Tensor& x, const CaaConfig& cfg, std::span<const Tensor> params,
                         const Tensor& gy) {
  cfg.validate();
  if (!(gy.shape == x.shape)) throw ValidationError("caa_vjp: cotangent shape mismatch");
  const CaaParts p = bind_caa(cfg, params);
  const int pad = (cfg.pool_k - 1) / 2;

  Tensor pooled = avg_pool2d(x, cfg.pool_k, cfg.pool_k, 1, 1, pad, pad);
  Tensor t1 = conv2d(pooled, p.pw1);
  Tensor t2 = conv2d(t1, p.dw_h);
  Tensor t3 = conv2d(t2, p.dw_v);
  Tensor s = conv2d(t3, p.pw2);
  Tensor a = activation(s, Activation::kSigmoid);

  Tensor g_a(x.shape), gx(x.shape);
  for (std::size_t i = 0; i < gy.data.size(); ++i) {
    g_a.data[i] = gy.data[i] * x.data[i];
    gx.data[i] = gy.data[i] * a.data[i];
  }

  Tensor g_s = activation_vjp(s, Activation::kSigmoid, g_a);
  ConvGrads g_pw2 = conv2d_vjp(t3, p.pw2, g_s);
  ConvGrads g_dwv = conv2d_vjp(t2, p.dw_v, g_pw2.gx);
  ConvGrads g_dwh = conv2d_vjp(t1, p.dw_h, g_dwv.gx);
  ConvGrads g_pw1 = conv2d_vjp(pooled, p.pw1, g_dwh.gx);
  Tensor g_pool = avg_pool2d_vjp(x.shape, cfg.pool_k, cfg.pool_k, 1, 1, pad, pad, g_pw1.gx);
  for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g_pool.data[i];

  const int C = cfg.channels;
  BlockGrads out;
  out.gx = std::move(gx);
  out.gparams.resize(8);
  out.gparams[0] = std::move(g_pw1.gw);
  out.gparams[1] = Tensor(Shape4{1, C, 1, 1}, std::move(g_pw1.gb));
  out.gparams[2] = std::move(g_dwh.gw);
  out.gparams[3] = Tensor(Shape4{1, C, 1, 1}, std::move(g_dwh.gb));
  out.gparams[4] = std::move(g_dwv.gw);
  out.gparams[5] = Tensor(Shape4{1, C, 1, 1}, std::move(g_dwv.gb));
  out.gparams[6] = std::move(g_pw2.gw);
  out.gparams[7] = Tensor(Shape4{1, C, 1, 1}, std::move(g_pw2.gb));
  return out;
}

}  // namespace wsa
