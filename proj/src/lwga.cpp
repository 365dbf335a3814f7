#include "wsa/lwga.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wsa/conv.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"

namespace wsa {

LwgaConfig LwgaConfig::make_default(int channels, int h, int w) {
  const int n_tokens = h * w;
  LwgaConfig cfg;
  cfg.channels = channels;
  cfg.sma_samples = std::min(64, n_tokens);
  cfg.sga_k = std::min(64, (n_tokens + 3) / 4);
  cfg.validate(h, w);
  return cfg;
}

void LwgaConfig::validate(int h, int w) const {
  if (channels < 4 || channels % 4 != 0) {
    throw ValidationError("lwga: channels must be a positive multiple of 4, got " +
                          std::to_string(channels));
  }
  const int n_tokens = h * w;
  if (sma_samples < 1 || sma_samples > n_tokens) {
    throw ValidationError("lwga: sma_samples " + std::to_string(sma_samples) +
                          " out of range for " + std::to_string(n_tokens) + " tokens");
  }
  if (sga_k < 1 || sga_k > n_tokens) {
    throw ValidationError("lwga: sga_k " + std::to_string(sga_k) + " out of range for " +
                          std::to_string(n_tokens) + " tokens");
  }
}

std::vector<Shape4> gpa_param_shapes(int d) {
  return {Shape4{d, d, 1, 1}, Shape4{1, d, 1, 1}};
}

std::vector<Shape4> rla_param_shapes(int d) {
  return {Shape4{d, 1, 3, 3}, Shape4{1, d, 1, 1}, Shape4{d, d, 1, 1}, Shape4{1, d, 1, 1}};
}

std::vector<Shape4> lwga_param_shapes(int channels) {
  const int d = channels / 4;
  std::vector<Shape4> shapes{Shape4{1, 4, 1, 1}};
  for (const auto& s : gpa_param_shapes(d)) shapes.push_back(s);
  for (const auto& s : rla_param_shapes(d)) shapes.push_back(s);
  shapes.push_back(Shape4{channels, channels, 1, 1});
  shapes.push_back(Shape4{1, channels, 1, 1});
  return shapes;
}

Tensor gpa(const Tensor& xg, std::span<const Tensor> params) {
  if (params.size() != 2) throw ValidationError("gpa: expected 2 parameter tensors");
  const ConvSpec gate_conv = conv_spec_from(params[0], &params[1], 1, 1, 0, 0, 1);
  Tensor gate = activation(conv2d(xg, gate_conv), Activation::kSigmoid);
  Tensor y(xg.shape);
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] = gate.data[i] * xg.data[i];
  return y;
}

BlockGrads gpa_vjp(const Tensor& xg, std::span<const Tensor> params, const Tensor& gy) {
  const ConvSpec gate_conv = conv_spec_from(params[0], &params[1], 1, 1, 0, 0, 1);
  Tensor pre = conv2d(xg, gate_conv);
  Tensor gate = activation(pre, Activation::kSigmoid);

  // y = gate(x) * x: product rule over both factors.
  Tensor g_gate(xg.shape);
  Tensor gx(xg.shape);
  for (std::size_t i = 0; i < gy.data.size(); ++i) {
    g_gate.data[i] = gy.data[i] * xg.data[i];
    gx.data[i] = gy.data[i] * gate.data[i];
  }
  Tensor g_pre = activation_vjp(pre, Activation::kSigmoid, g_gate);
  ConvGrads g_conv = conv2d_vjp(xg, gate_conv, g_pre);
  for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g_conv.gx.data[i];

  BlockGrads out;
  out.gx = std::move(gx);
  out.gparams.resize(2);
  out.gparams[0] = std::move(g_conv.gw);
  out.gparams[1] = Tensor(Shape4{1, xg.shape.c, 1, 1}, std::move(g_conv.gb));
  return out;
}

Tensor rla(const Tensor& xg, std::span<const Tensor> params) {
  if (params.size() != 4) throw ValidationError("rla: expected 4 parameter tensors");
  const int d = xg.shape.c;
  const ConvSpec dw = conv_spec_from(params[0], &params[1], 1, 1, 1, 1, d);
  const ConvSpec pw = conv_spec_from(params[2], &params[3], 1, 1, 0, 0, 1);
  Tensor t = conv2d(activation(conv2d(xg, dw), Activation::kRelu), pw);
  for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += xg.data[i];
  return t;
}

BlockGrads rla_vjp(const Tensor& xg, std::span<const Tensor> params, const Tensor& gy) {
  const int d = xg.shape.c;
  const ConvSpec dw = conv_spec_from(params[0], &params[1], 1, 1, 1, 1, d);
  const ConvSpec pw = conv_spec_from(params[2], &params[3], 1, 1, 0, 0, 1);

  Tensor t1 = conv2d(xg, dw);
  Tensor t2 = activation(t1, Activation::kRelu);

  ConvGrads g_pw = conv2d_vjp(t2, pw, gy);
  Tensor g_t1 = activation_vjp(t1, Activation::kRelu, g_pw.gx);
  ConvGrads g_dw = conv2d_vjp(xg, dw, g_t1);

  BlockGrads out;
  out.gx = std::move(g_dw.gx);
  for (std::size_t i = 0; i < out.gx.data.size(); ++i) out.gx.data[i] += gy.data[i];
  out.gparams.resize(4);
  out.gparams[0] = std::move(g_dw.gw);
  out.gparams[1] = Tensor(Shape4{1, d, 1, 1}, std::move(g_dw.gb));
  out.gparams[2] = std::move(g_pw.gw);
  out.gparams[3] = Tensor(Shape4{1, d, 1, 1}, std::move(g_pw.gb));
  return out;
}

std::vector<int> sma_sample_indices(int n_tokens, int samples) {
  if (samples < 1 || samples > n_tokens) {
    throw ValidationError("sma: sample count " + std::to_string(samples) +
                          " out of range for " + std::to_string(n_tokens) + " tokens");
  }
  const int stride = n_tokens / samples;
  std::vector<int> idx(samples);
  for (int i = 0; i < samples; ++i) idx[i] = i * stride;
  return idx;
}

namespace {

// Token p = h*W + w carries the d channel values at that position.
std::vector<double> gather_tokens(const Tensor& x, int n) {
  const int d = x.shape.c;
  const int hw = x.shape.h * x.shape.w;
  std::vector<double> tokens(static_cast<std::size_t>(hw) * d);
  for (int c = 0; c < d; ++c) {
    const double* src = x.data.data() + (static_cast<std::int64_t>(n) * d + c) * hw;
    for (int p = 0; p < hw; ++p) tokens[static_cast<std::size_t>(p) * d + c] = src[p];
  }
  return tokens;
}

void store_tokens(Tensor& y, int n, const std::vector<double>& tokens) {
  const int d = y.shape.c;
  const int hw = y.shape.h * y.shape.w;
  for (int c = 0; c < d; ++c) {
    double* dst = y.data.data() + (static_cast<std::int64_t>(n) * d + c) * hw;
    for (int p = 0; p < hw; ++p) dst[p] = tokens[static_cast<std::size_t>(p) * d + c];
  }
}

std::vector<double> select_rows(const std::vector<double>& tokens, std::span<const int> idx,
                                int d) {
  std::vector<double> rows(idx.size() * static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    for (int t = 0; t < d; ++t) rows[i * d + t] = tokens[static_cast<std::size_t>(idx[i]) * d + t];
  }
  return rows;
}

// Shared forward for both sparse attention branches given key indices.
Tensor sparse_attention_forward(const Tensor& xg,
                                const std::vector<std::vector<int>>& per_sample_idx) {
  const int d = xg.shape.c;
  const int hw = xg.shape.h * xg.shape.w;
  Tensor y(xg.shape);
  for (int n = 0; n < xg.shape.n; ++n) {
    const std::vector<double> tokens = gather_tokens(xg, n);
    const auto& idx = per_sample_idx[n];
    const std::vector<double> keys = select_rows(tokens, idx, d);
    std::vector<double> out =
        scaled_dot_attention<double>(tokens, keys, keys, hw, static_cast<int>(idx.size()), d);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tokens[i];
    store_tokens(y, n, out);
  }
  return y;
}

Tensor sparse_attention_vjp(const Tensor& xg, const std::vector<std::vector<int>>& per_sample_idx,
                            const Tensor& gy) {
  const int d = xg.shape.c;
  const int hw = xg.shape.h * xg.shape.w;
  Tensor gx(xg.shape);
  for (int n = 0; n < xg.shape.n; ++n) {
    const std::vector<double> tokens = gather_tokens(xg, n);
    const auto& idx = per_sample_idx[n];
    const std::vector<double> keys = select_rows(tokens, idx, d);
    const std::vector<double> gt = gather_tokens(gy, n);

    AttentionGrads ag = scaled_dot_attention_vjp(tokens, keys, keys, hw,
                                                 static_cast<int>(idx.size()), d, gt);
    // Residual plus query gradient, then scatter key/value gradients.
    std::vector<double> gtok(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) gtok[i] = gt[i] + ag.gq[i];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (int t = 0; t < d; ++t) {
        gtok[static_cast<std::size_t>(idx[i]) * d + t] += ag.gk[i * d + t] + ag.gv[i * d + t];
      }
    }
    store_tokens(gx, n, gtok);
  }
  return gx;
}

std::vector<std::vector<int>> sga_indices(const Tensor& xg, int k) {
  const int d = xg.shape.c;
  const int hw = xg.shape.h * xg.shape.w;
  std::vector<std::vector<int>> idx(xg.shape.n);
  for (int n = 0; n < xg.shape.n; ++n) {
    const std::vector<double> tokens = gather_tokens(xg, n);
    std::vector<double> scores(hw);
    for (int p = 0; p < hw; ++p) {
      double sq = 0.0;
      for (int t = 0; t < d; ++t) {
        sq += tokens[static_cast<std::size_t>(p) * d + t] * tokens[static_cast<std::size_t>(p) * d + t];
      }
      scores[p] = std::sqrt(sq);
    }
    idx[n] = top_k(scores, k);
  }
  return idx;
}

}  // namespace

Tensor sma(const Tensor& xg, int samples) {
  const int hw = xg.shape.h * xg.shape.w;
  const std::vector<int> idx = sma_sample_indices(hw, samples);
  return sparse_attention_forward(xg, std::vector<std::vector<int>>(xg.shape.n, idx));
}

Tensor sma_vjp(const Tensor& xg, int samples, const Tensor& gy) {
  const int hw = xg.shape.h * xg.shape.w;
  const std::vector<int> idx = sma_sample_indices(hw, samples);
  return sparse_attention_vjp(xg, std::vector<std::vector<int>>(xg.shape.n, idx), gy);
}

Tensor sga(const Tensor& xg, int k) {
  return sparse_attention_forward(xg, sga_indices(xg, k));
}

Tensor sga_vjp(const Tensor& xg, int k, const Tensor& gy) {
  return sparse_attention_vjp(xg, sga_indices(xg, k), gy);
}

namespace {

struct LwgaParts {
  std::span<const Tensor> alpha;
  std::span<const Tensor> gpa_params;
  std::span<const Tensor> rla_params;
  ConvSpec mix;
};

LwgaParts bind_lwga(const LwgaConfig& cfg, std::span<const Tensor> params) {
  const auto shapes = lwga_param_shapes(cfg.channels);
  if (params.size() != shapes.size()) {
    throw ValidationError("lwga: expected " + std::to_string(shapes.size()) +
                          " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!(params[i].shape == shapes[i])) {
      throw ValidationError("lwga: parameter " + std::to_string(i) + " has shape " +
                            params[i].shape.str() + ", expected " + shapes[i].str());
    }
  }
  LwgaParts parts;
  parts.alpha = params.subspan(0, 1);
  parts.gpa_params = params.subspan(1, 2);
  parts.rla_params = params.subspan(3, 4);
  parts.mix = conv_spec_from(params[7], &params[8], 1, 1, 0, 0, 1);
  return parts;
}

}  // namespace

Tensor lwga_apply(const Tensor& x, const LwgaConfig& cfg, std::span<const Tensor> params) {
  cfg.validate(x.shape.h, x.shape.w);
  if (x.shape.c != cfg.channels) {
    throw ValidationError("lwga: input channels do not match config");
  }
  const LwgaParts parts = bind_lwga(cfg, params);
  const int d = cfg.channels / 4;
  const int sizes[] = {d, d, d, d};
  auto quarters = tensor_split(x, std::span<const int>(sizes, 4));

  Tensor branches[4] = {gpa(quarters[0], parts.gpa_params), rla(quarters[1], parts.rla_params),
                        sma(quarters[2], cfg.sma_samples), sga(quarters[3], cfg.sga_k)};
  const std::vector<double> ahat = softmax(std::span<const double>(parts.alpha[0].data));
  for (int b = 0; b < 4; ++b) {
    for (double& v : branches[b].data) v *= ahat[b];
  }
  Tensor z = tensor_concat(std::span<const Tensor>(branches, 4));
  return conv2d(z, parts.mix);
}

BlockGrads lwga_apply_vjp(const Tensor& x, const LwgaConfig& cfg, std::span<const Tensor> params,
                          const Tensor& gy) {
  cfg.validate(x.shape.h, x.shape.w);
  const LwgaParts parts = bind_lwga(cfg, params);
  const int d = cfg.channels / 4;
  const int sizes[] = {d, d, d, d};
  auto quarters = tensor_split(x, std::span<const int>(sizes, 4));

  Tensor branches[4] = {gpa(quarters[0], parts.gpa_params), rla(quarters[1], parts.rla_params),
                        sma(quarters[2], cfg.sma_samples), sga(quarters[3], cfg.sga_k)};
  const std::vector<double> ahat = softmax(std::span<const double>(parts.alpha[0].data));
  Tensor scaled[4];
  for (int b = 0; b < 4; ++b) {
    scaled[b] = branches[b];
    for (double& v : scaled[b].data) v *= ahat[b];
  }
  Tensor z = tensor_concat(std::span<const Tensor>(scaled, 4));

  ConvGrads g_mix = conv2d_vjp(z, parts.mix, gy);
  auto gz = tensor_split(g_mix.gx, std::span<const int>(sizes, 4));

  // d(ahat_b * F_b): branch cotangent is ahat_b * gz_b; alpha cotangent is
  // <gz_b, F_b> through the softmax.
  std::vector<double> g_ahat(4, 0.0);
  BlockGrads out;
  out.gparams.resize(9);
  Tensor gx_parts[4];
  for (int b = 0; b < 4; ++b) {
    g_ahat[b] = dot(gz[b].data, branches[b].data);
    for (double& v : gz[b].data) v *= ahat[b];
  }

  BlockGrads g_gpa = gpa_vjp(quarters[0], parts.gpa_params, gz[0]);
  BlockGrads g_rla = rla_vjp(quarters[1], parts.rla_params, gz[1]);
  gx_parts[0] = std::move(g_gpa.gx);
  gx_parts[1] = std::move(g_rla.gx);
  gx_parts[2] = sma_vjp(quarters[2], cfg.sma_samples, gz[2]);
  gx_parts[3] = sga_vjp(quarters[3], cfg.sga_k, gz[3]);
  out.gx = tensor_concat(std::span<const Tensor>(gx_parts, 4));

  const std::vector<double> g_alpha =
      softmax_vjp(ahat, std::span<const double>(g_ahat.data(), 4));
  out.gparams[0] = Tensor(Shape4{1, 4, 1, 1}, g_alpha);
  out.gparams[1] = std::move(g_gpa.gparams[0]);
  out.gparams[2] = std::move(g_gpa.gparams[1]);
  for (int i = 0; i < 4; ++i) out.gparams[3 + i] = std::move(g_rla.gparams[i]);
  out.gparams[7] = std::move(g_mix.gw);
  out.gparams[8] = Tensor(Shape4{1, cfg.channels, 1, 1}, std::move(g_mix.gb));
  return out;
}

std::int64_t lwga_attention_macs(const Shape4& in, const LwgaConfig& cfg) {
  const std::int64_t n_tokens = static_cast<std::int64_t>(in.h) * in.w;
  const std::int64_t d = cfg.channels / 4;
  return attention_macs(n_tokens, cfg.sma_samples, d) + attention_macs(n_tokens, cfg.sga_k, d);
}

std::int64_t dense_attention_param_count(int channels) {
  // q, k, v and output projections at full width, with biases.
  return 4 * (static_cast<std::int64_t>(channels) * channels + channels);
}

}  // namespace wsa
