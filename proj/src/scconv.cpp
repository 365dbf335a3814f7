#include "wsa/scconv.hpp"

#include <cmath>
#include <string>

#include "wsa/conv.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"

namespace wsa {

void SruConfig::validate() const {
  if (channels < 2 || channels % 2 != 0) {
    throw ValidationError("sru: channel count must be even, got " + std::to_string(channels));
  }
  if (gn_groups < 1 || channels % gn_groups != 0) {
    throw ValidationError("sru: channels not divisible by gn_groups");
  }
  if (gate_override && !(gate_override->shape.c == channels)) {
    throw ValidationError("sru: gate_override channel count mismatch");
  }
}

std::vector<Shape4> sru_param_shapes(int channels) {
  return {Shape4{1, channels, 1, 1}, Shape4{1, channels, 1, 1}};
}

std::vector<double> sru_importance(std::span<const double> gamma) {
  double total = 0.0;
  for (double g : gamma) total += g;
  if (std::fabs(total) < 1e-12) {
    throw ValidationError("sru: group-norm gammas sum to zero; importance weights undefined");
  }
  std::vector<double> w(gamma.size());
  for (std::size_t i = 0; i < gamma.size(); ++i) w[i] = gamma[i] / total;
  return w;
}

namespace {

struct SruForward {
  Tensor normed;  // GN(x)
  Tensor gate;
  bool gate_is_constant = false;
};

SruForward sru_gate(const Tensor& x, const SruConfig& cfg, std::span<const Tensor> params) {
  SruForward fwd;
  if (cfg.gate_override) {
    if (!(cfg.gate_override->shape == x.shape)) {
      throw ValidationError("sru: gate_override shape must match the input");
    }
    fwd.gate = *cfg.gate_override;
    fwd.gate_is_constant = true;
    return fwd;
  }
  if (params.size() != 2) throw ValidationError("sru: expected 2 parameter tensors");

  const std::span<const double> gamma(params[0].data);
  const std::span<const double> beta(params[1].data);
  fwd.normed = group_norm<double>(x, cfg.gn_groups, gamma, beta, 1e-5);
  const std::vector<double> w = sru_importance(gamma);

  fwd.gate = Tensor(x.shape);
  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  for (int n = 0; n < x.shape.n; ++n) {
    for (int c = 0; c < x.shape.c; ++c) {
      const std::int64_t off = (static_cast<std::int64_t>(n) * x.shape.c + c) * hw;
      for (std::int64_t i = 0; i < hw; ++i) {
        const double soft = sigmoid(cfg.gate_scale * w[c] * fwd.normed.data[off + i]);
        fwd.gate.data[off + i] = cfg.hard_gate ? (soft > 0.5 ? 1.0 : 0.0) : soft;
      }
    }
  }
  fwd.gate_is_constant = cfg.hard_gate;
  return fwd;
}

// Cross-reconstruction: out = concat(X1a + X2b, X1b + X2a) where X1 = g*x,
// X2 = (1-g)*x and a/b are channel halves.
Tensor cross_reconstruct(const Tensor& x, const Tensor& gate) {
  const int half = x.shape.c / 2;
  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  const std::int64_t block = half * hw;
  Tensor y(x.shape);
  for (int n = 0; n < x.shape.n; ++n) {
    const std::int64_t off = static_cast<std::int64_t>(n) * x.shape.c * hw;
    for (std::int64_t i = 0; i < block; ++i) {
      const double x1a = gate.data[off + i] * x.data[off + i];
      const double x1b = gate.data[off + block + i] * x.data[off + block + i];
      const double x2a = (1.0 - gate.data[off + i]) * x.data[off + i];
      const double x2b = (1.0 - gate.data[off + block + i]) * x.data[off + block + i];
      y.data[off + i] = x1a + x2b;
      y.data[off + block + i] = x1b + x2a;
    }
  }
  return y;
}

}  // namespace

Tensor sru(const Tensor& x, const SruConfig& cfg, std::span<const Tensor> params) {
  cfg.validate();
  if (x.shape.c != cfg.channels) throw ValidationError("sru: input channel count mismatch");
  const SruForward fwd = sru_gate(x, cfg, params);
  return cross_reconstruct(x, fwd.gate);
}

BlockGrads sru_vjp(const Tensor& x, const SruConfig& cfg, std::span<const Tensor> params,
                   const Tensor& gy) {
  cfg.validate();
  if (!(gy.shape == x.shape)) throw ValidationError("sru_vjp: cotangent shape mismatch");
  const SruForward fwd = sru_gate(x, cfg, params);

  const int half = x.shape.c / 2;
  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  const std::int64_t block = half * hw;

  // gX1 keeps gy's half order; gX2 sees the halves swapped.
  Tensor g_gate(x.shape);
  Tensor gx(x.shape);
  for (int n = 0; n < x.shape.n; ++n) {
    const std::int64_t off = static_cast<std::int64_t>(n) * x.shape.c * hw;
    for (std::int64_t i = 0; i < block; ++i) {
      const double g1a = gy.data[off + i];
      const double g1b = gy.data[off + block + i];
      const double g2a = gy.data[off + block + i];
      const double g2b = gy.data[off + i];
      const double ga = fwd.gate.data[off + i];
      const double gb = fwd.gate.data[off + block + i];
      gx.data[off + i] = g1a * ga + g2a * (1.0 - ga);
      gx.data[off + block + i] = g1b * gb + g2b * (1.0 - gb);
      g_gate.data[off + i] = (g1a - g2a) * x.data[off + i];
      g_gate.data[off + block + i] = (g1b - g2b) * x.data[off + block + i];
    }
  }

  BlockGrads out;
  if (fwd.gate_is_constant) {
    out.gx = std::move(gx);
    out.gparams.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) out.gparams[i] = Tensor(params[i].shape);
    return out;
  }

  const std::span<const double> gamma(params[0].data);
  const std::span<const double> beta(params[1].data);
  const std::vector<double> w = sru_importance(gamma);

  // gate = sigmoid(scale * w_c * normed)
  Tensor g_normed(x.shape);
  std::vector<double> g_w(x.shape.c, 0.0);
  for (int n = 0; n < x.shape.n; ++n) {
    for (int c = 0; c < x.shape.c; ++c) {
      const std::int64_t off = (static_cast<std::int64_t>(n) * x.shape.c + c) * hw;
      double acc = 0.0;
      for (std::int64_t i = 0; i < hw; ++i) {
        const double s = fwd.gate.data[off + i];
        const double g_pre = g_gate.data[off + i] * s * (1.0 - s) * cfg.gate_scale;
        g_normed.data[off + i] = g_pre * w[c];
        acc += g_pre * fwd.normed.data[off + i];
      }
      g_w[c] += acc;
    }
  }

  GroupNormGrads g_gn = group_norm_vjp(x, cfg.gn_groups, gamma, beta, 1e-5, g_normed);
  for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] += g_gn.gx.data[i];

  // w_c = gamma_c / S: dgamma_c = g_w[c]/S - sum_j(g_w[j] gamma_j)/S^2.
  double total = 0.0;
  for (double g : gamma) total += g;
  double weighted = 0.0;
  for (std::size_t j = 0; j < g_w.size(); ++j) weighted += g_w[j] * gamma[j];
  std::vector<double> g_gamma(x.shape.c);
  for (int c = 0; c < x.shape.c; ++c) {
    g_gamma[c] = g_gn.ggamma[c] + g_w[c] / total - weighted / (total * total);
  }

  out.gx = std::move(gx);
  out.gparams.resize(2);
  out.gparams[0] = Tensor(Shape4{1, x.shape.c, 1, 1}, std::move(g_gamma));
  out.gparams[1] = Tensor(Shape4{1, x.shape.c, 1, 1}, std::move(g_gn.gbeta));
  return out;
}

void CruConfig::validate() const {
  if (channels < 2) throw ValidationError("cru: needs at least 2 channels");
  const double up_f = split_ratio * channels;
  if (split_ratio <= 0.0 || split_ratio >= 1.0 || std::fabs(up_f - std::round(up_f)) > 1e-9) {
    throw ValidationError("cru: split_ratio * channels must be integral and in (0, C)");
  }
  if (squeeze_ratio < 1) throw ValidationError("cru: squeeze_ratio must be >= 1");
  const int up = upper_channels();
  const int low = channels - up;
  if (up % squeeze_ratio != 0 || low % squeeze_ratio != 0) {
    throw ValidationError("cru: split channel counts must be divisible by squeeze_ratio");
  }
  const int cu = up / squeeze_ratio;
  const int cl = low / squeeze_ratio;
  if (cu < gwc_groups || cu % gwc_groups != 0 || channels % gwc_groups != 0) {
    throw ValidationError("cru: squeezed upper width must be >= and divisible by gwc_groups");
  }
  if (cl < 1 || cl >= channels) {
    throw ValidationError("cru: squeezed lower width out of range");
  }
}

int CruConfig::upper_channels() const {
  return static_cast<int>(std::llround(split_ratio * channels));
}
int CruConfig::upper_squeezed() const { return upper_channels() / squeeze_ratio; }
int CruConfig::lower_squeezed() const { return lower_channels() / squeeze_ratio; }

std::vector<Shape4> cru_param_shapes(const CruConfig& cfg) {
  cfg.validate();
  const int C = cfg.channels;
  const int up = cfg.upper_channels();
  const int low = cfg.lower_channels();
  const int cu = cfg.upper_squeezed();
  const int cl = cfg.lower_squeezed();
  return {
      Shape4{cu, up, 1, 1},  Shape4{1, cu, 1, 1},                 // upper squeeze
      Shape4{C, cu / cfg.gwc_groups, 3, 3}, Shape4{1, C, 1, 1},   // group-wise conv
      Shape4{C, cu, 1, 1},   Shape4{1, C, 1, 1},                  // upper pointwise
      Shape4{cl, low, 1, 1}, Shape4{1, cl, 1, 1},                 // lower squeeze
      Shape4{C - cl, cl, 1, 1}, Shape4{1, C - cl, 1, 1},          // lower pointwise
  };
}

namespace {

struct CruParts {
  ConvSpec sq_u, gwc, pwc1, sq_l, pwc2;
};

CruParts bind_cru(const CruConfig& cfg, std::span<const Tensor> params) {
  const auto shapes = cru_param_shapes(cfg);
  if (params.size() != shapes.size()) {
    throw ValidationError("cru: expected " + std::to_string(shapes.size()) +
                          " parameter tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    if (!(params[i].shape == shapes[i])) {
      throw ValidationError("cru: parameter " + std::to_string(i) + " has shape " +
                            params[i].shape.str() + ", expected " + shapes[i].str());
    }
  }
  CruParts p;
  p.sq_u = conv_spec_from(params[0], &params[1], 1, 1, 0, 0, 1);
  p.gwc = conv_spec_from(params[2], &params[3], 1, 1, 1, 1, cfg.gwc_groups);
  p.pwc1 = conv_spec_from(params[4], &params[5], 1, 1, 0, 0, 1);
  p.sq_l = conv_spec_from(params[6], &params[7], 1, 1, 0, 0, 1);
  p.pwc2 = conv_spec_from(params[8], &params[9], 1, 1, 0, 0, 1);
  return p;
}

struct CruForward {
  Tensor xu, xl;      // channel split of the input
  Tensor u, l;        // squeezed paths
  Tensor y1, y2;      // transformed paths, C channels each
  Tensor beta1;       // per (n, c) merge weight of y1, broadcast over h, w
};

CruForward cru_forward(const Tensor& x, const CruConfig& cfg, const CruParts& p) {
  CruForward f;
  const int sizes[] = {cfg.upper_channels(), cfg.lower_channels()};
  auto parts = tensor_split(x, std::span<const int>(sizes, 2));
  f.xu = std::move(parts[0]);
  f.xl = std::move(parts[1]);

  f.u = conv2d(f.xu, p.sq_u);
  Tensor gwc_out = conv2d(f.u, p.gwc);
  Tensor pwc1_out = conv2d(f.u, p.pwc1);
  f.y1 = Tensor(gwc_out.shape);
  for (std::size_t i = 0; i < f.y1.data.size(); ++i) {
    f.y1.data[i] = gwc_out.data[i] + pwc1_out.data[i];
  }

  f.l = conv2d(f.xl, p.sq_l);
  f.y2 = tensor_concat(conv2d(f.l, p.pwc2), f.l);

  // Per-channel softmax over pooled responses: beta1 = sigmoid(p1 - p2).
  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  f.beta1 = Tensor(Shape4{x.shape.n, x.shape.c, 1, 1});
  for (int n = 0; n < x.shape.n; ++n) {
    for (int c = 0; c < x.shape.c; ++c) {
      const std::int64_t off = (static_cast<std::int64_t>(n) * x.shape.c + c) * hw;
      double p1 = 0.0, p2 = 0.0;
      for (std::int64_t i = 0; i < hw; ++i) {
        p1 += f.y1.data[off + i];
        p2 += f.y2.data[off + i];
      }
      f.beta1.at(n, c, 0, 0) = sigmoid((p1 - p2) / static_cast<double>(hw));
    }
  }
  return f;
}

}  // namespace

Tensor cru(const Tensor& x, const CruConfig& cfg, std::span<const Tensor> params) {
  cfg.validate();
  if (x.shape.c != cfg.channels) throw ValidationError("cru: input channel count mismatch");
  const CruParts p = bind_cru(cfg, params);
  const CruForward f = cru_forward(x, cfg, p);

  Tensor y(x.shape);
  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  for (int n = 0; n < x.shape.n; ++n) {
    for (int c = 0; c < x.shape.c; ++c) {
      const std::int64_t off = (static_cast<std::int64_t>(n) * x.shape.c + c) * hw;
      const double b1 = f.beta1.at(n, c, 0, 0);
      for (std::int64_t i = 0; i < hw; ++i) {
        y.data[off + i] = b1 * f.y1.data[off + i] + (1.0 - b1) * f.y2.data[off + i];
      }
    }
  }
  return y;
}

BlockGrads cru_vjp(const Tensor& x, const CruConfig& cfg, std::span<const Tensor> params,
                   const Tensor& gy) {
  cfg.validate();
  if (!(gy.shape == x.shape)) throw ValidationError("cru_vjp: cotangent shape mismatch");
  const CruParts p = bind_cru(cfg, params);
  const CruForward f = cru_forward(x, cfg, p);

  const std::int64_t hw = static_cast<std::int64_t>(x.shape.h) * x.shape.w;
  Tensor g_y1(x.shape), g_y2(x.shape);
  for (int n = 0; n < x.shape.n; ++n) {
    for (int c = 0; c < x.shape.c; ++c) {
      const std::int64_t off = (static_cast<std::int64_t>(n) * x.shape.c + c) * hw;
      const double b1 = f.beta1.at(n, c, 0, 0);
      double g_b1 = 0.0;
      for (std::int64_t i = 0; i < hw; ++i) {
        g_y1.data[off + i] = gy.data[off + i] * b1;
        g_y2.data[off + i] = gy.data[off + i] * (1.0 - b1);
        g_b1 += gy.data[off + i] * (f.y1.data[off + i] - f.y2.data[off + i]);
      }
      // beta1 = sigmoid((p1 - p2)/hw) with p the pooled sums.
      const double g_diff = g_b1 * b1 * (1.0 - b1) / static_cast<double>(hw);
      for (std::int64_t i = 0; i < hw; ++i) {
        g_y1.data[off + i] += g_diff;
        g_y2.data[off + i] -= g_diff;
      }
    }
  }

  // Upper path.
  ConvGrads g_gwc = conv2d_vjp(f.u, p.gwc, g_y1);
  ConvGrads g_pwc1 = conv2d_vjp(f.u, p.pwc1, g_y1);
  Tensor g_u(f.u.shape);
  for (std::size_t i = 0; i < g_u.data.size(); ++i) {
    g_u.data[i] = g_gwc.gx.data[i] + g_pwc1.gx.data[i];
  }
  ConvGrads g_squ = conv2d_vjp(f.xu, p.sq_u, g_u);

  // Lower path: y2 = concat(pwc2(l), l).
  const int cl = cfg.lower_squeezed();
  const int sizes[] = {cfg.channels - cl, cl};
  auto g_y2_parts = tensor_split(g_y2, std::span<const int>(sizes, 2));
  ConvGrads g_pwc2 = conv2d_vjp(f.l, p.pwc2, g_y2_parts[0]);
  Tensor g_l(f.l.shape);
  for (std::size_t i = 0; i < g_l.data.size(); ++i) {
    g_l.data[i] = g_pwc2.gx.data[i] + g_y2_parts[1].data[i];
  }
  ConvGrads g_sql = conv2d_vjp(f.xl, p.sq_l, g_l);

  BlockGrads out;
  out.gx = tensor_concat(g_squ.gx, g_sql.gx);
  out.gparams.resize(10);
  out.gparams[0] = std::move(g_squ.gw);
  out.gparams[1] = Tensor(Shape4{1, cfg.upper_squeezed(), 1, 1}, std::move(g_squ.gb));
  out.gparams[2] = std::move(g_gwc.gw);
  out.gparams[3] = Tensor(Shape4{1, cfg.channels, 1, 1}, std::move(g_gwc.gb));
  out.gparams[4] = std::move(g_pwc1.gw);
  out.gparams[5] = Tensor(Shape4{1, cfg.channels, 1, 1}, std::move(g_pwc1.gb));
  out.gparams[6] = std::move(g_sql.gw);
  out.gparams[7] = Tensor(Shape4{1, cl, 1, 1}, std::move(g_sql.gb));
  out.gparams[8] = std::move(g_pwc2.gw);
  out.gparams[9] = Tensor(Shape4{1, cfg.channels - cl, 1, 1}, std::move(g_pwc2.gb));
  return out;
}

std::vector<Shape4> scconv_param_shapes(int channels) {
  auto shapes = sru_param_shapes(channels);
  CruConfig cru_cfg;
  cru_cfg.channels = channels;
  for (const auto& s : cru_param_shapes(cru_cfg)) shapes.push_back(s);
  return shapes;
}

Tensor scconv_apply(const Tensor& x, const SruConfig& sru_cfg, const CruConfig& cru_cfg,
                    std::span<const Tensor> params) {
  const std::size_t n_sru = sru_param_shapes(sru_cfg.channels).size();
  Tensor mid = sru(x, sru_cfg, params.subspan(0, n_sru));
  return cru(mid, cru_cfg, params.subspan(n_sru));
}

BlockGrads scconv_apply_vjp(const Tensor& x, const SruConfig& sru_cfg, const CruConfig& cru_cfg,
                            std::span<const Tensor> params, const Tensor& gy) {
  const std::size_t n_sru = sru_param_shapes(sru_cfg.channels).size();
  Tensor mid = sru(x, sru_cfg, params.subspan(0, n_sru));
  BlockGrads g_cru = cru_vjp(mid, cru_cfg, params.subspan(n_sru), gy);
  BlockGrads g_sru = sru_vjp(x, sru_cfg, params.subspan(0, n_sru), g_cru.gx);

  BlockGrads out;
  out.gx = std::move(g_sru.gx);
  out.gparams = std::move(g_sru.gparams);
  for (Tensor& t : g_cru.gparams) out.gparams.push_back(std::move(t));
  return out;
}

}  // namespace wsa
