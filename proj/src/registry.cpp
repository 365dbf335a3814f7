#include <algorithm>
#include <string>
#include <utility>

#include "wsa/caa.hpp"
#include "wsa/conv.hpp"
#include "wsa/gradcheck.hpp"
#include "wsa/lwga.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"
#include "wsa/scconv.hpp"

namespace wsa {

namespace {

std::vector<Tensor> sample_params(const std::vector<Shape4>& shapes, SplitMix64& rng) {
  std::vector<Tensor> params;
  params.reserve(shapes.size());
  for (const Shape4& s : shapes) params.push_back(random_tensor(s, rng, -0.8, 0.8));
  return params;
}

// Group-norm gammas are resampled positive: sru importance weights divide by
// their sum.
void positivize(Tensor& t, SplitMix64& rng) { fill_uniform(t, rng, 0.5, 1.5); }

GradcheckCase shape_case(std::string label,
                         std::function<std::pair<Tensor, std::vector<Tensor>>(SplitMix64&)> make) {
  return GradcheckCase{std::move(label), std::move(make)};
}

// Stride/pad inferred from the weight tensor: same-shape convs use pad k/2;
// groups come from the channel ratio.
ConvSpec infer_conv(const Tensor& x, std::span<const Tensor> params, int stride) {
  const int groups = x.shape.c / params[0].shape.c;
  const int ph = stride == 1 ? params[0].shape.h / 2 : 0;
  const int pw = stride == 1 ? params[0].shape.w / 2 : 0;
  return conv_spec_from(params[0], &params[1], stride, stride, ph, pw, groups);
}

RegisteredOp conv_registered(const std::string& name, int stride) {
  RegisteredOp reg;
  reg.op.name = name;
  reg.op.forward = [stride](const Tensor& x, std::span<const Tensor> params) {
    return conv2d(x, infer_conv(x, params, stride));
  };
  reg.op.vjp = [stride](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
    ConvGrads g = conv2d_vjp(x, infer_conv(x, params, stride), gy);
    BlockGrads out;
    out.gx = std::move(g.gx);
    out.gparams.resize(2);
    out.gparams[0] = std::move(g.gw);
    out.gparams[1] = Tensor(Shape4{1, params[1].shape.c, 1, 1}, std::move(g.gb));
    return out;
  };
  return reg;
}

GradcheckCase conv_case(std::string label, Shape4 in, int out_ch, int kh, int kw, int groups) {
  return shape_case(std::move(label), [=](SplitMix64& rng) {
    Tensor x = random_tensor(in, rng);
    std::vector<Tensor> params = sample_params(
        {Shape4{out_ch, in.c / groups, kh, kw}, Shape4{1, out_ch, 1, 1}}, rng);
    return std::make_pair(std::move(x), std::move(params));
  });
}

RegisteredOp group_norm_registered(const std::string& name, int groups) {
  RegisteredOp reg;
  reg.op.name = name;
  reg.op.forward = [groups](const Tensor& x, std::span<const Tensor> params) {
    return group_norm<double>(x, groups, params[0].data, params[1].data, 1e-5);
  };
  reg.op.vjp = [groups](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
    GroupNormGrads g = group_norm_vjp(x, groups, params[0].data, params[1].data, 1e-5, gy);
    BlockGrads out;
    out.gx = std::move(g.gx);
    out.gparams.resize(2);
    out.gparams[0] = Tensor(Shape4{1, x.shape.c, 1, 1}, std::move(g.ggamma));
    out.gparams[1] = Tensor(Shape4{1, x.shape.c, 1, 1}, std::move(g.gbeta));
    return out;
  };
  return reg;
}

GradcheckCase group_norm_case(std::string label, Shape4 in) {
  return shape_case(std::move(label), [=](SplitMix64& rng) {
    Tensor x = random_tensor(in, rng, -2.0, 2.0);
    auto params = sample_params({Shape4{1, in.c, 1, 1}, Shape4{1, in.c, 1, 1}}, rng);
    positivize(params[0], rng);
    return std::make_pair(std::move(x), std::move(params));
  });
}

RegisteredOp activation_registered(const std::string& name, Activation kind) {
  RegisteredOp reg;
  reg.op.name = name;
  reg.op.forward = [kind](const Tensor& x, std::span<const Tensor>) {
    return activation(x, kind);
  };
  reg.op.vjp = [kind](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
    return BlockGrads{activation_vjp(x, kind, gy), {}};
  };
  return reg;
}

GradcheckCase input_only_case(std::string label, Shape4 in, double lo = -1.0, double hi = 1.0) {
  return shape_case(std::move(label), [=](SplitMix64& rng) {
    return std::make_pair(random_tensor(in, rng, lo, hi), std::vector<Tensor>{});
  });
}

}  // namespace

std::vector<RegisteredOp> default_op_registry() {
  std::vector<RegisteredOp> ops;

  {
    RegisteredOp conv = conv_registered("conv2d", 1);
    conv.cases.push_back(conv_case("3x3", {1, 3, 5, 5}, 4, 3, 3, 1));
    conv.cases.push_back(conv_case("1x1", {2, 4, 3, 3}, 6, 1, 1, 1));
    conv.cases.push_back(conv_case("depthwise3x3", {1, 4, 6, 6}, 4, 3, 3, 4));
    conv.cases.push_back(conv_case("strip1x5", {1, 3, 4, 7}, 3, 1, 5, 3));
    conv.cases.push_back(conv_case("strip5x1", {1, 3, 7, 4}, 3, 5, 1, 3));
    ops.push_back(std::move(conv));
  }
  {
    RegisteredOp conv = conv_registered("conv2d_strided", 2);
    conv.cases.push_back(conv_case("2x2s2", {1, 2, 4, 4}, 4, 2, 2, 1));
    conv.cases.push_back(conv_case("2x2s2_wide", {2, 3, 6, 8}, 5, 2, 2, 1));
    conv.cases.push_back(conv_case("4x4s2", {1, 1, 8, 8}, 3, 4, 4, 1));
    ops.push_back(std::move(conv));
  }
  {
    RegisteredOp gn = group_norm_registered("group_norm", 2);
    gn.cases.push_back(group_norm_case("1x4x3x3", {1, 4, 3, 3}));
    gn.cases.push_back(group_norm_case("2x6x4x2", {2, 6, 4, 2}));
    gn.cases.push_back(group_norm_case("1x8x2x5", {1, 8, 2, 5}));
    ops.push_back(std::move(gn));
  }
  {
    RegisteredOp gn = group_norm_registered("group_norm_layer", 1);
    gn.cases.push_back(group_norm_case("1x3x4x4", {1, 3, 4, 4}));
    gn.cases.push_back(group_norm_case("2x5x3x3", {2, 5, 3, 3}));
    gn.cases.push_back(group_norm_case("1x2x6x5", {1, 2, 6, 5}));
    ops.push_back(std::move(gn));
  }
  {
    RegisteredOp act = activation_registered("relu", Activation::kRelu);
    act.cases.push_back(input_only_case("1x4x5x5", {1, 4, 5, 5}));
    act.cases.push_back(input_only_case("2x3x4x4", {2, 3, 4, 4}));
    act.cases.push_back(input_only_case("1x8x2x3", {1, 8, 2, 3}));
    ops.push_back(std::move(act));
  }
  {
    RegisteredOp act = activation_registered("sigmoid", Activation::kSigmoid);
    act.cases.push_back(input_only_case("1x4x5x5", {1, 4, 5, 5}, -3.0, 3.0));
    act.cases.push_back(input_only_case("2x3x4x4", {2, 3, 4, 4}, -3.0, 3.0));
    act.cases.push_back(input_only_case("1x8x2x3", {1, 8, 2, 3}, -3.0, 3.0));
    ops.push_back(std::move(act));
  }
  {
    RegisteredOp sm;
    sm.op.name = "softmax";
    sm.op.forward = [](const Tensor& x, std::span<const Tensor>) {
      return Tensor(x.shape, softmax(x.data));
    };
    sm.op.vjp = [](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
      const std::vector<double> s = softmax(x.data);
      return BlockGrads{Tensor(x.shape, softmax_vjp(s, gy.data)), {}};
    };
    sm.cases.push_back(input_only_case("len4", {1, 1, 1, 4}, -2.0, 2.0));
    sm.cases.push_back(input_only_case("len9", {1, 1, 1, 9}, -2.0, 2.0));
    sm.cases.push_back(input_only_case("len16", {1, 1, 1, 16}, -2.0, 2.0));
    ops.push_back(std::move(sm));
  }
  {
    RegisteredOp pool;
    pool.op.name = "avg_pool2d";
    pool.op.forward = [](const Tensor& x, std::span<const Tensor>) {
      return avg_pool2d(x, 3, 3, 1, 1, 1, 1);
    };
    pool.op.vjp = [](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
      return BlockGrads{avg_pool2d_vjp(x.shape, 3, 3, 1, 1, 1, 1, gy), {}};
    };
    pool.cases.push_back(input_only_case("1x2x5x5", {1, 2, 5, 5}));
    pool.cases.push_back(input_only_case("2x3x4x6", {2, 3, 4, 6}));
    pool.cases.push_back(input_only_case("1x1x7x3", {1, 1, 7, 3}));
    ops.push_back(std::move(pool));
  }
  {
    // Rows 0..mq-1 hold queries, then mk keys, then mk values.
    RegisteredOp attn;
    attn.op.name = "scaled_dot_attention";
    auto unpack = [](const Tensor& x) {
      const int d = x.shape.w;
      const int rows = x.shape.h;
      const int mk = rows / 3;
      const int mq = rows - 2 * mk;
      return std::tuple<int, int, int>(mq, mk, d);
    };
    attn.op.forward = [unpack](const Tensor& x, std::span<const Tensor>) {
      auto [mq, mk, d] = unpack(x);
      std::span<const double> all(x.data);
      auto out = scaled_dot_attention<double>(all.subspan(0, static_cast<std::size_t>(mq) * d),
                                              all.subspan(static_cast<std::size_t>(mq) * d,
                                                          static_cast<std::size_t>(mk) * d),
                                              all.subspan(static_cast<std::size_t>(mq + mk) * d),
                                              mq, mk, d);
      return Tensor(Shape4{1, 1, mq, d}, std::move(out));
    };
    attn.op.vjp = [unpack](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
      auto [mq, mk, d] = unpack(x);
      std::span<const double> all(x.data);
      AttentionGrads g = scaled_dot_attention_vjp(
          all.subspan(0, static_cast<std::size_t>(mq) * d),
          all.subspan(static_cast<std::size_t>(mq) * d, static_cast<std::size_t>(mk) * d),
          all.subspan(static_cast<std::size_t>(mq + mk) * d), mq, mk, d, gy.data);
      Tensor gx(x.shape);
      std::copy(g.gq.begin(), g.gq.end(), gx.data.begin());
      std::copy(g.gk.begin(), g.gk.end(), gx.data.begin() + static_cast<std::ptrdiff_t>(g.gq.size()));
      std::copy(g.gv.begin(), g.gv.end(),
                gx.data.begin() + static_cast<std::ptrdiff_t>(g.gq.size() + g.gk.size()));
      return BlockGrads{std::move(gx), {}};
    };
    attn.cases.push_back(input_only_case("mq3_mk3_d4", {1, 1, 9, 4}));
    attn.cases.push_back(input_only_case("mq2_mk2_d6", {1, 1, 6, 6}));
    attn.cases.push_back(input_only_case("mq4_mk4_d3", {1, 1, 12, 3}));
    ops.push_back(std::move(attn));
  }
  {
    RegisteredOp up;
    up.op.name = "upsample_nearest2x";
    up.op.forward = [](const Tensor& x, std::span<const Tensor>) { return upsample_nearest2x(x); };
    up.op.vjp = [](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
      (void)x;
      return BlockGrads{upsample_nearest2x_vjp(gy), {}};
    };
    up.cases.push_back(input_only_case("1x2x3x3", {1, 2, 3, 3}));
    up.cases.push_back(input_only_case("2x1x4x2", {2, 1, 4, 2}));
    up.cases.push_back(input_only_case("1x4x2x5", {1, 4, 2, 5}));
    ops.push_back(std::move(up));
  }
  {
    // Touched channel count comes from the weight tensor.
    RegisteredOp pc;
    pc.op.name = "pconv";
    auto spec_of = [](const Tensor& x, std::span<const Tensor> params) {
      PConvSpec spec = PConvSpec::make(x.shape.c, params[0].shape.n);
      spec.inner = conv_spec_from(params[0], &params[1], 1, 1, 1, 1, 1);
      return spec;
    };
    pc.op.forward = [spec_of](const Tensor& x, std::span<const Tensor> params) {
      return pconv(x, spec_of(x, params));
    };
    pc.op.vjp = [spec_of](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      PConvGrads g = pconv_vjp(x, spec_of(x, params), gy);
      BlockGrads out;
      out.gx = std::move(g.gx);
      out.gparams.resize(2);
      out.gparams[0] = std::move(g.gw);
      out.gparams[1] = Tensor(Shape4{1, params[1].shape.c, 1, 1}, std::move(g.gb));
      return out;
    };
    auto pconv_case = [](std::string label, Shape4 in, int touched) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params =
            sample_params({Shape4{touched, touched, 3, 3}, Shape4{1, touched, 1, 1}}, rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    pc.cases.push_back(pconv_case("c4_t1", {1, 4, 5, 5}, 1));
    pc.cases.push_back(pconv_case("c8_t2", {2, 8, 4, 4}, 2));
    pc.cases.push_back(pconv_case("c6_t3", {1, 6, 3, 6}, 3));
    pc.cases.push_back(pconv_case("full", {1, 4, 4, 4}, 4));
    ops.push_back(std::move(pc));
  }
  {
    RegisteredOp fb;
    fb.op.name = "faster_block";
    fb.op.forward = [](const Tensor& x, std::span<const Tensor> params) {
      return faster_block(x, params);
    };
    fb.op.vjp = [](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return faster_block_vjp(x, params, gy);
    };
    auto fb_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params = sample_params(faster_block_param_shapes(in.c), rng);
        positivize(params[4], rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    fb.cases.push_back(fb_case("w4", {1, 4, 5, 5}));
    fb.cases.push_back(fb_case("w8", {2, 8, 3, 3}));
    fb.cases.push_back(fb_case("w12", {1, 12, 4, 2}));
    ops.push_back(std::move(fb));
  }
  {
    RegisteredOp g;
    g.op.name = "gpa";
    g.op.forward = [](const Tensor& x, std::span<const Tensor> params) { return gpa(x, params); };
    g.op.vjp = [](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return gpa_vjp(x, params, gy);
    };
    auto gpa_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params = sample_params(gpa_param_shapes(in.c), rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    g.cases.push_back(gpa_case("d2", {1, 2, 4, 4}));
    g.cases.push_back(gpa_case("d4", {2, 4, 3, 3}));
    g.cases.push_back(gpa_case("d3", {1, 3, 5, 2}));
    ops.push_back(std::move(g));
  }
  {
    RegisteredOp r;
    r.op.name = "rla";
    r.op.forward = [](const Tensor& x, std::span<const Tensor> params) { return rla(x, params); };
    r.op.vjp = [](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return rla_vjp(x, params, gy);
    };
    auto rla_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params = sample_params(rla_param_shapes(in.c), rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    r.cases.push_back(rla_case("d2", {1, 2, 4, 4}));
    r.cases.push_back(rla_case("d4", {2, 4, 3, 3}));
    r.cases.push_back(rla_case("d3", {1, 3, 5, 2}));
    ops.push_back(std::move(r));
  }
  {
    // Key count derives from the token count so every case stays valid.
    RegisteredOp s;
    s.op.name = "sma";
    auto m_of = [](const Tensor& x) { return std::max(1, (x.shape.h * x.shape.w) / 3); };
    s.op.forward = [m_of](const Tensor& x, std::span<const Tensor>) { return sma(x, m_of(x)); };
    s.op.vjp = [m_of](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
      return BlockGrads{sma_vjp(x, m_of(x), gy), {}};
    };
    s.cases.push_back(input_only_case("1x2x3x3", {1, 2, 3, 3}));
    s.cases.push_back(input_only_case("2x4x2x4", {2, 4, 2, 4}));
    s.cases.push_back(input_only_case("1x3x4x4", {1, 3, 4, 4}));
    ops.push_back(std::move(s));
  }
  {
    RegisteredOp s;
    s.op.name = "sga";
    auto k_of = [](const Tensor& x) { return std::max(1, (x.shape.h * x.shape.w) / 4); };
    s.op.forward = [k_of](const Tensor& x, std::span<const Tensor>) { return sga(x, k_of(x)); };
    s.op.vjp = [k_of](const Tensor& x, std::span<const Tensor>, const Tensor& gy) {
      return BlockGrads{sga_vjp(x, k_of(x), gy), {}};
    };
    s.cases.push_back(input_only_case("1x2x3x3", {1, 2, 3, 3}));
    s.cases.push_back(input_only_case("2x4x2x4", {2, 4, 2, 4}));
    s.cases.push_back(input_only_case("1x3x4x4", {1, 3, 4, 4}));
    ops.push_back(std::move(s));
  }
  {
    RegisteredOp l;
    l.op.name = "lwga_apply";
    auto cfg_of = [](const Tensor& x) {
      LwgaConfig cfg;
      cfg.channels = x.shape.c;
      cfg.sma_samples = std::max(1, (x.shape.h * x.shape.w) / 3);
      cfg.sga_k = std::max(1, (x.shape.h * x.shape.w) / 4);
      return cfg;
    };
    l.op.forward = [cfg_of](const Tensor& x, std::span<const Tensor> params) {
      return lwga_apply(x, cfg_of(x), params);
    };
    l.op.vjp = [cfg_of](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return lwga_apply_vjp(x, cfg_of(x), params, gy);
    };
    auto lwga_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params = sample_params(lwga_param_shapes(in.c), rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    l.cases.push_back(lwga_case("c8", {1, 8, 3, 3}));
    l.cases.push_back(lwga_case("c4", {2, 4, 4, 2}));
    l.cases.push_back(lwga_case("c12", {1, 12, 2, 5}));
    ops.push_back(std::move(l));
  }
  {
    RegisteredOp s;
    s.op.name = "sru";
    auto cfg_of = [](const Tensor& x) {
      SruConfig cfg;
      cfg.channels = x.shape.c;
      cfg.gn_groups = 2;
      return cfg;
    };
    s.op.forward = [cfg_of](const Tensor& x, std::span<const Tensor> params) {
      return sru(x, cfg_of(x), params);
    };
    s.op.vjp = [cfg_of](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return sru_vjp(x, cfg_of(x), params, gy);
    };
    auto sru_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params = sample_params(sru_param_shapes(in.c), rng);
        positivize(params[0], rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    s.cases.push_back(sru_case("c4", {1, 4, 4, 4}));
    s.cases.push_back(sru_case("c8", {2, 8, 3, 3}));
    s.cases.push_back(sru_case("c6", {1, 6, 5, 2}));
    ops.push_back(std::move(s));
  }
  {
    RegisteredOp c;
    c.op.name = "cru";
    auto cfg_of = [](const Tensor& x) {
      CruConfig cfg;
      cfg.channels = x.shape.c;
      return cfg;
    };
    c.op.forward = [cfg_of](const Tensor& x, std::span<const Tensor> params) {
      return cru(x, cfg_of(x), params);
    };
    c.op.vjp = [cfg_of](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return cru_vjp(x, cfg_of(x), params, gy);
    };
    auto cru_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        CruConfig cfg;
        cfg.channels = in.c;
        auto params = sample_params(cru_param_shapes(cfg), rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    c.cases.push_back(cru_case("c8", {1, 8, 4, 4}));
    c.cases.push_back(cru_case("c16", {2, 16, 3, 3}));
    c.cases.push_back(cru_case("c24", {1, 24, 2, 4}));
    ops.push_back(std::move(c));
  }
  {
    RegisteredOp sc;
    sc.op.name = "scconv_apply";
    auto cfgs_of = [](const Tensor& x) {
      SruConfig su;
      su.channels = x.shape.c;
      su.gn_groups = 4;
      CruConfig cu;
      cu.channels = x.shape.c;
      return std::make_pair(su, cu);
    };
    sc.op.forward = [cfgs_of](const Tensor& x, std::span<const Tensor> params) {
      auto [su, cu] = cfgs_of(x);
      return scconv_apply(x, su, cu, params);
    };
    sc.op.vjp = [cfgs_of](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      auto [su, cu] = cfgs_of(x);
      return scconv_apply_vjp(x, su, cu, params, gy);
    };
    auto sc_case = [](std::string label, Shape4 in) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        auto params = sample_params(scconv_param_shapes(in.c), rng);
        positivize(params[0], rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    sc.cases.push_back(sc_case("c8_5x5", {1, 8, 5, 5}));
    sc.cases.push_back(sc_case("c16", {1, 16, 3, 3}));
    sc.cases.push_back(sc_case("c8_batch", {2, 8, 4, 2}));
    ops.push_back(std::move(sc));
  }
  {
    RegisteredOp c;
    c.op.name = "caa_apply";
    auto cfg_of = [](const Tensor& x, std::span<const Tensor> params) {
      CaaConfig cfg;
      cfg.channels = x.shape.c;
      cfg.pool_k = 7;
      cfg.strip_k = params[2].shape.w;
      return cfg;
    };
    c.op.forward = [cfg_of](const Tensor& x, std::span<const Tensor> params) {
      return caa_apply(x, cfg_of(x, params), params);
    };
    c.op.vjp = [cfg_of](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
      return caa_apply_vjp(x, cfg_of(x, params), params, gy);
    };
    auto caa_case = [](std::string label, Shape4 in, int strip_k) {
      return shape_case(std::move(label), [=](SplitMix64& rng) {
        Tensor x = random_tensor(in, rng);
        CaaConfig cfg;
        cfg.channels = in.c;
        cfg.strip_k = strip_k;
        auto params = sample_params(caa_param_shapes(cfg), rng);
        return std::make_pair(std::move(x), std::move(params));
      });
    };
    c.cases.push_back(caa_case("c8_8x8_k11", {1, 8, 8, 8}, 11));
    c.cases.push_back(caa_case("c4_5x5_k5", {1, 4, 5, 5}, 5));
    c.cases.push_back(caa_case("c2_6x4_k3", {2, 2, 6, 4}, 3));
    ops.push_back(std::move(c));
  }
  return ops;
}

}  // namespace wsa
