#include "wsa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

#include "wsa/conv.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"

namespace wsa {

using nlohmann::json;

BackboneConfig BackboneConfig::toy() {
  BackboneConfig cfg;
  cfg.stage_widths = {8, 16, 32, 64};
  cfg.stage_depths = {1, 1, 2, 1};
  return cfg;
}

void BackboneConfig::validate() const {
  if (in_channels < 1) throw ValidationError("backbone: in_channels must be positive");
  for (int i = 0; i < 4; ++i) {
    if (stage_widths[i] < 4 || stage_widths[i] % 4 != 0) {
      throw ValidationError("backbone: stage widths must be positive multiples of 4");
    }
    if (stage_depths[i] < 1) throw ValidationError("backbone: stage depths must be >= 1");
  }
  for (int i = 0; i < 3; ++i) {
    if (stage_widths[i + 1] != 2 * stage_widths[i]) {
      throw ValidationError("backbone: stage widths must double between stages");
    }
  }
}

std::string layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kFasterBlock: return "faster_block";
    case LayerKind::kCaa: return "caa";
    case LayerKind::kScconv: return "scconv";
    case LayerKind::kLwga: return "lwga";
    case LayerKind::kUpsample: return "upsample";
    case LayerKind::kConcat: return "concat";
  }
  throw ValidationError("unknown layer kind");
}

namespace {

LayerKind kind_from_name(const std::string& name) {
  for (LayerKind k : {LayerKind::kConv, LayerKind::kFasterBlock, LayerKind::kCaa,
                      LayerKind::kScconv, LayerKind::kLwga, LayerKind::kUpsample,
                      LayerKind::kConcat}) {
    if (layer_kind_name(k) == name) return k;
  }
  throw ValidationError("unknown layer kind '" + name + "'");
}

SruConfig graph_sru_cfg(int channels) {
  SruConfig cfg;
  cfg.channels = channels;
  cfg.gn_groups = 4;
  return cfg;
}

CruConfig graph_cru_cfg(int channels) {
  CruConfig cfg;
  cfg.channels = channels;
  return cfg;
}

std::int64_t conv_cfg_macs(const ConvLayerCfg& c, int out_h, int out_w) {
  return static_cast<std::int64_t>(c.out_ch) * (c.in_ch / c.groups) * c.kh * c.kw * out_h * out_w;
}

Shape4 conv_cfg_out_shape(const ConvLayerCfg& c, const Shape4& in) {
  if (in.c != c.in_ch) {
    throw ValidationError("conv layer: input has " + std::to_string(in.c) +
                          " channels, expected " + std::to_string(c.in_ch));
  }
  const int num_h = in.h + 2 * c.ph - c.kh;
  const int num_w = in.w + 2 * c.pw - c.kw;
  if (num_h < 0 || num_w < 0 || num_h % c.sh != 0 || num_w % c.sw != 0) {
    throw ValidationError("conv layer: non-integral or negative output extent");
  }
  return Shape4{in.n, c.out_ch, num_h / c.sh + 1, num_w / c.sw + 1};
}

ConvSpec conv_spec_of(const LayerRecord& layer) {
  return conv_spec_from(layer.params[0], &layer.params[1], layer.conv.sh, layer.conv.sw,
                        layer.conv.ph, layer.conv.pw, layer.conv.groups);
}

int add_layer(LayerGraph& g, LayerRecord layer) {
  for (const Shape4& s : layer_param_shapes(layer)) layer.params.emplace_back(s);
  g.layers.push_back(std::move(layer));
  return static_cast<int>(g.layers.size()) - 1;
}

int add_conv(LayerGraph& g, std::string name, int input, int in_ch, int out_ch, int k, int s,
             int p) {
  LayerRecord layer;
  layer.name = std::move(name);
  layer.kind = LayerKind::kConv;
  layer.inputs = {input};
  layer.conv = ConvLayerCfg{in_ch, out_ch, k, k, s, s, p, p, 1};
  return add_layer(g, std::move(layer));
}

int add_faster(LayerGraph& g, std::string name, int input, int width) {
  LayerRecord layer;
  layer.name = std::move(name);
  layer.kind = LayerKind::kFasterBlock;
  layer.inputs = {input};
  layer.width = width;
  return add_layer(g, std::move(layer));
}

}  // namespace

std::vector<Shape4> layer_param_shapes(const LayerRecord& layer) {
  switch (layer.kind) {
    case LayerKind::kConv:
      return {Shape4{layer.conv.out_ch, layer.conv.in_ch / layer.conv.groups, layer.conv.kh,
                     layer.conv.kw},
              Shape4{1, layer.conv.out_ch, 1, 1}};
    case LayerKind::kFasterBlock:
      return faster_block_param_shapes(layer.width);
    case LayerKind::kCaa:
      return caa_param_shapes(layer.caa);
    case LayerKind::kScconv:
      return scconv_param_shapes(layer.width);
    case LayerKind::kLwga:
      return lwga_param_shapes(layer.lwga.channels);
    case LayerKind::kUpsample:
    case LayerKind::kConcat:
      return {};
  }
  throw ValidationError("unknown layer kind");
}

std::vector<ParamRole> layer_param_roles(const LayerRecord& layer) {
  using R = ParamRole;
  switch (layer.kind) {
    case LayerKind::kConv:
      return {R::kWeight, R::kBias};
    case LayerKind::kFasterBlock:
      return {R::kWeight, R::kBias, R::kWeight, R::kBias,
              R::kGamma,  R::kBeta, R::kWeight, R::kBias};
    case LayerKind::kCaa:
      return {R::kWeight, R::kBias, R::kWeight, R::kBias,
              R::kWeight, R::kBias, R::kWeight, R::kBias};
    case LayerKind::kScconv:
      return {R::kGamma,  R::kBeta, R::kWeight, R::kBias, R::kWeight, R::kBias,
              R::kWeight, R::kBias, R::kWeight, R::kBias, R::kWeight, R::kBias};
    case LayerKind::kLwga:
      return {R::kAlpha,  R::kWeight, R::kBias, R::kWeight, R::kBias,
              R::kWeight, R::kBias,   R::kWeight, R::kBias};
    case LayerKind::kUpsample:
    case LayerKind::kConcat:
      return {};
  }
  throw ValidationError("unknown layer kind");
}

void init_graph_params(LayerGraph& graph, std::uint64_t seed) {
  graph.seed = seed;
  SplitMix64 rng(seed);
  for (LayerRecord& layer : graph.layers) {
    const auto roles = layer_param_roles(layer);
    for (std::size_t i = 0; i < layer.params.size(); ++i) {
      Tensor& t = layer.params[i];
      switch (roles[i]) {
        case ParamRole::kWeight: {
          const double fan_in =
              static_cast<double>(t.shape.c) * t.shape.h * t.shape.w;
          const double bound = std::sqrt(6.0 / fan_in);
          fill_uniform(t, rng, -bound, bound);
          break;
        }
        case ParamRole::kGamma:
          std::fill(t.data.begin(), t.data.end(), 1.0);
          break;
        case ParamRole::kBias:
        case ParamRole::kBeta:
        case ParamRole::kAlpha:
          std::fill(t.data.begin(), t.data.end(), 0.0);
          break;
      }
    }
  }
}

LayerGraph build_backbone(const BackboneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  LayerGraph g;
  g.input_channels = cfg.in_channels;
  int cur = add_conv(g, "embed", -1, cfg.in_channels, cfg.stage_widths[0], 4, 4, 0);
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < cfg.stage_depths[stage]; ++b) {
      cur = add_faster(g, "s" + std::to_string(stage + 1) + ".b" + std::to_string(b), cur,
                       cfg.stage_widths[stage]);
    }
    g.stage_taps[stage] = cur;
    if (stage < 3) {
      cur = add_conv(g, "merge" + std::to_string(stage + 1), cur, cfg.stage_widths[stage],
                     cfg.stage_widths[stage + 1], 2, 2, 0);
    }
  }
  init_graph_params(g, seed);
  return g;
}

LayerGraph assemble_wsa_graph(const ModelConfig& cfg) {
  cfg.backbone.validate();
  const Shape4 ref = cfg.reference_input;
  if (ref.h % 32 != 0 || ref.w % 32 != 0 || ref.h < 32 || ref.w < 32) {
    throw ValidationError("model: reference input H and W must be positive multiples of 32");
  }
  if (cfg.head_channels < 1) throw ValidationError("model: head_channels must be positive");

  LayerGraph g = build_backbone(cfg.backbone, cfg.seed);
  g.layers.reserve(g.layers.size() + 24);

  // Level l in {0,1,2} maps to P3/P4/P5; widths follow the tapped stages.
  const std::array<int, 3> level_width{cfg.backbone.stage_widths[1], cfg.backbone.stage_widths[2],
                                       cfg.backbone.stage_widths[3]};
  const std::array<int, 3> level_stride{8, 16, 32};
  auto tokens_at = [&](int level) {
    return (ref.h / level_stride[level]) * (ref.w / level_stride[level]);
  };
  auto lwga_cfg_at = [&](int level) {
    LwgaConfig l;
    l.channels = level_width[level];
    const int n_tokens = tokens_at(level);
    l.sma_samples = cfg.lwga_sma_samples > 0 ? cfg.lwga_sma_samples : std::min(64, n_tokens);
    l.sga_k = cfg.lwga_sga_k > 0 ? cfg.lwga_sga_k : std::min(64, (n_tokens + 3) / 4);
    const int side = 1;  // validate against the reference token count
    l.validate(side, n_tokens);
    return l;
  };

  auto add_level_tail = [&](const std::string& prefix, int from, int level) {
    int cur = from;
    if (cfg.use_scconv) {
      LayerRecord sc;
      sc.name = prefix + ".scconv";
      sc.kind = LayerKind::kScconv;
      sc.inputs = {cur};
      sc.width = level_width[level];
      graph_sru_cfg(sc.width).validate();
      graph_cru_cfg(sc.width).validate();
      cur = add_layer(g, std::move(sc));
    }
    if (cfg.use_lwga) {
      LayerRecord lw;
      lw.name = prefix + ".lwga";
      lw.kind = LayerKind::kLwga;
      lw.inputs = {cur};
      lw.width = level_width[level];
      lw.lwga = lwga_cfg_at(level);
      cur = add_layer(g, std::move(lw));
    }
    return cur;
  };

  // P5 level: optional CAA anchor at the terminal backbone stage.
  int n5 = g.stage_taps[3];
  if (cfg.use_caa) {
    LayerRecord caa;
    caa.name = "p5.caa";
    caa.kind = LayerKind::kCaa;
    caa.inputs = {n5};
    caa.width = level_width[2];
    caa.caa = CaaConfig{level_width[2], cfg.caa_pool_k, cfg.caa_strip_k};
    caa.caa.validate();
    n5 = add_layer(g, std::move(caa));
  }
  n5 = add_level_tail("p5", n5, 2);
  const int head5 = add_conv(g, "p5.head", n5, level_width[2], cfg.head_channels, 1, 1, 0);

  // Top-down: upsample, concat with the tap, reduce to the tapped width.
  auto add_fused_level = [&](const std::string& prefix, int above, int tap, int level) {
    LayerRecord up;
    up.name = prefix + ".up";
    up.kind = LayerKind::kUpsample;
    up.inputs = {above};
    const int up_id = add_layer(g, std::move(up));

    LayerRecord cat;
    cat.name = prefix + ".cat";
    cat.kind = LayerKind::kConcat;
    cat.inputs = {up_id, tap};
    const int cat_id = add_layer(g, std::move(cat));

    const int cat_ch = level_width[level + 1] + level_width[level];
    const int red =
        add_conv(g, prefix + ".reduce", cat_id, cat_ch, level_width[level], 1, 1, 0);
    return add_level_tail(prefix, red, level);
  };

  const int n4 = add_fused_level("p4", n5, g.stage_taps[2], 1);
  const int head4 = add_conv(g, "p4.head", n4, level_width[1], cfg.head_channels, 1, 1, 0);
  const int n3 = add_fused_level("p3", n4, g.stage_taps[1], 0);
  const int head3 = add_conv(g, "p3.head", n3, level_width[0], cfg.head_channels, 1, 1, 0);

  g.outputs = {head3, head4, head5};
  init_graph_params(g, cfg.seed);
  resolve_shapes(g, ref);
  return g;
}

std::vector<Shape4> resolve_shapes(const LayerGraph& graph, const Shape4& input) {
  if (input.c != graph.input_channels) {
    throw ValidationError("graph: input has " + std::to_string(input.c) +
                          " channels, graph expects " + std::to_string(graph.input_channels));
  }
  std::vector<Shape4> shapes(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerRecord& layer = graph.layers[i];
    std::vector<Shape4> in;
    for (int src : layer.inputs) {
      if (src < -1 || src >= static_cast<int>(i)) {
        throw ValidationError("graph: layer '" + layer.name + "' has a forward reference");
      }
      in.push_back(src == -1 ? input : shapes[src]);
    }
    switch (layer.kind) {
      case LayerKind::kConv:
        shapes[i] = conv_cfg_out_shape(layer.conv, in[0]);
        break;
      case LayerKind::kFasterBlock:
        if (in[0].c != layer.width) {
          throw ValidationError("graph: faster block '" + layer.name + "' width mismatch");
        }
        shapes[i] = in[0];
        break;
      case LayerKind::kCaa:
        if (in[0].c != layer.caa.channels) {
          throw ValidationError("graph: caa '" + layer.name + "' channel mismatch");
        }
        shapes[i] = in[0];
        break;
      case LayerKind::kScconv:
        if (in[0].c != layer.width) {
          throw ValidationError("graph: scconv '" + layer.name + "' channel mismatch");
        }
        shapes[i] = in[0];
        break;
      case LayerKind::kLwga:
        layer.lwga.validate(in[0].h, in[0].w);
        if (in[0].c != layer.lwga.channels) {
          throw ValidationError("graph: lwga '" + layer.name + "' channel mismatch");
        }
        shapes[i] = in[0];
        break;
      case LayerKind::kUpsample:
        shapes[i] = Shape4{in[0].n, in[0].c, in[0].h * 2, in[0].w * 2};
        break;
      case LayerKind::kConcat:
        if (in[0].n != in[1].n || in[0].h != in[1].h || in[0].w != in[1].w) {
          throw ValidationError("graph: concat '" + layer.name + "' N/H/W mismatch: " +
                                in[0].str() + " vs " + in[1].str());
        }
        shapes[i] = Shape4{in[0].n, in[0].c + in[1].c, in[0].h, in[0].w};
        break;
    }
  }
  return shapes;
}

namespace {

Tensor layer_forward(const LayerRecord& layer, std::span<const Tensor> in) {
  switch (layer.kind) {
    case LayerKind::kConv:
      return conv2d(in[0], conv_spec_of(layer));
    case LayerKind::kFasterBlock:
      return faster_block(in[0], layer.params);
    case LayerKind::kCaa:
      return caa_apply(in[0], layer.caa, layer.params);
    case LayerKind::kScconv:
      return scconv_apply(in[0], graph_sru_cfg(layer.width), graph_cru_cfg(layer.width),
                          layer.params);
    case LayerKind::kLwga:
      return lwga_apply(in[0], layer.lwga, layer.params);
    case LayerKind::kUpsample:
      return upsample_nearest2x(in[0]);
    case LayerKind::kConcat:
      return tensor_concat(in[0], in[1]);
  }
  throw ValidationError("unknown layer kind");
}

LayerStats stats_of(const std::string& name, const Tensor& t) {
  LayerStats s;
  s.name = name;
  if (t.data.empty()) return s;
  s.min = t.data[0];
  s.max = t.data[0];
  double sum = 0.0, sq = 0.0;
  for (double v : t.data) {
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
    sq += v * v;
  }
  s.mean = sum / static_cast<double>(t.data.size());
  s.l2 = std::sqrt(sq);
  return s;
}

std::vector<Tensor> run_layers(const LayerGraph& graph, const Tensor& x,
                               std::vector<LayerStats>* stats) {
  resolve_shapes(graph, x.shape);
  std::vector<Tensor> outs(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerRecord& layer = graph.layers[i];
    std::vector<Tensor> in;
    for (int src : layer.inputs) in.push_back(src == -1 ? x : outs[src]);
    outs[i] = layer_forward(layer, in);
    if (stats) stats->push_back(stats_of(layer.name, outs[i]));
  }
  return outs;
}

}  // namespace

ForwardResult forward_features(const LayerGraph& graph, const Tensor& x) {
  ForwardResult result;
  std::vector<Tensor> outs = run_layers(graph, x, &result.stats);
  for (int id : graph.outputs) result.level_outputs.push_back(outs[id]);
  return result;
}

std::vector<Tensor> forward_taps(const LayerGraph& graph, const Tensor& x) {
  std::vector<Tensor> outs = run_layers(graph, x, nullptr);
  std::vector<Tensor> taps;
  for (int id : graph.stage_taps) {
    if (id < 0) throw ValidationError("graph: backbone taps not set");
    taps.push_back(outs[id]);
  }
  return taps;
}

CostReport cost_of(const LayerGraph& graph, const Shape4& input) {
  const std::vector<Shape4> shapes = resolve_shapes(graph, input);
  CostReport report;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerRecord& layer = graph.layers[i];
    const Shape4 out = shapes[i];

    LayerCost cost;
    cost.name = layer.name;
    cost.kind = layer_kind_name(layer.kind);
    cost.out_shape = out;
    for (const Tensor& p : layer.params) cost.params += p.numel();

    const std::int64_t hw = static_cast<std::int64_t>(out.h) * out.w;
    switch (layer.kind) {
      case LayerKind::kConv:
        cost.macs = conv_cfg_macs(layer.conv, out.h, out.w);
        break;
      case LayerKind::kFasterBlock: {
        const int w = layer.width, c = w / 4;
        cost.macs = static_cast<std::int64_t>(c) * c * 9 * hw        // pconv
                    + static_cast<std::int64_t>(2 * w) * w * hw      // PW1
                    + static_cast<std::int64_t>(w) * 2 * w * hw;     // PW2
        break;
      }
      case LayerKind::kCaa: {
        const int C = layer.caa.channels, k = layer.caa.strip_k;
        cost.macs = 2 * static_cast<std::int64_t>(C) * C * hw        // pw1 + pw2
                    + 2 * static_cast<std::int64_t>(C) * k * hw;     // strip pair
        break;
      }
      case LayerKind::kScconv: {
        const CruConfig cru = graph_cru_cfg(layer.width);
        const int C = layer.width;
        const std::int64_t cu = cru.upper_squeezed(), cl = cru.lower_squeezed();
        cost.macs = cu * cru.upper_channels() * hw                       // upper squeeze
                    + static_cast<std::int64_t>(C) * (cu / cru.gwc_groups) * 9 * hw  // gwc
                    + static_cast<std::int64_t>(C) * cu * hw             // pwc1
                    + cl * cru.lower_channels() * hw                     // lower squeeze
                    + (C - cl) * cl * hw;                                // pwc2
        break;
      }
      case LayerKind::kLwga: {
        const int C = layer.lwga.channels, d = C / 4;
        cost.macs = static_cast<std::int64_t>(d) * d * hw        // gate pw
                    + static_cast<std::int64_t>(d) * 9 * hw      // rla depthwise
                    + static_cast<std::int64_t>(d) * d * hw      // rla pw
                    + static_cast<std::int64_t>(C) * C * hw      // mix
                    + lwga_attention_macs(out, layer.lwga);
        break;
      }
      case LayerKind::kUpsample:
      case LayerKind::kConcat:
        cost.macs = 0;
        break;
    }
    report.total_params += cost.params;
    report.total_macs += cost.macs;
    report.layers.push_back(std::move(cost));
  }
  return report;
}

std::string cost_report_json(const LayerGraph& graph, const Shape4& input) {
  const CostReport report = cost_of(graph, input);
  json layers = json::array();
  for (const LayerCost& c : report.layers) {
    layers.push_back({{"name", c.name},
                      {"kind", c.kind},
                      {"out_shape", {c.out_shape.n, c.out_shape.c, c.out_shape.h, c.out_shape.w}},
                      {"params", c.params},
                      {"macs", c.macs},
                      {"flops", 2 * c.macs}});
  }

  // PConv against a full conv of the same geometry (r = 1/4, k = 3).
  const Shape4 probe{1, 16, 16, 16};
  PConvSpec pc = PConvSpec::make(16, 4);
  ConvSpec full = make_conv_spec<double>(16, 16, 3, 3, 1, 1, 1, 1, 1, false);
  const double ratio = static_cast<double>(pconv_macs(pc, probe)) /
                       static_cast<double>(conv_macs(full, probe));

  // Attention MAC linearity at fixed M = K = 16, d = 16.
  json linearity = json::array();
  for (int n_tokens : {64, 256, 1024}) {
    const std::int64_t macs = attention_macs(n_tokens, 16, 16) + attention_macs(n_tokens, 16, 16);
    linearity.push_back({{"tokens", n_tokens}, {"attention_macs", macs}});
  }

  // Parameter comparison of each lwga layer against dense attention.
  json lwga_vs_dense = json::array();
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    if (graph.layers[i].kind != LayerKind::kLwga) continue;
    lwga_vs_dense.push_back({{"name", graph.layers[i].name},
                             {"lwga_params", report.layers[i].params},
                             {"dense_attention_params",
                              dense_attention_param_count(graph.layers[i].lwga.channels)}});
  }

  json j = {{"input_shape", {input.n, input.c, input.h, input.w}},
            {"layers", layers},
            {"total_params", report.total_params},
            {"total_macs", report.total_macs},
            {"total_flops", 2 * report.total_macs},
            {"pconv_full_mac_ratio", ratio},
            {"lwga_attention_linearity", linearity},
            {"lwga_vs_dense_attention", lwga_vs_dense}};
  return j.dump(2);
}

std::string graph_to_json(const LayerGraph& graph) {
  json layers = json::array();
  for (const LayerRecord& layer : graph.layers) {
    json jl = {{"name", layer.name},
               {"kind", layer_kind_name(layer.kind)},
               {"inputs", layer.inputs}};
    switch (layer.kind) {
      case LayerKind::kConv:
        jl["conv"] = {{"in_ch", layer.conv.in_ch}, {"out_ch", layer.conv.out_ch},
                      {"kh", layer.conv.kh},       {"kw", layer.conv.kw},
                      {"sh", layer.conv.sh},       {"sw", layer.conv.sw},
                      {"ph", layer.conv.ph},       {"pw", layer.conv.pw},
                      {"groups", layer.conv.groups}};
        break;
      case LayerKind::kFasterBlock:
      case LayerKind::kScconv:
        jl["width"] = layer.width;
        break;
      case LayerKind::kCaa:
        jl["caa"] = {{"channels", layer.caa.channels},
                     {"pool_k", layer.caa.pool_k},
                     {"strip_k", layer.caa.strip_k}};
        break;
      case LayerKind::kLwga:
        jl["lwga"] = {{"channels", layer.lwga.channels},
                      {"sma_samples", layer.lwga.sma_samples},
                      {"sga_k", layer.lwga.sga_k}};
        break;
      default:
        break;
    }
    json params = json::array();
    for (const Tensor& p : layer.params) {
      params.push_back({{"shape", {p.shape.n, p.shape.c, p.shape.h, p.shape.w}},
                        {"data", p.data}});
    }
    jl["params"] = std::move(params);
    layers.push_back(std::move(jl));
  }
  json j = {{"input_channels", graph.input_channels},
            {"seed", graph.seed},
            {"stage_taps", graph.stage_taps},
            {"outputs", graph.outputs},
            {"layers", layers}};
  return j.dump();
}

LayerGraph graph_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("graph json parse failure: ") + e.what());
  }
  LayerGraph graph;
  try {
    graph.input_channels = j.at("input_channels").get<int>();
    graph.seed = j.at("seed").get<std::uint64_t>();
    const auto taps = j.at("stage_taps").get<std::vector<int>>();
    if (taps.size() != 4) throw ValidationError("graph json: stage_taps must have 4 entries");
    std::copy(taps.begin(), taps.end(), graph.stage_taps.begin());
    graph.outputs = j.at("outputs").get<std::vector<int>>();

    for (const json& jl : j.at("layers")) {
      LayerRecord layer;
      layer.name = jl.at("name").get<std::string>();
      layer.kind = kind_from_name(jl.at("kind").get<std::string>());
      layer.inputs = jl.at("inputs").get<std::vector<int>>();
      switch (layer.kind) {
        case LayerKind::kConv: {
          const json& jc = jl.at("conv");
          layer.conv = ConvLayerCfg{jc.at("in_ch").get<int>(),  jc.at("out_ch").get<int>(),
                                    jc.at("kh").get<int>(),     jc.at("kw").get<int>(),
                                    jc.at("sh").get<int>(),     jc.at("sw").get<int>(),
                                    jc.at("ph").get<int>(),     jc.at("pw").get<int>(),
                                    jc.at("groups").get<int>()};
          break;
        }
        case LayerKind::kFasterBlock:
        case LayerKind::kScconv:
          layer.width = jl.at("width").get<int>();
          break;
        case LayerKind::kCaa: {
          const json& jc = jl.at("caa");
          layer.caa = CaaConfig{jc.at("channels").get<int>(), jc.at("pool_k").get<int>(),
                                jc.at("strip_k").get<int>()};
          layer.width = layer.caa.channels;
          break;
        }
        case LayerKind::kLwga: {
          const json& jc = jl.at("lwga");
          layer.lwga.channels = jc.at("channels").get<int>();
          layer.lwga.sma_samples = jc.at("sma_samples").get<int>();
          layer.lwga.sga_k = jc.at("sga_k").get<int>();
          layer.width = layer.lwga.channels;
          break;
        }
        default:
          break;
      }
      const auto expect = layer_param_shapes(layer);
      const json& jp = jl.at("params");
      if (jp.size() != expect.size()) {
        throw ValidationError("graph json: layer '" + layer.name +
                              "' has the wrong parameter count");
      }
      for (std::size_t i = 0; i < expect.size(); ++i) {
        const auto dims = jp[i].at("shape").get<std::vector<int>>();
        if (dims.size() != 4 ||
            !(Shape4{dims[0], dims[1], dims[2], dims[3]} == expect[i])) {
          throw ValidationError("graph json: layer '" + layer.name +
                                "' parameter shape mismatch");
        }
        layer.params.emplace_back(expect[i], jp[i].at("data").get<std::vector<double>>());
      }
      graph.layers.push_back(std::move(layer));
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("graph json structure failure: ") + e.what());
  }
  return graph;
}

std::uint64_t graph_digest(const LayerGraph& graph) {
  const std::string bytes = graph_to_json(graph);
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  return hash;
}

ModelConfig model_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model config parse failure: ") + e.what());
  }
  ModelConfig cfg;
  try {
    if (j.contains("backbone")) {
      const json& jb = j["backbone"];
      if (jb.contains("in_channels")) cfg.backbone.in_channels = jb["in_channels"].get<int>();
      if (jb.contains("stage_widths")) {
        const auto w = jb["stage_widths"].get<std::vector<int>>();
        if (w.size() != 4) throw ValidationError("model config: stage_widths must have 4 entries");
        std::copy(w.begin(), w.end(), cfg.backbone.stage_widths.begin());
      }
      if (jb.contains("stage_depths")) {
        const auto d = jb["stage_depths"].get<std::vector<int>>();
        if (d.size() != 4) throw ValidationError("model config: stage_depths must have 4 entries");
        std::copy(d.begin(), d.end(), cfg.backbone.stage_depths.begin());
      }
    }
    if (j.contains("caa")) {
      if (j["caa"].contains("pool_k")) cfg.caa_pool_k = j["caa"]["pool_k"].get<int>();
      if (j["caa"].contains("strip_k")) cfg.caa_strip_k = j["caa"]["strip_k"].get<int>();
    }
    if (j.contains("lwga")) {
      if (j["lwga"].contains("sma_samples")) {
        cfg.lwga_sma_samples = j["lwga"]["sma_samples"].get<int>();
      }
      if (j["lwga"].contains("sga_k")) cfg.lwga_sga_k = j["lwga"]["sga_k"].get<int>();
    }
    if (j.contains("head_channels")) cfg.head_channels = j["head_channels"].get<int>();
    if (j.contains("use_caa")) cfg.use_caa = j["use_caa"].get<bool>();
    if (j.contains("use_scconv")) cfg.use_scconv = j["use_scconv"].get<bool>();
    if (j.contains("use_lwga")) cfg.use_lwga = j["use_lwga"].get<bool>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("reference_input")) {
      const auto r = j["reference_input"].get<std::vector<int>>();
      if (r.size() != 4) throw ValidationError("model config: reference_input must have 4 dims");
      cfg.reference_input = Shape4{r[0], r[1], r[2], r[3]};
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("model config structure failure: ") + e.what());
  }
  return cfg;
}

std::string model_config_to_json(const ModelConfig& cfg) {
  json j = {
      {"backbone",
       {{"in_channels", cfg.backbone.in_channels},
        {"stage_widths", cfg.backbone.stage_widths},
        {"stage_depths", cfg.backbone.stage_depths}}},
      {"caa", {{"pool_k", cfg.caa_pool_k}, {"strip_k", cfg.caa_strip_k}}},
      {"lwga", {{"sma_samples", cfg.lwga_sma_samples}, {"sga_k", cfg.lwga_sga_k}}},
      {"head_channels", cfg.head_channels},
      {"use_caa", cfg.use_caa},
      {"use_scconv", cfg.use_scconv},
      {"use_lwga", cfg.use_lwga},
      {"seed", cfg.seed},
      {"reference_input",
       {cfg.reference_input.n, cfg.reference_input.c, cfg.reference_input.h,
        cfg.reference_input.w}},
  };
  return j.dump(2);
}

}  // namespace wsa
