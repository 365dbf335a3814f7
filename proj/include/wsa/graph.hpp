#ifndef WSA_GRAPH_HPP
#define WSA_GRAPH_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wsa/caa.hpp"
#include "wsa/lwga.hpp"
#include "wsa/scconv.hpp"
#include "wsa/tensor.hpp"

namespace wsa {

// Four-stage backbone: a 4x4 stride-4 embedding conv, FasterNet block stages
// and 2x2 stride-2 merging convs. Stage outputs sit at strides 4/8/16/32.
struct BackboneConfig {
  int in_channels = 1;
  std::array<int, 4> stage_widths{40, 80, 160, 320};
  std::array<int, 4> stage_depths{1, 2, 8, 2};

  static BackboneConfig toy();
  void validate() const;
};

struct ModelConfig {
  BackboneConfig backbone;
  int caa_pool_k = 7;
  int caa_strip_k = 11;
  int lwga_sma_samples = 0;  // 0: min(64, tokens) per level
  int lwga_sga_k = 0;        // 0: min(64, ceil(tokens/4)) per level
  int head_channels = 8;     // 4 box terms + 4 defect classes
  bool use_caa = true;
  bool use_scconv = true;
  bool use_lwga = true;
  std::uint64_t seed = 0;
  Shape4 reference_input{1, 1, 64, 64};
};

enum class LayerKind { kConv, kFasterBlock, kCaa, kScconv, kLwga, kUpsample, kConcat };

std::string layer_kind_name(LayerKind kind);

struct ConvLayerCfg {
  int in_ch = 0, out_ch = 0;
  int kh = 1, kw = 1, sh = 1, sw = 1, ph = 0, pw = 0, groups = 1;
};

struct LayerRecord {
  std::string name;
  LayerKind kind = LayerKind::kConv;
  std::vector<int> inputs;  // producing layer ids; -1 is the graph input

  ConvLayerCfg conv;    // kConv
  int width = 0;        // kFasterBlock, kScconv (channels), kCaa, kLwga
  LwgaConfig lwga;      // kLwga
  CaaConfig caa;        // kCaa

  std::vector<Tensor> params;
};

enum class ParamRole { kWeight, kBias, kGamma, kBeta, kAlpha };

std::vector<Shape4> layer_param_shapes(const LayerRecord& layer);
std::vector<ParamRole> layer_param_roles(const LayerRecord& layer);

struct LayerGraph {
  int input_channels = 1;
  std::vector<LayerRecord> layers;
  std::array<int, 4> stage_taps{-1, -1, -1, -1};  // P2..P5 producer ids
  std::vector<int> outputs;                       // head ids, P3/P4/P5 order
  std::uint64_t seed = 0;
};

// Weights are drawn fan-in uniform (+-sqrt(6/fan_in)) from one SplitMix64
// stream in layer order; biases start at 0, GN gammas at 1, betas at 0 and
// fusion alphas at 0.
void init_graph_params(LayerGraph& graph, std::uint64_t seed);

LayerGraph build_backbone(const BackboneConfig& cfg, std::uint64_t seed);
LayerGraph assemble_wsa_graph(const ModelConfig& cfg);

// Static shape inference over the whole graph; throws on any mismatch.
// Returns the output shape of every layer for the given input shape.
std::vector<Shape4> resolve_shapes(const LayerGraph& graph, const Shape4& input);

struct LayerStats {
  std::string name;
  double min = 0.0, max = 0.0, mean = 0.0, l2 = 0.0;
};

struct ForwardResult {
  std::vector<Tensor> level_outputs;  // one per graph output, P3/P4/P5 order
  std::vector<LayerStats> stats;      // one per layer
};

ForwardResult forward_features(const LayerGraph& graph, const Tensor& x);

// Convenience: forward the four backbone taps only (backbone-only graphs).
std::vector<Tensor> forward_taps(const LayerGraph& graph, const Tensor& x);

struct LayerCost {
  std::string name;
  std::string kind;
  Shape4 out_shape;
  std::int64_t params = 0;
  std::int64_t macs = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::int64_t total_params = 0;
  std::int64_t total_macs = 0;
};

// Per-sample MACs: conv layers count out*in/groups*kh*kw*Hout*Wout, the two
// sparse attention branches add 2*N*M*d + 2*N*K*d; everything else is free.
CostReport cost_of(const LayerGraph& graph, const Shape4& input);

// Full cost report with the pconv/full-conv MAC ratio and the attention MAC
// linearity table at token counts {64, 256, 1024}.
std::string cost_report_json(const LayerGraph& graph, const Shape4& input);

std::string graph_to_json(const LayerGraph& graph);
LayerGraph graph_from_json(const std::string& text);

// FNV-1a over the serialized graph, parameters included.
std::uint64_t graph_digest(const LayerGraph& graph);

ModelConfig model_config_from_json(const std::string& text);
std::string model_config_to_json(const ModelConfig& cfg);

}  // namespace wsa

#endif  // WSA_GRAPH_HPP
