#ifndef WSA_SCCONV_HPP
#define WSA_SCCONV_HPP

#include <optional>
#include <span>
#include <vector>

#include "wsa/gradcheck.hpp"
#include "wsa/tensor.hpp"

namespace wsa {

// Spatial reconstruction unit. Group-norm responses, weighted per channel by
// gamma_c / sum(gamma), drive a gate separating informative from redundant
// content; channel halves of the two parts are cross-recombined.
struct SruConfig {
  int channels = 0;
  int gn_groups = 4;
  double gate_scale = 1.0;
  bool hard_gate = false;  // g = [soft gate > 0.5]; gradient treats the gate as constant
  std::optional<Tensor> gate_override;  // testing hook: bypass the learned gate entirely

  void validate() const;
};

// params: [0] GN gamma (1, C, 1, 1), [1] GN beta (1, C, 1, 1)
std::vector<Shape4> sru_param_shapes(int channels);

Tensor sru(const Tensor& x, const SruConfig& cfg, std::span<const Tensor> params);
BlockGrads sru_vjp(const Tensor& x, const SruConfig& cfg, std::span<const Tensor> params,
                   const Tensor& gy);

// Per-channel importance weights gamma_c / sum(gamma).
std::vector<double> sru_importance(std::span<const double> gamma);

// Channel reconstruction unit: split channels alpha*C / (1-alpha)*C, squeeze
// both, transform (group-wise 3x3 plus pointwise on the upper path, pointwise
// plus pass-through on the lower), then fuse with per-channel softmax weights
// from global average pooling.
struct CruConfig {
  int channels = 0;
  double split_ratio = 0.5;
  int squeeze_ratio = 2;
  int gwc_groups = 2;

  void validate() const;
  int upper_channels() const;
  int upper_squeezed() const;
  int lower_channels() const { return channels - upper_channels(); }
  int lower_squeezed() const;
};

// params:
//   [0] upper squeeze (cu, up, 1, 1)   [1] bias (1, cu, 1, 1)
//   [2] group-wise 3x3 (C, cu/groups, 3, 3)  [3] bias (1, C, 1, 1)
//   [4] upper pointwise (C, cu, 1, 1)  [5] bias (1, C, 1, 1)
//   [6] lower squeeze (cl, low, 1, 1)  [7] bias (1, cl, 1, 1)
//   [8] lower pointwise (C - cl, cl, 1, 1)  [9] bias (1, C - cl, 1, 1)
std::vector<Shape4> cru_param_shapes(const CruConfig& cfg);

Tensor cru(const Tensor& x, const CruConfig& cfg, std::span<const Tensor> params);
BlockGrads cru_vjp(const Tensor& x, const CruConfig& cfg, std::span<const Tensor> params,
                   const Tensor& gy);

// scconv = cru(sru(x)); parameters are the SRU list followed by the CRU list.
std::vector<Shape4> scconv_param_shapes(int channels);

Tensor scconv_apply(const Tensor& x, const SruConfig& sru_cfg, const CruConfig& cru_cfg,
                    std::span<const Tensor> params);
BlockGrads scconv_apply_vjp(const Tensor& x, const SruConfig& sru_cfg, const CruConfig& cru_cfg,
                            std::span<const Tensor> params, const Tensor& gy);

}  // namespace wsa

#endif  // WSA_SCCONV_HPP
