#ifndef WSA_REFERENCE_HPP
#define WSA_REFERENCE_HPP

#include <span>
#include <vector>

#include "wsa/conv.hpp"
#include "wsa/tensor.hpp"

// Serial reference kernels. These are deliberately naive transliterations of
// the operation definitions, kept independent of the OpenMP kernels so tests
// can compare the two paths and the benchmark can report speedups.
namespace wsa::ref {

// Direct six-nested-loop grouped cross-correlation.
Tensor conv2d(const Tensor& x, const ConvSpec& spec);

// Whole-group statistics recomputed by direct summation, two passes.
Tensor group_norm(const Tensor& x, int groups, std::span<const double> gamma,
                  std::span<const double> beta, double eps);

Tensor avg_pool2d(const Tensor& x, int kh, int kw, int sh, int sw, int ph, int pw);

// Per-row double loop: explicit scores, explicit normalization, explicit
// weighted sum.
std::vector<double> scaled_dot_attention(std::span<const double> q, std::span<const double> k,
                                         std::span<const double> v, int mq, int mk, int d);

// Exhaustive selection: k passes, each taking the best remaining score with
// the smaller index winning ties.
std::vector<int> top_k(std::span<const double> scores, int k);

std::vector<double> softmax(std::span<const double> x);

}  // namespace wsa::ref

#endif  // WSA_REFERENCE_HPP
