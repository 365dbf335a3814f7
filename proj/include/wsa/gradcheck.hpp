#ifndef WSA_GRADCHECK_HPP
#define WSA_GRADCHECK_HPP

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wsa/tensor.hpp"

namespace wsa {

// Gradients of a block with respect to its input and its flat parameter list.
struct BlockGrads {
  Tensor gx;
  std::vector<Tensor> gparams;
};

// A differentiable operation under test. forward maps (x, params) to y;
// vjp maps an output cotangent back onto x and every parameter tensor.
struct DiffOp {
  std::string name;
  std::function<Tensor(const Tensor&, std::span<const Tensor>)> forward;
  std::function<BlockGrads(const Tensor&, std::span<const Tensor>, const Tensor&)> vjp;
};

// Compares VJP-derived directional derivatives against central differences.
// Per probe, a random output cotangent u and a random direction v over x and
// all params are drawn from the seed; the perturbation of coordinate i is
// h * v_i * max(1, |value_i|) with h = 1e-5. Returns the max over 8 probes of
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const DiffOp& op, const Tensor& x, std::span<const Tensor> params,
                         std::uint64_t seed);

// Same op with a sign-flipped backward pass: a harness self-test fixture.
DiffOp with_flipped_vjp(const DiffOp& op);

// One concrete (input, params) instance for an op.
struct GradcheckCase {
  std::string label;
  std::function<std::pair<Tensor, std::vector<Tensor>>(SplitMix64&)> make;
};

struct RegisteredOp {
  DiffOp op;
  std::vector<GradcheckCase> cases;
};

// Every differentiable op and block in the library, each with at least three
// shapes. Defined in registry.cpp.
std::vector<RegisteredOp> default_op_registry();

struct GradcheckResult {
  std::string op;
  std::string label;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  std::vector<GradcheckResult> results;
  bool all_pass = false;
  double wall_seconds = 0.0;
};

// Runs finite_diff_check over a registry; throws ValidationError on an empty
// registry. Failures are report content, not errors.
GradcheckReport gradcheck_suite(std::span<const RegisteredOp> registry, std::uint64_t seed,
                                double tolerance = 1e-4);

std::string gradcheck_report_json(const GradcheckReport& report);

}  // namespace wsa

#endif  // WSA_GRADCHECK_HPP
