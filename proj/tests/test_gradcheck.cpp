#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "test_util.hpp"
#include "wsa/conv.hpp"
#include "wsa/gradcheck.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"

using namespace wsa;

namespace {

DiffOp conv3x3_op() {
  DiffOp op;
  op.name = "conv3x3";
  op.forward = [](const Tensor& x, std::span<const Tensor> params) {
    return conv2d(x, conv_spec_from(params[0], &params[1], 1, 1, 1, 1, 1));
  };
  op.vjp = [](const Tensor& x, std::span<const Tensor> params, const Tensor& gy) {
    ConvGrads g = conv2d_vjp(x, conv_spec_from(params[0], &params[1], 1, 1, 1, 1, 1), gy);
    BlockGrads out;
    out.gx = std::move(g.gx);
    out.gparams.resize(2);
    out.gparams[0] = std::move(g.gw);
    out.gparams[1] = Tensor(Shape4{1, params[1].shape.c, 1, 1}, std::move(g.gb));
    return out;
  };
  return op;
}

}  // namespace

TEST_CASE("linear op: conv gradient check error is at noise level") {
  SplitMix64 rng(1);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  std::vector<Tensor> params = {random_tensor({3, 2, 3, 3}, rng), random_tensor({1, 3, 1, 1}, rng)};
  const double err = finite_diff_check(conv3x3_op(), x, params, 99);
  CHECK(err <= 1e-9);
}

TEST_CASE("group_norm on random 1x4x3x3 passes at 1e-4") {
  DiffOp op;
  op.name = "gn";
  op.forward = [](const Tensor& x, std::span<const Tensor> p) {
    return group_norm<double>(x, 2, p[0].data, p[1].data, 1e-5);
  };
  op.vjp = [](const Tensor& x, std::span<const Tensor> p, const Tensor& gy) {
    GroupNormGrads g = group_norm_vjp(x, 2, p[0].data, p[1].data, 1e-5, gy);
    BlockGrads out;
    out.gx = std::move(g.gx);
    out.gparams.resize(2);
    out.gparams[0] = Tensor(Shape4{1, x.shape.c, 1, 1}, std::move(g.ggamma));
    out.gparams[1] = Tensor(Shape4{1, x.shape.c, 1, 1}, std::move(g.gbeta));
    return out;
  };
  SplitMix64 rng(2);
  Tensor x = random_tensor({1, 4, 3, 3}, rng, -2.0, 2.0);
  std::vector<Tensor> params = {random_tensor({1, 4, 1, 1}, rng, 0.5, 1.5),
                                random_tensor({1, 4, 1, 1}, rng, -0.5, 0.5)};
  CHECK(finite_diff_check(op, x, params, 7) <= 1e-4);
}

TEST_CASE("sign-flipped backward is caught with error >= 0.5") {
  SplitMix64 rng(3);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  std::vector<Tensor> params = {random_tensor({2, 2, 3, 3}, rng), random_tensor({1, 2, 1, 1}, rng)};
  const double err = finite_diff_check(with_flipped_vjp(conv3x3_op()), x, params, 11);
  CHECK(err >= 0.5);
}

TEST_CASE("an op without a VJP is rejected") {
  DiffOp op;
  op.name = "broken";
  op.forward = [](const Tensor& x, std::span<const Tensor>) { return x; };
  Tensor x(Shape4{1, 1, 2, 2});
  CHECK_THROWS_AS(finite_diff_check(op, x, {}, 0), ValidationError);
}

TEST_CASE("empty registry is an error") {
  CHECK_THROWS_AS(gradcheck_suite({}, 0), ValidationError);
}

TEST_CASE("full default registry passes at 1e-4") {
  const auto registry = default_op_registry();
  REQUIRE(!registry.empty());
  GradcheckReport report = gradcheck_suite(registry, 12345);
  for (const auto& r : report.results) {
    INFO(r.op, "/", r.label, " err=", r.max_rel_err);
    CHECK(r.pass);
  }
  CHECK(report.all_pass);
  // Every op contributes at least three shapes.
  for (const auto& reg : registry) {
    CHECK(reg.cases.size() >= 3);
  }
}

TEST_CASE("injected sign error fails exactly the tampered op") {
  auto registry = default_op_registry();
  // Flip the backward pass of faster_block only.
  for (auto& reg : registry) {
    if (reg.op.name == "faster_block") reg.op = with_flipped_vjp(reg.op);
  }
  GradcheckReport report = gradcheck_suite(registry, 777);
  for (const auto& r : report.results) {
    if (r.op == "faster_block_flipped") {
      CHECK_FALSE(r.pass);
    } else {
      CHECK(r.pass);
    }
  }
}

TEST_CASE("report serializes to JSON") {
  std::vector<RegisteredOp> registry;
  RegisteredOp reg;
  reg.op = conv3x3_op();
  reg.cases.push_back(GradcheckCase{"tiny", [](SplitMix64& rng) {
    Tensor x = random_tensor({1, 1, 3, 3}, rng);
    std::vector<Tensor> params = {random_tensor({1, 1, 3, 3}, rng),
                                  random_tensor({1, 1, 1, 1}, rng)};
    return std::make_pair(std::move(x), std::move(params));
  }});
  registry.push_back(std::move(reg));
  GradcheckReport report = gradcheck_suite(registry, 1);
  const std::string json = gradcheck_report_json(report);
  CHECK(json.find("\"all_pass\"") != std::string::npos);
  CHECK(json.find("conv3x3") != std::string::npos);
}
