#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "test_util.hpp"
#include "wsa/conv.hpp"
#include "wsa/reference.hpp"

using namespace wsa;

TEST_CASE("all-ones 3x3 input and kernel, pad 1: center 9, corners 4") {
  Tensor x(Shape4{1, 1, 3, 3}, std::vector<double>(9, 1.0));
  ConvSpec spec = make_conv_spec<double>(1, 1, 3, 3, 1, 1, 1, 1, 1, false);
  for (double& w : spec.weights.data) w = 1.0;
  Tensor y = conv2d(x, spec);
  REQUIRE(y.shape == Shape4{1, 1, 3, 3});
  CHECK(y.at(0, 0, 1, 1) == doctest::Approx(9.0));
  CHECK(y.at(0, 0, 0, 0) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 0, 2) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 2, 0) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 2, 2) == doctest::Approx(4.0));
  CHECK(y.at(0, 0, 0, 1) == doctest::Approx(6.0));
}

TEST_CASE("depthwise delta kernel reproduces the input bitwise") {
  Tensor x = test::rand_tensor({2, 3, 5, 4}, 11);
  ConvSpec spec = make_conv_spec<double>(3, 3, 3, 3, 1, 1, 1, 1, 3, false);
  for (int c = 0; c < 3; ++c) spec.weights.at(c, 0, 1, 1) = 1.0;
  Tensor y = conv2d(x, spec);
  CHECK(y.data == x.data);
}

TEST_CASE("random case matches the six-nested-loop oracle within 1e-12") {
  SplitMix64 rng(42);
  Tensor x = random_tensor({2, 3, 5, 5}, rng);
  ConvSpec spec = make_conv_spec<double>(3, 4, 3, 3, 1, 1, 1, 1, 1, true);
  fill_uniform(spec.weights, rng, -1.0, 1.0);
  for (auto& b : *spec.bias) b = rng.next_uniform(-1.0, 1.0);
  Tensor y = conv2d(x, spec);
  Tensor expect = ref::conv2d(x, spec);
  CHECK(max_abs_diff(y, expect) < 1e-12);
}

TEST_CASE("oracle sweep: N,C<=4, H,W<=8, k in {1,3}, groups in {1,C}") {
  SplitMix64 rng(7);
  for (int npos : {1, 2, 4}) {
    for (int c : {1, 2, 4}) {
      for (int hw : {3, 5, 8}) {
        for (int k : {1, 3}) {
          for (bool grouped : {false, true}) {
            const int groups = grouped ? c : 1;
            const int pad = k / 2;
            Tensor x = random_tensor({npos, c, hw, hw}, rng);
            ConvSpec spec = make_conv_spec<double>(c, c, k, k, 1, 1, pad, pad, groups, true);
            fill_uniform(spec.weights, rng, -1.0, 1.0);
            for (auto& b : *spec.bias) b = rng.next_uniform(-1.0, 1.0);
            CHECK(max_abs_diff(conv2d(x, spec), ref::conv2d(x, spec)) < 1e-12);
          }
        }
      }
    }
  }
}

TEST_CASE("strided and grouped case against the oracle") {
  SplitMix64 rng(13);
  Tensor x = random_tensor({1, 4, 8, 8}, rng);
  ConvSpec spec = make_conv_spec<double>(4, 6, 2, 2, 2, 2, 0, 0, 2, true);
  fill_uniform(spec.weights, rng, -1.0, 1.0);
  for (auto& b : *spec.bias) b = rng.next_uniform(-1.0, 1.0);
  Tensor y = conv2d(x, spec);
  REQUIRE(y.shape == Shape4{1, 6, 4, 4});
  CHECK(max_abs_diff(y, ref::conv2d(x, spec)) < 1e-12);
}

TEST_CASE("shape violations raise ValidationError") {
  Tensor x(Shape4{1, 3, 5, 5});
  // Wrong channel count.
  ConvSpec spec = make_conv_spec<double>(4, 4, 3, 3, 1, 1, 1, 1, 1);
  CHECK_THROWS_AS(conv2d(x, spec), ValidationError);
  // Non-divisible groups.
  CHECK_THROWS_AS(make_conv_spec<double>(3, 4, 3, 3, 1, 1, 1, 1, 2), ValidationError);
  // Kernel larger than padded input.
  ConvSpec big = make_conv_spec<double>(3, 3, 7, 7, 1, 1, 0, 0, 1);
  CHECK_THROWS_AS(conv2d(x, big), ValidationError);
  // Non-integral output extent.
  ConvSpec stride = make_conv_spec<double>(3, 3, 2, 2, 2, 2, 0, 0, 1);
  CHECK_THROWS_AS(conv2d(Tensor(Shape4{1, 3, 5, 5}), stride), ValidationError);
}

TEST_CASE("conv MAC counter: 1x1 conv 8->8 on 8x4x4 gives 1024") {
  ConvSpec spec = make_conv_spec<double>(8, 8, 1, 1, 1, 1, 0, 0, 1, true);
  CHECK(conv_macs(spec, Shape4{1, 8, 4, 4}) == 1024);
  CHECK(spec.param_count() == 64 + 8);
}

TEST_CASE("32-bit forward is bit-identical across runs and thread counts") {
  SplitMix64 rng(5);
  TensorF x(Shape4{2, 4, 8, 8});
  fill_uniform(x, rng, -1.0, 1.0);
  ConvSpecF spec = make_conv_spec<float>(4, 4, 3, 3, 1, 1, 1, 1, 1, true);
  fill_uniform(spec.weights, rng, -1.0, 1.0);

  TensorF a = conv2d(x, spec);
  TensorF b = conv2d(x, spec);
  CHECK(a.data == b.data);

#ifdef _OPENMP
  // Each output element is owned by one thread with a fixed inner summation
  // order, so the thread count must not change a single bit.
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  TensorF serial = conv2d(x, spec);
  omp_set_num_threads(saved);
  CHECK(serial.data == a.data);
#endif

  // Same parameter stream from the same seed, twice.
  SplitMix64 r1(77), r2(77);
  ConvSpecF s1 = make_conv_spec<float>(4, 4, 3, 3, 1, 1, 1, 1, 1, true);
  ConvSpecF s2 = make_conv_spec<float>(4, 4, 3, 3, 1, 1, 1, 1, 1, true);
  fill_uniform(s1.weights, r1, -1.0, 1.0);
  fill_uniform(s2.weights, r2, -1.0, 1.0);
  CHECK(s1.weights.data == s2.weights.data);
}

TEST_CASE("kernels are safe under data-parallel invocation over independent inputs") {
  SplitMix64 rng(31);
  ConvSpec spec = make_conv_spec<double>(4, 4, 3, 3, 1, 1, 1, 1, 1, true);
  fill_uniform(spec.weights, rng, -0.5, 0.5);

  std::vector<Tensor> inputs;
  std::vector<Tensor> expected;
  for (int i = 0; i < 8; ++i) {
    inputs.push_back(random_tensor({1, 4, 10, 10}, rng));
    expected.push_back(conv2d(inputs.back(), spec));
  }

  std::vector<Tensor> results(8);
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int i = t; i < 8; i += 4) results[i] = conv2d(inputs[i], spec);
    });
  }
  for (auto& w : workers) w.join();
  for (int i = 0; i < 8; ++i) CHECK(results[i].data == expected[i].data);
}

TEST_CASE("conv2d_vjp matches loop-oracle gradients on a tiny case") {
  // d<u, conv(x)>/dx and /dw recomputed by perturbation-free direct sums:
  // for a linear map the VJP columns are exactly the forward coefficients.
  SplitMix64 rng(21);
  Tensor x = random_tensor({1, 2, 3, 3}, rng);
  ConvSpec spec = make_conv_spec<double>(2, 2, 3, 3, 1, 1, 1, 1, 1, true);
  fill_uniform(spec.weights, rng, -1.0, 1.0);
  Tensor gy = random_tensor({1, 2, 3, 3}, rng);

  ConvGrads grads = conv2d_vjp(x, spec, gy);

  // Oracle: perturb each input coordinate by 1 and measure the change in
  // <gy, conv2d(x)> (exact for a linear operation).
  for (int c = 0; c < 2; ++c) {
    for (int h = 0; h < 3; ++h) {
      for (int w = 0; w < 3; ++w) {
        Tensor xp = x;
        xp.at(0, c, h, w) += 1.0;
        const double expect = dot(ref::conv2d(xp, spec).data, gy.data) -
                              dot(ref::conv2d(x, spec).data, gy.data);
        CHECK(grads.gx.at(0, c, h, w) == doctest::Approx(expect).epsilon(1e-9));
      }
    }
  }
  // Same for one weight coordinate and the bias.
  ConvSpec sp = spec;
  sp.weights.at(1, 0, 2, 2) += 1.0;
  const double dw = dot(ref::conv2d(x, sp).data, gy.data) - dot(ref::conv2d(x, spec).data, gy.data);
  CHECK(grads.gw.at(1, 0, 2, 2) == doctest::Approx(dw).epsilon(1e-9));

  ConvSpec sb = spec;
  (*sb.bias)[0] += 1.0;
  const double db = dot(ref::conv2d(x, sb).data, gy.data) - dot(ref::conv2d(x, spec).data, gy.data);
  CHECK(grads.gb[0] == doctest::Approx(db).epsilon(1e-9));
}
