#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wsa/conv.hpp"
#include "wsa/lwga.hpp"
#include "wsa/ops.hpp"
#include "wsa/pconv.hpp"
#include "wsa/reference.hpp"

using namespace wsa;

namespace {

std::vector<Tensor> sampled(const std::vector<Shape4>& shapes, std::uint64_t seed,
                            double lo = -0.8, double hi = 0.8) {
  SplitMix64 rng(seed);
  std::vector<Tensor> out;
  for (const Shape4& s : shapes) out.push_back(random_tensor(s, rng, lo, hi));
  return out;
}

// Dense self-attention plus residual over all tokens of a channel-quarter
// tensor; the degeneracy oracle for sma(M=N) and sga(K=N).
Tensor dense_attention_residual(const Tensor& xg) {
  const int d = xg.shape.c;
  const int hw = xg.shape.h * xg.shape.w;
  Tensor y(xg.shape);
  for (int n = 0; n < xg.shape.n; ++n) {
    std::vector<double> tokens(static_cast<std::size_t>(hw) * d);
    for (int c = 0; c < d; ++c)
      for (int p = 0; p < hw; ++p)
        tokens[static_cast<std::size_t>(p) * d + c] =
            xg.data[(static_cast<std::size_t>(n) * d + c) * hw + p];
    auto out = ref::scaled_dot_attention(tokens, tokens, tokens, hw, hw, d);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tokens[i];
    for (int c = 0; c < d; ++c)
      for (int p = 0; p < hw; ++p)
        y.data[(static_cast<std::size_t>(n) * d + c) * hw + p] =
            out[static_cast<std::size_t>(p) * d + c];
  }
  return y;
}

}  // namespace

TEST_CASE("gpa with zero gate conv halves the input") {
  Tensor x = test::rand_tensor({1, 4, 5, 5}, 1);
  std::vector<Tensor> params;
  for (const Shape4& s : gpa_param_shapes(4)) params.emplace_back(s);
  Tensor y = gpa(x, params);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(y.data[i] == doctest::Approx(0.5 * x.data[i]).epsilon(1e-15));
  }
}

TEST_CASE("gpa output never exceeds the input in magnitude") {
  Tensor x = test::rand_tensor({2, 4, 4, 4}, 2);
  auto params = sampled(gpa_param_shapes(4), 3);
  Tensor y = gpa(x, params);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(std::fabs(y.data[i]) <= std::fabs(x.data[i]));
  }
}

TEST_CASE("gpa matches the composition of verified primitives") {
  Tensor x = test::rand_tensor({1, 3, 4, 4}, 4);
  auto params = sampled(gpa_param_shapes(3), 5);
  Tensor y = gpa(x, params);

  const ConvSpec spec = conv_spec_from(params[0], &params[1], 1, 1, 0, 0, 1);
  Tensor gate = ref::conv2d(x, spec);
  for (std::size_t i = 0; i < gate.data.size(); ++i) {
    const double g = 1.0 / (1.0 + std::exp(-gate.data[i]));
    CHECK(y.data[i] == doctest::Approx(g * x.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("rla with zero weights is the identity") {
  Tensor x = test::rand_tensor({1, 4, 5, 5}, 6);
  std::vector<Tensor> params;
  for (const Shape4& s : rla_param_shapes(4)) params.emplace_back(s);
  CHECK(rla(x, params).data == x.data);
}

TEST_CASE("rla preserves shape on 1x4x9x9") {
  Tensor x = test::rand_tensor({1, 4, 9, 9}, 7);
  auto params = sampled(rla_param_shapes(4), 8);
  Tensor y = rla(x, params);
  CHECK(y.shape == x.shape);
  CHECK(y.all_finite());
}

TEST_CASE("rla receptive field is 3x3: impulse response is Chebyshev-local") {
  Tensor x = test::rand_tensor({1, 2, 9, 9}, 9);
  auto params = sampled(rla_param_shapes(2), 10);
  Tensor base = rla(x, params);

  Tensor xp = x;
  xp.at(0, 1, 4, 4) += 0.37;
  Tensor bumped = rla(xp, params);
  for (int c = 0; c < 2; ++c) {
    for (int h = 0; h < 9; ++h) {
      for (int w = 0; w < 9; ++w) {
        const int radius = std::max(std::abs(h - 4), std::abs(w - 4));
        if (radius > 1) {
          CHECK(bumped.at(0, c, h, w) == base.at(0, c, h, w));
        }
      }
    }
  }
}

TEST_CASE("sma with full sampling equals dense attention plus residual") {
  Tensor x = test::rand_tensor({2, 4, 3, 3}, 11);
  Tensor y = sma(x, 9);
  Tensor expect = dense_attention_residual(x);
  CHECK(max_abs_diff(y, expect) < 1e-12);
}

TEST_CASE("sma with M=1 adds the single sampled token everywhere") {
  Tensor x = test::rand_tensor({1, 3, 2, 2}, 12);
  Tensor y = sma(x, 1);
  // Sampled key is token 0; softmax over one key gives weight 1.
  for (int c = 0; c < 3; ++c) {
    const double v0 = x.at(0, c, 0, 0);
    for (int h = 0; h < 2; ++h)
      for (int w = 0; w < 2; ++w) {
        CHECK(y.at(0, c, h, w) == doctest::Approx(x.at(0, c, h, w) + v0).epsilon(1e-12));
      }
  }
}

TEST_CASE("sma sampling grid is the documented row-major stride") {
  auto idx = sma_sample_indices(12, 4);
  CHECK(idx == std::vector<int>{0, 3, 6, 9});
  auto all = sma_sample_indices(6, 6);
  CHECK(all == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(sma_sample_indices(4, 5), ValidationError);
}

TEST_CASE("sma MACs are linear in token count at fixed M") {
  LwgaConfig cfg;
  cfg.channels = 8;
  cfg.sma_samples = 4;
  cfg.sga_k = 2;
  const std::int64_t m1 = lwga_attention_macs(Shape4{1, 8, 4, 4}, cfg);   // 16 tokens
  const std::int64_t m2 = lwga_attention_macs(Shape4{1, 8, 8, 4}, cfg);   // 32 tokens
  CHECK(m2 == 2 * m1);
  // 2*N*M*d + 2*N*K*d with d = 2.
  CHECK(m1 == 2 * 16 * 4 * 2 + 2 * 16 * 2 * 2);
}

TEST_CASE("sga with K=N equals dense attention plus residual") {
  Tensor x = test::rand_tensor({1, 4, 4, 4}, 13);
  Tensor y = sga(x, 16);
  Tensor expect = dense_attention_residual(x);
  CHECK(max_abs_diff(y, expect) < 1e-12);
}

TEST_CASE("sga with K=1 attends to the max-norm token only") {
  Tensor x = test::rand_tensor({1, 4, 3, 3}, 14);
  // Make token (1,2) clearly dominant.
  for (int c = 0; c < 4; ++c) x.at(0, c, 1, 2) = 3.0 + c;
  Tensor y = sga(x, 1);
  for (int c = 0; c < 4; ++c) {
    const double vstar = x.at(0, c, 1, 2);
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 3; ++w) {
        CHECK(y.at(0, c, h, w) == doctest::Approx(x.at(0, c, h, w) + vstar).epsilon(1e-12));
      }
  }
}

TEST_CASE("sga matches a brute-force oracle on 1x4x3x3") {
  Tensor x = test::rand_tensor({1, 4, 3, 3}, 15);
  const int K = 4;
  Tensor y = sga(x, K);

  // Brute force: explicit norms, explicit sort, dense attention over the
  // selected tokens.
  const int d = 4, hw = 9;
  std::vector<double> tokens(hw * d);
  for (int c = 0; c < d; ++c)
    for (int p = 0; p < hw; ++p) tokens[p * d + c] = x.data[c * hw + p];
  std::vector<double> norms(hw);
  for (int p = 0; p < hw; ++p) {
    double sq = 0.0;
    for (int c = 0; c < d; ++c) sq += tokens[p * d + c] * tokens[p * d + c];
    norms[p] = std::sqrt(sq);
  }
  auto idx = ref::top_k(norms, K);
  std::vector<double> keys(static_cast<std::size_t>(K) * d);
  for (int i = 0; i < K; ++i)
    for (int c = 0; c < d; ++c) keys[i * d + c] = tokens[idx[i] * d + c];
  auto out = ref::scaled_dot_attention(tokens, keys, keys, hw, K, d);
  for (int p = 0; p < hw; ++p)
    for (int c = 0; c < d; ++c) {
      CHECK(y.data[c * hw + p] ==
            doctest::Approx(out[p * d + c] + tokens[p * d + c]).epsilon(1e-12));
    }
}

TEST_CASE("lwga fusion weights: equal raw alphas give 0.25 each") {
  const double raw[] = {0.7, 0.7, 0.7, 0.7};
  auto ahat = softmax(std::span<const double>(raw, 4));
  for (double a : ahat) CHECK(a == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("lwga_apply preserves shape and finiteness") {
  Tensor x = test::rand_tensor({2, 8, 4, 4}, 16);
  LwgaConfig cfg = LwgaConfig::make_default(8, 4, 4);
  auto params = sampled(lwga_param_shapes(8), 17);
  Tensor y = lwga_apply(x, cfg, params);
  CHECK(y.shape == x.shape);
  CHECK(y.all_finite());

  Tensor odd(Shape4{1, 6, 4, 4});
  CHECK_THROWS_AS(lwga_apply(odd, cfg, params), ValidationError);
}

TEST_CASE("one-hot alpha suppresses the other quarters entering the mix") {
  Tensor x = test::rand_tensor({1, 8, 3, 3}, 18);
  LwgaConfig cfg;
  cfg.channels = 8;
  cfg.sma_samples = 9;
  cfg.sga_k = 9;
  auto params = sampled(lwga_param_shapes(8), 19);
  // Huge raw alpha on branch 0; identity mix so quarters stay separated.
  params[0] = Tensor(Shape4{1, 4, 1, 1}, {40.0, 0.0, 0.0, 0.0});
  params[7] = Tensor(Shape4{8, 8, 1, 1});
  for (int c = 0; c < 8; ++c) params[7].at(c, c, 0, 0) = 1.0;
  params[8] = Tensor(Shape4{1, 8, 1, 1});

  Tensor y = lwga_apply(x, cfg, params);
  // Quarters 1..3 of the mixed output are the scaled branch outputs; their
  // magnitude is bounded by softmax weight e^-40 times the branch output.
  for (int c = 2; c < 8; ++c) {
    for (int h = 0; h < 3; ++h)
      for (int w = 0; w < 3; ++w) CHECK(std::fabs(y.at(0, c, h, w)) < 1e-10);
  }
}

TEST_CASE("channel-quarter disjointness with identity mix") {
  LwgaConfig cfg;
  cfg.channels = 8;
  cfg.sma_samples = 4;
  cfg.sga_k = 3;
  auto params = sampled(lwga_param_shapes(8), 20);
  params[7] = Tensor(Shape4{8, 8, 1, 1});
  for (int c = 0; c < 8; ++c) params[7].at(c, c, 0, 0) = 1.0;
  params[8] = Tensor(Shape4{1, 8, 1, 1});

  Tensor x = test::rand_tensor({1, 8, 3, 3}, 21);
  Tensor base = lwga_apply(x, cfg, params);

  // Perturb quarter 1 (channels 2..3): only output channels 2..3 may change.
  Tensor xp = x;
  xp.at(0, 2, 1, 1) += 0.5;
  xp.at(0, 3, 0, 2) -= 0.25;
  Tensor bumped = lwga_apply(xp, cfg, params);
  for (int c = 0; c < 8; ++c) {
    const bool in_quarter = (c >= 2 && c < 4);
    for (int h = 0; h < 3; ++h) {
      for (int w = 0; w < 3; ++w) {
        if (!in_quarter) CHECK(bumped.at(0, c, h, w) == base.at(0, c, h, w));
      }
    }
  }
}

TEST_CASE("attention MAC totals fit a line in N: zero quadratic residual") {
  LwgaConfig cfg;
  cfg.channels = 16;
  cfg.sma_samples = 16;
  cfg.sga_k = 16;
  // Token counts 64, 256, 1024 via 8x8, 16x16, 32x32.
  const std::int64_t n1 = 64, n2 = 256, n3 = 1024;
  const std::int64_t m1 = lwga_attention_macs(Shape4{1, 16, 8, 8}, cfg);
  const std::int64_t m2 = lwga_attention_macs(Shape4{1, 16, 16, 16}, cfg);
  const std::int64_t m3 = lwga_attention_macs(Shape4{1, 16, 32, 32}, cfg);
  // Second divided difference of an exact line is zero (integer arithmetic).
  const std::int64_t d1 = (m2 - m1) * (n3 - n2);
  const std::int64_t d2 = (m3 - m2) * (n2 - n1);
  CHECK(d1 == d2);
  // And the line passes through the origin: MACs = a*N exactly.
  CHECK(m1 * n2 == m2 * n1);
  CHECK(m1 * n3 == m3 * n1);
}

TEST_CASE("lwga has fewer parameters than a dense attention block of equal width") {
  for (int c : {8, 16, 64, 320}) {
    std::int64_t total = 0;
    for (const Shape4& s : lwga_param_shapes(c)) total += s.numel();
    CHECK(total < dense_attention_param_count(c));
  }
}
