#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wsa/caa.hpp"

using namespace wsa;

namespace {

std::vector<Tensor> sampled(const CaaConfig& cfg, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Tensor> out;
  for (const Shape4& s : caa_param_shapes(cfg)) out.push_back(random_tensor(s, rng, -0.6, 0.6));
  return out;
}

}  // namespace

TEST_CASE("caa with zero parameters halves the input") {
  CaaConfig cfg;
  cfg.channels = 4;
  std::vector<Tensor> params;
  for (const Shape4& s : caa_param_shapes(cfg)) params.emplace_back(s);
  Tensor x = test::rand_tensor({1, 4, 8, 8}, 1);
  Tensor y = caa_apply(x, cfg, params);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    CHECK(y.data[i] == doctest::Approx(0.5 * x.data[i]).epsilon(1e-15));
  }
}

TEST_CASE("caa recalibration is strictly dominated: |y| < |x| where x != 0") {
  CaaConfig cfg;
  cfg.channels = 4;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Tensor x = test::rand_tensor({1, 4, 6, 6}, seed + 500, -2.0, 2.0);
    auto params = sampled(cfg, seed);
    Tensor y = caa_apply(x, cfg, params);
    Tensor a = caa_attention_map(x, cfg, params);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      CHECK(a.data[i] > 0.0);
      CHECK(a.data[i] < 1.0);
      if (x.data[i] != 0.0) {
        CHECK(std::fabs(y.data[i]) < std::fabs(x.data[i]));
        CHECK(std::signbit(y.data[i]) == std::signbit(x.data[i]));
      } else {
        CHECK(y.data[i] == 0.0);
      }
    }
  }
}

TEST_CASE("caa preserves shape through every internal stage") {
  CaaConfig cfg;
  cfg.channels = 3;
  auto params = sampled(cfg, 9);
  Tensor x = test::rand_tensor({2, 3, 10, 12}, 10);
  Tensor a = caa_attention_map(x, cfg, params);
  CHECK(a.shape == x.shape);
  Tensor y = caa_apply(x, cfg, params);
  CHECK(y.shape == x.shape);
}

TEST_CASE("caa impulse response stays within Chebyshev radius 13") {
  // pool radius 3 plus two strip radii of 5 each.
  CaaConfig cfg;
  cfg.channels = 2;
  auto params = sampled(cfg, 11);
  Tensor x = test::rand_tensor({1, 2, 30, 30}, 12);
  Tensor base = caa_attention_map(x, cfg, params);

  Tensor xp = x;
  xp.at(0, 0, 15, 15) += 1.0;
  Tensor bumped = caa_attention_map(xp, cfg, params);
  int max_radius = 0;
  for (int c = 0; c < 2; ++c)
    for (int h = 0; h < 30; ++h)
      for (int w = 0; w < 30; ++w) {
        if (bumped.at(0, c, h, w) != base.at(0, c, h, w)) {
          max_radius = std::max(max_radius,
                                std::max(std::abs(h - 15), std::abs(w - 15)));
        }
      }
  CHECK(max_radius <= 13);
  // The pooled center itself must move.
  CHECK(bumped.at(0, 0, 15, 15) != base.at(0, 0, 15, 15));
}

TEST_CASE("strip pair uses 2k weights per channel, not k^2") {
  CaaConfig cfg;
  cfg.channels = 8;
  cfg.strip_k = 11;
  const auto shapes = caa_param_shapes(cfg);
  const std::int64_t strip_weights = shapes[2].numel() + shapes[4].numel();
  CHECK(strip_weights == 8 * 2 * 11);
  CHECK(strip_weights < 8 * 11 * 11);
}

TEST_CASE("caa rejects even kernels and channel mismatch") {
  CaaConfig even;
  even.channels = 4;
  even.strip_k = 10;
  CHECK_THROWS_AS(even.validate(), ValidationError);

  CaaConfig cfg;
  cfg.channels = 4;
  auto params = sampled(cfg, 13);
  Tensor x(Shape4{1, 3, 8, 8});
  CHECK_THROWS_AS(caa_apply(x, cfg, params), ValidationError);
}
