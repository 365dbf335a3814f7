#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "wsa/wavefield.hpp"

using namespace wsa;

namespace {

TargetAnnotation basic_target() {
  TargetAnnotation t;
  t.x0_m = 2.375;
  t.depth_m = 0.6;
  t.eps_r = 9.0;
  t.amplitude = 1.0;
  t.beta_np_per_m = 0.0;
  t.label = "cavity";
  return t;
}

SynthesisSpec clean_spec() {
  SynthesisSpec spec;
  spec.targets = {basic_target()};
  return spec;
}

// Test-side span oracle: columns whose travel time lies inside the window.
std::vector<int> span_oracle(const BScan& b, const TargetAnnotation& tgt) {
  std::vector<int> span;
  for (int j = 0; j < b.x_traces; ++j) {
    const double t = hyperbola_travel_time(j * b.dx_m, tgt);
    const double idx = (t - b.t0_ns) / b.dt_ns;
    if (idx >= 0.0 && idx <= b.t_samples - 1) span.push_back(j);
  }
  return span;
}

void zero_band_column(BScan& b, const TargetAnnotation& tgt, int j) {
  const double idx = (hyperbola_travel_time(j * b.dx_m, tgt) - b.t0_ns) / b.dt_ns;
  const int lo = std::max(0, static_cast<int>(std::ceil(idx - 3)));
  const int hi = std::min(b.t_samples - 1, static_cast<int>(std::floor(idx + 3)));
  for (int i = lo; i <= hi; ++i) b.at(i, j) = 0.0;
}

// A scan whose arc band holds |band_value| and whose background holds
// |bg_value|; cells in the 3..10-sample buffer share the background value.
BScan two_level_scan(const TargetAnnotation& tgt, double band_value, double bg_value) {
  BScan b(160, 96, 0.25, 0.05, 0.0);
  for (int j = 0; j < 96; ++j) {
    const double idx = (hyperbola_travel_time(j * b.dx_m, tgt) - b.t0_ns) / b.dt_ns;
    for (int i = 0; i < 160; ++i) {
      b.at(i, j) = std::fabs(i - idx) <= 3.0 ? band_value : bg_value;
    }
  }
  return b;
}

}  // namespace

TEST_CASE("ricker: peak, closed-form zeros, even symmetry") {
  CHECK(ricker(0.0, 0.7) == 1.0);
  const double fc = 0.5;
  const double root = 1.0 / (std::sqrt(2.0) * 3.14159265358979323846 * fc);
  CHECK(ricker(root, fc) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ricker(-root, fc) == doctest::Approx(0.0).epsilon(1e-12));
  for (double t : {0.3, 1.1, 2.7}) {
    CHECK(ricker(t, fc) == doctest::Approx(ricker(-t, fc)).epsilon(1e-15));
  }
  CHECK_THROWS_AS(ricker(0.0, 0.0), ValidationError);
}

TEST_CASE("hyperbola travel time: apex and 5-12-13 closed forms") {
  TargetAnnotation tgt;
  tgt.x0_m = 3.0;
  tgt.depth_m = 0.5;
  tgt.eps_r = 9.0;  // v = 0.1 m/ns
  CHECK(hyperbola_travel_time(3.0, tgt) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(hyperbola_travel_time(3.0 + 1.2, tgt) == doctest::Approx(26.0).epsilon(1e-12));
  CHECK(hyperbola_travel_time(3.0 - 1.2, tgt) == doctest::Approx(26.0).epsilon(1e-12));
  for (double delta : {0.1, 0.7, 1.9}) {
    CHECK(hyperbola_travel_time(3.0 + delta, tgt) ==
          doctest::Approx(hyperbola_travel_time(3.0 - delta, tgt)).epsilon(1e-14));
  }
}

TEST_CASE("synthesize rejects degenerate inputs") {
  SynthesisSpec empty;
  empty.scr_target_db = -5.0;
  CHECK_THROWS_AS(synthesize_bscan(empty, 1), ValidationError);

  SynthesisSpec outside = clean_spec();
  outside.targets[0].depth_m = 10.0;  // apex beyond the window
  CHECK_THROWS_AS(synthesize_bscan(outside, 1), ValidationError);

  SynthesisSpec deep = clean_spec();
  deep.continuity_target = 2.0;
  CHECK_THROWS_AS(synthesize_bscan(deep, 1), ValidationError);
}

TEST_CASE("noise-free reference: continuity 1.0 and contrast near 1") {
  SynthesisResult result = synthesize_bscan(clean_spec(), 7);
  const TargetAnnotation tgt = basic_target();
  CHECK(measure_continuity(result.bscan, tgt) == 1.0);
  CHECK(measure_contrast(result.bscan, tgt) > 0.99);
  CHECK(result.ground_truth.size() == 1);
  CHECK_FALSE(result.ground_truth[0].is_weak);
}

TEST_CASE("generator closed loop: requested -5 dB SCR is measured back within 0.5") {
  SynthesisSpec spec = clean_spec();
  spec.scr_target_db = -5.0;
  SynthesisResult result = synthesize_bscan(spec, 11);
  const double measured = measure_scr(result.bscan, spec.targets[0]);
  CHECK(std::fabs(measured + 5.0) <= 0.5);
  // The ground-truth record carries the prescribed value; -5 sits exactly on
  // the strict threshold so the flag stays off.
  CHECK(result.ground_truth[0].scr_db == -5.0);
  CHECK_FALSE(result.ground_truth[0].clutter_dominance);
}

TEST_CASE("generator closed loop: continuity target is hit within 0.05") {
  SynthesisSpec spec = clean_spec();
  spec.continuity_target = 0.55;
  SynthesisResult result = synthesize_bscan(spec, 13);
  const double measured = measure_continuity(result.bscan, spec.targets[0]);
  CHECK(std::fabs(measured - 0.55) <= 0.05);
}

TEST_CASE("generator is deterministic in the seed") {
  SynthesisSpec spec = clean_spec();
  spec.scr_target_db = -2.0;
  spec.continuity_target = 0.7;
  SynthesisResult a = synthesize_bscan(spec, 99);
  SynthesisResult b = synthesize_bscan(spec, 99);
  CHECK(a.bscan.samples == b.bscan.samples);
  SynthesisResult c = synthesize_bscan(spec, 100);
  CHECK(a.bscan.samples != c.bscan.samples);
}

TEST_CASE("measure_contrast: symmetric, clean and boundary cases") {
  const TargetAnnotation tgt = basic_target();
  // A_sig == A_bg over a constant field.
  BScan flat = two_level_scan(tgt, 0.4, 0.4);
  CHECK(measure_contrast(flat, tgt) == doctest::Approx(0.0).epsilon(1e-12));

  // A_bg = 0 with signal present.
  BScan clean = two_level_scan(tgt, 0.7, 0.0);
  CHECK(measure_contrast(clean, tgt) == doctest::Approx(1.0).epsilon(1e-12));

  // A_sig 0.6 vs A_bg 0.4: exactly the 0.2 threshold boundary.
  BScan boundary = two_level_scan(tgt, 0.6, 0.4);
  CHECK(measure_contrast(boundary, tgt) == doctest::Approx(0.2).epsilon(1e-12));

  // All-zero scan: defined as 0, not NaN.
  BScan silent = two_level_scan(tgt, 0.0, 0.0);
  CHECK(measure_contrast(silent, tgt) == 0.0);

  // Arc fully outside the grid.
  TargetAnnotation far = tgt;
  far.depth_m = 30.0;
  CHECK_THROWS_AS(measure_contrast(flat, far), ValidationError);
}

TEST_CASE("measure_scr: log identities and sentinels") {
  const TargetAnnotation tgt = basic_target();
  // Band mean square 2x the background: corrected E_sig equals E_clut.
  BScan zero_db = two_level_scan(tgt, std::sqrt(2.0), 1.0);
  CHECK(measure_scr(zero_db, tgt) == doctest::Approx(0.0).epsilon(1e-9));

  // Corrected E_sig = 10 E_clut.
  BScan ten_db = two_level_scan(tgt, std::sqrt(11.0), 1.0);
  CHECK(measure_scr(ten_db, tgt) == doctest::Approx(10.0).epsilon(1e-9));

  // Silent background: +inf sentinel, not an error.
  BScan silent_bg = two_level_scan(tgt, 1.0, 0.0);
  CHECK(std::isinf(measure_scr(silent_bg, tgt)));
  CHECK(measure_scr(silent_bg, tgt) > 0.0);

  // Band at the background level: -inf sentinel.
  BScan buried = two_level_scan(tgt, 1.0, 1.0);
  CHECK(measure_scr(buried, tgt) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("measure_continuity: clean arc, exact 40% fragmentation, silence") {
  const TargetAnnotation tgt = basic_target();
  SynthesisResult clean = synthesize_bscan(clean_spec(), 5);
  CHECK(measure_continuity(clean.bscan, tgt) == 1.0);

  // Find a geometry whose span divides by 5, then zero exactly 40% of it.
  BScan scan = clean.bscan;
  std::vector<int> span = span_oracle(scan, tgt);
  if (span.size() % 5 != 0) {
    for (int x_traces : {90, 91, 92, 93, 94, 95, 97, 98, 99, 100}) {
      SynthesisSpec spec = clean_spec();
      spec.x_traces = x_traces;
      spec.targets[0].x0_m = (x_traces - 1) * spec.dx_m / 2.0;
      SynthesisResult r = synthesize_bscan(spec, 5);
      span = span_oracle(r.bscan, spec.targets[0]);
      if (span.size() % 5 == 0) {
        scan = r.bscan;
        const TargetAnnotation centered = spec.targets[0];
        const std::size_t k = span.size() * 2 / 5;
        // Zero runs from the left edge of the span, keeping the apex alive.
        for (std::size_t i = 0; i < k; ++i) zero_band_column(scan, centered, span[i]);
        CHECK(measure_continuity(scan, centered) == doctest::Approx(0.6).epsilon(1e-12));
        break;
      }
    }
  } else {
    const std::size_t k = span.size() * 2 / 5;
    for (std::size_t i = 0; i < k; ++i) zero_band_column(scan, tgt, span[i]);
    CHECK(measure_continuity(scan, tgt) == doctest::Approx(0.6).epsilon(1e-12));
  }

  // Fully zeroed arc.
  BScan dead = clean.bscan;
  for (int j : span_oracle(dead, tgt)) zero_band_column(dead, tgt, j);
  CHECK(measure_continuity(dead, tgt) == 0.0);
}

TEST_CASE("measure_dissipation: lossless, threshold boundary, linear in depth") {
  TargetAnnotation tgt = basic_target();
  tgt.beta_np_per_m = 0.0;
  CHECK(measure_dissipation(tgt) == 0.0);

  tgt.beta_np_per_m = 1.1513;
  tgt.depth_m = 2.0;
  CHECK(measure_dissipation(tgt) == doctest::Approx(40.0).epsilon(1e-3));

  TargetAnnotation twice = tgt;
  twice.depth_m = 4.0;
  CHECK(measure_dissipation(twice) == doctest::Approx(2.0 * measure_dissipation(tgt)).epsilon(1e-12));
}

TEST_CASE("classifier: flags fire exactly per the section thresholds") {
  // All criteria passing.
  WeakSignalReport strong = classify_weak_signal(0.5, 3.0, 0.9, 10.0, 0.8);
  CHECK_FALSE(strong.is_weak);
  CHECK_FALSE(strong.low_contrast);
  CHECK_FALSE(strong.clutter_dominance);
  CHECK_FALSE(strong.geometric_atrophy);
  CHECK_FALSE(strong.deep_attenuated);

  // SCR -6 dB alone.
  WeakSignalReport clutter = classify_weak_signal(0.5, -6.0, 0.9, 10.0, 0.8);
  CHECK(clutter.is_weak);
  CHECK(clutter.clutter_dominance);
  CHECK_FALSE(clutter.low_contrast);
  CHECK_FALSE(clutter.geometric_atrophy);
  CHECK_FALSE(clutter.deep_attenuated);

  // Depth 1.6 m with 41 dB dissipation.
  WeakSignalReport deep = classify_weak_signal(0.5, 3.0, 0.9, 41.0, 1.6);
  CHECK(deep.is_weak);
  CHECK(deep.deep_attenuated);
  CHECK_FALSE(deep.clutter_dominance);

  // Deep but weakly attenuated, and vice versa: the AND criterion stays off.
  CHECK_FALSE(classify_weak_signal(0.5, 3.0, 0.9, 39.0, 1.6).deep_attenuated);
  CHECK_FALSE(classify_weak_signal(0.5, 3.0, 0.9, 41.0, 1.4).deep_attenuated);

  // Boundary values are strict inequalities.
  CHECK_FALSE(classify_weak_signal(0.2, -5.0, 0.6, 40.0, 1.5).is_weak);
}

TEST_CASE("criteria thresholds hold their pinned values") {
  CHECK(weak_signal::kContrastThreshold == 0.2);
  CHECK(weak_signal::kScrThresholdDb == -5.0);
  CHECK(weak_signal::kContinuityThreshold == 0.6);
  CHECK(weak_signal::kDepthThresholdM == 1.5);
  CHECK(weak_signal::kDissipationThresholdDb == 40.0);
}

TEST_CASE("contrast stays in [-1, 1] on arbitrary scans") {
  const TargetAnnotation tgt = basic_target();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    BScan b(160, 96, 0.25, 0.05, 0.0);
    SplitMix64 rng(seed);
    for (double& v : b.samples) v = rng.next_uniform(-5.0, 5.0);
    const double c = measure_contrast(b, tgt);
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
  }
}

TEST_CASE("background masking honors every annotated arc") {
  // Two targets: the second arc pollutes the first target's background
  // unless the full annotation list is passed.
  TargetAnnotation a = basic_target();
  TargetAnnotation b = basic_target();
  b.x0_m = 1.2;
  b.depth_m = 1.1;

  SynthesisSpec spec = clean_spec();
  spec.targets = {a, b};
  spec.t_samples = 200;
  SynthesisResult r = synthesize_bscan(spec, 3);

  const std::span<const TargetAnnotation> all(spec.targets);
  const double masked = measure_contrast(r.bscan, a, all);
  const double unmasked = measure_contrast(r.bscan, a);
  // With the second arc excluded from the background, the background mean
  // drops and the contrast rises.
  CHECK(masked > unmasked);
  CHECK(measure_scr(r.bscan, a, all) > measure_scr(r.bscan, a));

  // Both per-target ground truth reports are emitted.
  CHECK(r.ground_truth.size() == 2);
}

TEST_CASE("multi-target synthesis tunes every arc's continuity") {
  TargetAnnotation a = basic_target();
  TargetAnnotation b = basic_target();
  b.x0_m = 1.4;
  b.depth_m = 0.9;

  SynthesisSpec spec = clean_spec();
  spec.targets = {a, b};
  spec.t_samples = 200;
  spec.continuity_target = 0.6;
  SynthesisResult r = synthesize_bscan(spec, 9);
  CHECK(std::fabs(measure_continuity(r.bscan, a) - 0.6) <= 0.05);
  CHECK(std::fabs(measure_continuity(r.bscan, b) - 0.6) <= 0.05);
}

TEST_CASE("measurements are deterministic functions of the scan") {
  SynthesisSpec spec = clean_spec();
  spec.scr_target_db = -3.0;
  SynthesisResult r = synthesize_bscan(spec, 21);
  const TargetAnnotation tgt = spec.targets[0];
  CHECK(measure_contrast(r.bscan, tgt) == measure_contrast(r.bscan, tgt));
  CHECK(measure_scr(r.bscan, tgt) == measure_scr(r.bscan, tgt));
  CHECK(measure_continuity(r.bscan, tgt) == measure_continuity(r.bscan, tgt));
  const double c = measure_contrast(r.bscan, tgt);
  CHECK(c >= -1.0);
  CHECK(c <= 1.0);
}
