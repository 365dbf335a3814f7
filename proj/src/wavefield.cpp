#include "wsa/wavefield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "wsa/rng.hpp"

namespace wsa {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kScrBisectTolDb = 0.15;
constexpr double kContinuityTol = 0.035;

const std::set<std::string>& known_labels() {
  static const std::set<std::string> labels{"cavity", "void", "loose", "water-rich"};
  return labels;
}

}  // namespace

BScan::BScan(int t, int x, double dt, double dx, double t0)
    : t_samples(t), x_traces(x), dt_ns(dt), dx_m(dx), t0_ns(t0),
      samples(static_cast<std::size_t>(t) * x, 0.0) {
  validate();
}

void BScan::validate() const {
  if (t_samples < 1 || x_traces < 1) {
    throw ValidationError("bscan: grid must have at least one sample and one trace");
  }
  if (!(dt_ns > 0.0) || !(dx_m > 0.0)) {
    throw ValidationError("bscan: dt and dx must be positive");
  }
  if (samples.size() != static_cast<std::size_t>(t_samples) * x_traces) {
    throw ValidationError("bscan: sample count does not match grid dims");
  }
  for (double v : samples) {
    if (!std::isfinite(v)) throw ValidationError("bscan: non-finite sample");
  }
}

void TargetAnnotation::validate() const {
  if (!(depth_m > 0.0)) throw ValidationError("target: depth must be positive");
  if (!(eps_r >= 1.0)) throw ValidationError("target: eps_r must be >= 1");
  if (!(beta_np_per_m >= 0.0)) throw ValidationError("target: beta must be >= 0");
  if (!known_labels().count(label)) {
    throw ValidationError("target: unknown label '" + label + "'");
  }
}

double ricker(double t_ns, double fc_ghz) {
  if (!(fc_ghz > 0.0)) throw ValidationError("ricker: fc must be positive");
  const double a = kPi * kPi * fc_ghz * fc_ghz * t_ns * t_ns;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

double wave_velocity(double eps_r) {
  if (!(eps_r >= 1.0)) throw ValidationError("wave_velocity: eps_r must be >= 1");
  return weak_signal::kSpeedOfLightMNs / std::sqrt(eps_r);
}

double hyperbola_travel_time(double x_m, const TargetAnnotation& tgt) {
  const double v = wave_velocity(tgt.eps_r);
  const double dx = x_m - tgt.x0_m;
  return 2.0 * std::sqrt(tgt.depth_m * tgt.depth_m + dx * dx) / v;
}

namespace {

// Real-valued row index of the arc at column j (may fall outside the grid).
double arc_index(const BScan& b, const TargetAnnotation& tgt, int j) {
  return (hyperbola_travel_time(b.pos_of(j), tgt) - b.t0_ns) / b.dt_ns;
}

// Columns whose trajectory sample lies inside the grid.
std::vector<int> arc_span(const BScan& b, const TargetAnnotation& tgt) {
  std::vector<int> span;
  for (int j = 0; j < b.x_traces; ++j) {
    const double idx = arc_index(b, tgt, j);
    if (idx >= 0.0 && idx <= b.t_samples - 1) span.push_back(j);
  }
  return span;
}

int apex_column(const BScan& b, const TargetAnnotation& tgt, std::span<const int> span) {
  int best = span[0];
  for (int j : span) {
    if (std::fabs(b.pos_of(j) - tgt.x0_m) < std::fabs(b.pos_of(best) - tgt.x0_m)) best = j;
  }
  return best;
}

struct BandStats {
  double peak_abs = 0.0;
  double mean_sq = 0.0;
  double mean_abs = 0.0;
  std::int64_t cells = 0;
};

BandStats band_stats(const BScan& b, const TargetAnnotation& tgt) {
  const std::vector<int> span = arc_span(b, tgt);
  if (span.empty()) throw ValidationError("measure: arc lies outside the grid");
  BandStats stats;
  double sq = 0.0, abs_sum = 0.0;
  for (int j : span) {
    const double idx = arc_index(b, tgt, j);
    const int lo = std::max(0, static_cast<int>(std::ceil(idx - weak_signal::kArcBandSamples)));
    const int hi = std::min(b.t_samples - 1,
                            static_cast<int>(std::floor(idx + weak_signal::kArcBandSamples)));
    for (int i = lo; i <= hi; ++i) {
      const double v = b.at(i, j);
      stats.peak_abs = std::max(stats.peak_abs, std::fabs(v));
      sq += v * v;
      abs_sum += std::fabs(v);
      ++stats.cells;
    }
  }
  stats.mean_sq = sq / static_cast<double>(stats.cells);
  stats.mean_abs = abs_sum / static_cast<double>(stats.cells);
  return stats;
}

BandStats background_stats(const BScan& b, std::span<const TargetAnnotation> all) {
  BandStats stats;
  double sq = 0.0, abs_sum = 0.0;
  std::vector<double> idx(all.size());
  for (int j = 0; j < b.x_traces; ++j) {
    // Distance to every arc, whether or not it crosses the grid here.
    for (std::size_t k = 0; k < all.size(); ++k) idx[k] = arc_index(b, all[k], j);
    for (int i = 0; i < b.t_samples; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (double id : idx) nearest = std::min(nearest, std::fabs(i - id));
      if (nearest < weak_signal::kBackgroundExclusionSamples) continue;
      const double v = b.at(i, j);
      stats.peak_abs = std::max(stats.peak_abs, std::fabs(v));
      sq += v * v;
      abs_sum += std::fabs(v);
      ++stats.cells;
    }
  }
  if (stats.cells == 0) throw ValidationError("measure: no background cells outside the arcs");
  stats.mean_sq = sq / static_cast<double>(stats.cells);
  stats.mean_abs = abs_sum / static_cast<double>(stats.cells);
  return stats;
}

std::span<const TargetAnnotation> context_or_self(const TargetAnnotation& tgt,
                                                  std::span<const TargetAnnotation>& all) {
  return all.empty() ? std::span<const TargetAnnotation>(&tgt, 1) : all;
}

}  // namespace

double measure_contrast(const BScan& b, const TargetAnnotation& tgt,
                        std::span<const TargetAnnotation> all) {
  b.validate();
  tgt.validate();
  const BandStats band = band_stats(b, tgt);
  const BandStats bg = background_stats(b, context_or_self(tgt, all));
  const double a_sig = band.peak_abs;
  const double a_bg = bg.mean_abs;
  if (a_sig + a_bg == 0.0) return 0.0;
  return (a_sig - a_bg) / (a_sig + a_bg);
}

double measure_scr(const BScan& b, const TargetAnnotation& tgt,
                   std::span<const TargetAnnotation> all) {
  b.validate();
  tgt.validate();
  const BandStats band = band_stats(b, tgt);
  const BandStats bg = background_stats(b, context_or_self(tgt, all));
  if (bg.mean_sq == 0.0) return std::numeric_limits<double>::infinity();
  // Clutter-corrected signal energy: the band holds signal plus clutter, so
  // the background level is subtracted before the ratio.
  const double e_sig = band.mean_sq - bg.mean_sq;
  if (e_sig <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(e_sig / bg.mean_sq);
}

double measure_continuity(const BScan& b, const TargetAnnotation& tgt) {
  b.validate();
  tgt.validate();
  const std::vector<int> span = arc_span(b, tgt);
  if (span.empty()) throw ValidationError("measure_continuity: arc spans no columns");

  auto window_peak = [&](int j) {
    const int center = static_cast<int>(std::llround(arc_index(b, tgt, j)));
    const int lo = std::max(0, center - weak_signal::kContinuityWindowSamples);
    const int hi = std::min(b.t_samples - 1, center + weak_signal::kContinuityWindowSamples);
    double peak = 0.0;
    for (int i = lo; i <= hi; ++i) peak = std::max(peak, std::fabs(b.at(i, j)));
    return peak;
  };

  const double apex_peak = window_peak(apex_column(b, tgt, span));
  if (apex_peak == 0.0) return 0.0;
  const double threshold = weak_signal::kContinuityAmpFraction * apex_peak;
  int passing = 0;
  for (int j : span) {
    if (window_peak(j) >= threshold) ++passing;
  }
  return static_cast<double>(passing) / static_cast<double>(span.size());
}

double measure_dissipation(const TargetAnnotation& tgt) {
  tgt.validate();
  return weak_signal::kNepersToDb * tgt.beta_np_per_m * 2.0 * tgt.depth_m;
}

WeakSignalReport classify_weak_signal(double contrast, double scr_db, double continuity,
                                      double dissipation_db, double depth_m) {
  WeakSignalReport r;
  r.contrast = contrast;
  r.scr_db = scr_db;
  r.continuity = continuity;
  r.dissipation_db = dissipation_db;
  r.depth_m = depth_m;
  r.low_contrast = contrast < weak_signal::kContrastThreshold;
  r.clutter_dominance = scr_db < weak_signal::kScrThresholdDb;
  r.geometric_atrophy = continuity < weak_signal::kContinuityThreshold;
  r.deep_attenuated = depth_m > weak_signal::kDepthThresholdM &&
                      dissipation_db > weak_signal::kDissipationThresholdDb;
  r.is_weak = r.low_contrast || r.clutter_dominance || r.geometric_atrophy || r.deep_attenuated;
  return r;
}

WeakSignalReport measure_and_classify(const BScan& b, const TargetAnnotation& tgt,
                                      std::span<const TargetAnnotation> all) {
  return classify_weak_signal(measure_contrast(b, tgt, all), measure_scr(b, tgt, all),
                              measure_continuity(b, tgt), measure_dissipation(tgt),
                              tgt.depth_m);
}

namespace {

struct SynthesisState {
  BScan grid;                        // geometry only; samples hold the signal sum
  std::vector<double> clutter;       // unit-RMS field
  std::vector<std::vector<int>> masks;  // zeroed columns per target
};

void deposit_targets(BScan& b, const SynthesisSpec& spec) {
  const double t_cut = std::sqrt(34.0) / (kPi * spec.fc_ghz);
  for (const TargetAnnotation& tgt : spec.targets) {
    const double apex = hyperbola_travel_time(tgt.x0_m, tgt);
    if (apex < b.t0_ns || apex > b.t0_ns + (b.t_samples - 1) * b.dt_ns) {
      throw ValidationError("synthesize: target apex lies outside the time window");
    }
    for (int j = 0; j < b.x_traces; ++j) {
      const double t_arc = hyperbola_travel_time(b.pos_of(j), tgt);
      const double dxm = b.pos_of(j) - tgt.x0_m;
      const double radius = std::sqrt(tgt.depth_m * tgt.depth_m + dxm * dxm);
      const double amp = tgt.amplitude * std::exp(-2.0 * tgt.beta_np_per_m * radius) *
                         (tgt.depth_m / radius);
      const int lo = std::max(0, static_cast<int>(std::ceil((t_arc - t_cut - b.t0_ns) / b.dt_ns)));
      const int hi = std::min(b.t_samples - 1,
                              static_cast<int>(std::floor((t_arc + t_cut - b.t0_ns) / b.dt_ns)));
      for (int i = lo; i <= hi; ++i) {
        b.at(i, j) += amp * ricker(b.time_of(i) - t_arc, spec.fc_ghz);
      }
    }
  }
}

void normalize_rms(std::vector<double>& field) {
  double sq = 0.0;
  for (double v : field) sq += v * v;
  const double rms = std::sqrt(sq / static_cast<double>(field.size()));
  if (rms > 0.0) {
    for (double& v : field) v /= rms;
  }
}

std::vector<double> make_clutter(const BScan& grid, double layered_fraction, SplitMix64& rng) {
  const int T = grid.t_samples, X = grid.x_traces;
  const std::size_t cells = static_cast<std::size_t>(T) * X;

  // Horizontal low-frequency bands: a sum of slow sinusoids in time, shared
  // by every trace.
  std::vector<double> layered(cells, 0.0);
  std::vector<double> row(T, 0.0);
  for (int k = 0; k < 8; ++k) {
    const double period = rng.next_uniform(8.0, 32.0) * grid.dt_ns;
    const double phase = rng.next_uniform(0.0, 2.0 * kPi);
    const double amp = rng.next_uniform(0.5, 1.0);
    for (int i = 0; i < T; ++i) {
      row[i] += amp * std::sin(2.0 * kPi * grid.time_of(i) / period + phase);
    }
  }
  for (int i = 0; i < T; ++i) {
    for (int j = 0; j < X; ++j) layered[static_cast<std::size_t>(i) * X + j] = row[i];
  }
  normalize_rms(layered);

  // First-order autoregressive noise along each trace, coefficient 0.9.
  std::vector<double> ar(cells, 0.0);
  const double rho = 0.9;
  const double drive = std::sqrt(1.0 - rho * rho);
  for (int j = 0; j < X; ++j) {
    double prev = rng.next_gaussian();
    ar[j] = prev;
    for (int i = 1; i < T; ++i) {
      prev = rho * prev + drive * rng.next_gaussian();
      ar[static_cast<std::size_t>(i) * X + j] = prev;
    }
  }
  normalize_rms(ar);

  std::vector<double> clutter(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    clutter[i] = layered_fraction * layered[i] + (1.0 - layered_fraction) * ar[i];
  }
  normalize_rms(clutter);
  return clutter;
}

BScan compose(const SynthesisState& state, const SynthesisSpec& spec, double scale) {
  BScan b = state.grid;
  if (scale != 0.0) {
    for (std::size_t i = 0; i < b.samples.size(); ++i) b.samples[i] += scale * state.clutter[i];
  }
  // Fragmentation: zero the +-3 sample band of each masked column.
  for (std::size_t k = 0; k < spec.targets.size(); ++k) {
    for (int j : state.masks[k]) {
      const double idx = arc_index(b, spec.targets[k], j);
      const int lo = std::max(0, static_cast<int>(std::ceil(idx - weak_signal::kArcBandSamples)));
      const int hi = std::min(b.t_samples - 1,
                              static_cast<int>(std::floor(idx + weak_signal::kArcBandSamples)));
      for (int i = lo; i <= hi; ++i) b.at(i, j) = 0.0;
    }
  }
  return b;
}

std::optional<double> tune_clutter_scale(const SynthesisState& state,
                                         const SynthesisSpec& spec, double target_db) {
  const auto scr_of = [&](double s) {
    return measure_scr(compose(state, spec, s), spec.targets[0], spec.targets);
  };
  const double clean = scr_of(0.0);
  if (clean < target_db) {
    throw ValidationError("synthesize: SCR target " + std::to_string(target_db) +
                          " dB above the clean-scan SCR; clutter cannot be negative");
  }
  double lo = 0.0, hi = 1.0;
  int expand = 0;
  while (scr_of(hi) > target_db) {
    hi *= 2.0;
    // The realized field's band-vs-background imbalance can floor the
    // measured SCR above a strongly negative target.
    if (++expand > 40) return std::nullopt;
  }
  for (int iter = 0; iter < 80; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double scr = scr_of(mid);
    if (std::fabs(scr - target_db) <= kScrBisectTolDb) return mid;
    if (scr > target_db) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Chooses zeroed-column runs for one target so the measured continuity of the
// composed scan lands within tolerance. Alive columns keep their pass/fail
// status from the unmasked composite, so counting suffices.
std::vector<int> fragment_target(const BScan& composite, const TargetAnnotation& tgt,
                                 double target, SplitMix64& rng) {
  const std::vector<int> span = arc_span(composite, tgt);
  const int apex = apex_column(composite, tgt, span);

  auto window_peak = [&](int j) {
    const int center = static_cast<int>(std::llround(arc_index(composite, tgt, j)));
    const int lo = std::max(0, center - weak_signal::kContinuityWindowSamples);
    const int hi = std::min(composite.t_samples - 1,
                            center + weak_signal::kContinuityWindowSamples);
    double peak = 0.0;
    for (int i = lo; i <= hi; ++i) peak = std::max(peak, std::fabs(composite.at(i, j)));
    return peak;
  };
  const double threshold = weak_signal::kContinuityAmpFraction * window_peak(apex);

  std::vector<bool> passes(span.size());
  int passing = 0;
  for (std::size_t s = 0; s < span.size(); ++s) {
    passes[s] = window_peak(span[s]) >= threshold;
    passing += passes[s] ? 1 : 0;
  }
  const double unfragmented = static_cast<double>(passing) / static_cast<double>(span.size());
  if (target > unfragmented + 0.05) {
    throw ValidationError("synthesize: continuity target " + std::to_string(target) +
                          " above the unfragmented value " + std::to_string(unfragmented));
  }

  std::vector<bool> masked(span.size(), false);
  auto current = [&]() {
    int count = 0;
    for (std::size_t s = 0; s < span.size(); ++s) count += (!masked[s] && passes[s]) ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(span.size());
  };

  // Land just above the target: proposals that overshoot are rolled back, so
  // overlapping runs give single-column granularity near the goal.
  int tries = 0;
  while (current() > target + 0.012 && tries < 900) {
    ++tries;
    const int start = static_cast<int>(rng.next_below(span.size()));
    const int len = 3 + static_cast<int>(rng.next_below(6));
    std::vector<std::size_t> touched;
    for (int s = start; s < start + len && s < static_cast<int>(span.size()); ++s) {
      if (span[s] == apex || masked[s]) continue;
      masked[s] = true;
      touched.push_back(s);
    }
    if (current() < target - 0.03) {
      for (std::size_t s : touched) masked[s] = false;  // overshoot: retry
    }
  }

  std::vector<int> cols;
  for (std::size_t s = 0; s < span.size(); ++s) {
    if (masked[s]) cols.push_back(span[s]);
  }
  return cols;
}

}  // namespace

SynthesisResult synthesize_bscan(const SynthesisSpec& spec, std::uint64_t seed) {
  if (spec.targets.empty()) {
    throw ValidationError("synthesize: no targets; SCR and continuity are undefined");
  }
  for (const TargetAnnotation& tgt : spec.targets) tgt.validate();
  if (spec.layered_fraction < 0.0 || spec.layered_fraction > 1.0) {
    throw ValidationError("synthesize: layered_fraction must lie in [0, 1]");
  }
  if (spec.continuity_target &&
      (*spec.continuity_target < 0.0 || *spec.continuity_target > 1.0)) {
    throw ValidationError("synthesize: continuity target must lie in [0, 1]");
  }

  SynthesisState state;
  state.grid = BScan(spec.t_samples, spec.x_traces, spec.dt_ns, spec.dx_m, spec.t0_ns);
  deposit_targets(state.grid, spec);
  state.masks.assign(spec.targets.size(), {});

  SplitMix64 rng(seed);
  state.clutter.assign(state.grid.samples.size(), 0.0);

  // Alternate between tuning the clutter scale (masks frozen) and deriving
  // fragmentation masks (scale frozen); the loop exits once continuity holds
  // for the masks the scale was tuned against. An unlucky clutter field whose
  // floor sits above the SCR target is redrawn, deterministically.
  double scale = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (spec.scr_target_db) state.clutter = make_clutter(state.grid, spec.layered_fraction, rng);
    state.masks.assign(spec.targets.size(), {});
    scale = 0.0;

    bool floored = false;
    bool tuned_with_masks = false;
    for (int round = 0; round < 10; ++round) {
      if (spec.scr_target_db) {
        const std::optional<double> tuned =
            tune_clutter_scale(state, spec, *spec.scr_target_db);
        if (!tuned) {
          floored = true;
          break;
        }
        scale = *tuned;
        tuned_with_masks = true;
      }
      if (!spec.continuity_target) break;

      const BScan current = compose(state, spec, scale);
      bool continuity_ok = true;
      for (const TargetAnnotation& tgt : spec.targets) {
        continuity_ok = continuity_ok && std::fabs(measure_continuity(current, tgt) -
                                                   *spec.continuity_target) <= kContinuityTol;
      }
      if (continuity_ok) break;

      // Re-derive masks against the unmasked composite at the current scale.
      SynthesisState unmasked = state;
      unmasked.masks.assign(spec.targets.size(), {});
      const BScan base = compose(unmasked, spec, scale);
      for (std::size_t k = 0; k < spec.targets.size(); ++k) {
        state.masks[k] = fragment_target(base, spec.targets[k], *spec.continuity_target, rng);
      }
      tuned_with_masks = false;
    }
    if (floored) {
      if (attempt == 3) {
        throw ValidationError("synthesize: SCR target unreachable by scaling clutter");
      }
      continue;
    }
    // The last mask rebuild may have shifted the band energy: align the scale
    // with the final masks.
    if (spec.scr_target_db && !tuned_with_masks) {
      const std::optional<double> tuned = tune_clutter_scale(state, spec, *spec.scr_target_db);
      if (!tuned) {
        if (attempt == 3) {
          throw ValidationError("synthesize: SCR target unreachable by scaling clutter");
        }
        continue;
      }
      scale = *tuned;
    }
    break;
  }

  SynthesisResult result;
  result.bscan = compose(state, spec, scale);

  for (std::size_t k = 0; k < spec.targets.size(); ++k) {
    const TargetAnnotation& tgt = spec.targets[k];
    const double contrast = measure_contrast(result.bscan, tgt, spec.targets);
    const double scr = (spec.scr_target_db && k == 0)
                           ? *spec.scr_target_db
                           : measure_scr(result.bscan, tgt, spec.targets);
    const double continuity = spec.continuity_target
                                  ? *spec.continuity_target
                                  : measure_continuity(result.bscan, tgt);
    result.ground_truth.push_back(classify_weak_signal(contrast, scr, continuity,
                                                       measure_dissipation(tgt), tgt.depth_m));
  }
  return result;
}

}  // namespace wsa
