#ifndef WSA_WAVEFIELD_HPP
#define WSA_WAVEFIELD_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsa/tensor.hpp"

namespace wsa {

// Weak-signal criteria thresholds and the measurement banding constants, kept
// in one place.
namespace weak_signal {
inline constexpr double kContrastThreshold = 0.2;        // C below this is low contrast
inline constexpr double kScrThresholdDb = -5.0;          // SCR below this is clutter dominance
inline constexpr double kContinuityThreshold = 0.6;      // continuity below this is atrophy
inline constexpr double kDepthThresholdM = 1.5;          // deep burial beyond this depth ...
inline constexpr double kDissipationThresholdDb = 40.0;  // ... with dissipation above this

inline constexpr int kArcBandSamples = 3;          // half-height of the signal band
inline constexpr int kBackgroundExclusionSamples = 10;  // clearance defining background cells
inline constexpr int kContinuityWindowSamples = 2;      // half-height of the per-column window
inline constexpr double kContinuityAmpFraction = 0.2;   // of the apex band maximum

inline constexpr double kSpeedOfLightMNs = 0.3;            // m/ns in vacuum
inline const double kNepersToDb = 20.0 / std::log(10.0);   // amplitude nepers -> dB
}  // namespace weak_signal

// 2-D radargram: T time samples (rows) by X traces (columns).
struct BScan {
  int t_samples = 0;
  int x_traces = 0;
  double dt_ns = 0.0;
  double dx_m = 0.0;
  double t0_ns = 0.0;
  std::vector<double> samples;  // row-major, time-major

  BScan() = default;
  BScan(int t, int x, double dt, double dx, double t0);
  double& at(int t, int x) { return samples[static_cast<std::size_t>(t) * x_traces + x]; }
  double at(int t, int x) const { return samples[static_cast<std::size_t>(t) * x_traces + x]; }
  double time_of(int t) const { return t0_ns + t * dt_ns; }
  double pos_of(int x) const { return x * dx_m; }
  void validate() const;
};

struct TargetAnnotation {
  double x0_m = 0.0;
  double depth_m = 0.0;
  double eps_r = 1.0;
  double amplitude = 1.0;
  double beta_np_per_m = 0.0;
  std::string label = "cavity";  // cavity | void | loose | water-rich

  void validate() const;
};

struct WeakSignalReport {
  double contrast = 0.0;
  double scr_db = 0.0;
  double continuity = 0.0;
  double dissipation_db = 0.0;
  double depth_m = 0.0;
  bool low_contrast = false;
  bool clutter_dominance = false;
  bool geometric_atrophy = false;
  bool deep_attenuated = false;
  bool is_weak = false;
};

// Zero-mean Ricker pulse, (1 - 2 pi^2 fc^2 t^2) exp(-pi^2 fc^2 t^2).
double ricker(double t_ns, double fc_ghz);

// Two-way propagation speed in m/ns: 0.3 / sqrt(eps_r).
double wave_velocity(double eps_r);

// Zero-offset point-diffractor travel time (2/v) sqrt(d^2 + (x - x0)^2), ns.
double hyperbola_travel_time(double x_m, const TargetAnnotation& tgt);

struct SynthesisSpec {
  int t_samples = 160;
  int x_traces = 96;
  double dt_ns = 0.25;
  double dx_m = 0.05;
  double t0_ns = 0.0;
  double fc_ghz = 0.5;
  std::vector<TargetAnnotation> targets;

  std::optional<double> scr_target_db;    // unset: no clutter
  double layered_fraction = 0.5;          // split between banded and AR clutter
  std::optional<double> continuity_target;  // unset: no fragmentation
};

struct SynthesisResult {
  BScan bscan;
  // One per target: prescribed SCR/continuity when targeted (measured
  // otherwise), measured contrast, analytic dissipation.
  std::vector<WeakSignalReport> ground_truth;
};

// Deterministic in (spec, seed). Clutter is scaled by bisection until the
// first target's measured SCR lands within +-0.25 dB of the request;
// fragmentation zeroes seeded 3-8 column runs of each arc band (the apex
// column is never zeroed) until measured continuity is within +-0.05.
SynthesisResult synthesize_bscan(const SynthesisSpec& spec, std::uint64_t seed);

// A_sig is the peak |amplitude| in the +-3 sample arc band; A_bg the mean
// |amplitude| over cells at least 10 samples away from every arc in `all`
// (defaults to the measured target alone).
double measure_contrast(const BScan& b, const TargetAnnotation& tgt,
                        std::span<const TargetAnnotation> all = {});

// 10 log10(E_sig / E_clut) with E_clut the background mean square and E_sig
// the clutter-corrected band mean square, max(band - background, 0). Returns
// +inf when the background is silent and -inf when the band does not rise
// above it.
double measure_scr(const BScan& b, const TargetAnnotation& tgt,
                   std::span<const TargetAnnotation> all = {});

// Fraction of arc-span columns whose peak |amplitude| within +-2 samples of
// the trajectory reaches 0.2x the apex band maximum.
double measure_continuity(const BScan& b, const TargetAnnotation& tgt);

// Analytic two-way attenuation 8.686 * beta * 2 * depth, dB.
double measure_dissipation(const TargetAnnotation& tgt);

WeakSignalReport classify_weak_signal(double contrast, double scr_db, double continuity,
                                      double dissipation_db, double depth_m);

WeakSignalReport measure_and_classify(const BScan& b, const TargetAnnotation& tgt,
                                      std::span<const TargetAnnotation> all = {});

}  // namespace wsa

#endif  // WSA_WAVEFIELD_HPP
