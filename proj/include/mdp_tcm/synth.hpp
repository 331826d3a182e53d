#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mdp_tcm/signal.hpp"

namespace mdp_tcm {

/// How one synthetic channel responds to wear.
///
/// response(w) = shared * w + (1 - shared) * wear_end * clamp((w - band_lo) / (band_hi - band_lo), 0, 1)
/// sample      = base + gain * response(w) + amplitude * sin(2 pi f_spindle t + phase) + N(0, noise_std)
struct ChannelProfile {
  std::string channel_id;
  double base = 0.0;
  double gain = 1.0;
  double amplitude = 0.0;
  double noise_std = 0.0;
  double band_lo = 0.0;
  double band_hi = 400.0;
  double phase = 0.0;
};

struct SynthConfig {
  double spindle_rpm = 1650.0;
  double sampling_rate_hz = 200.0;
  double run_seconds = 90.0;
  /// Time fractions of the fresh ramp (0 -> 100 um), the steady region
  /// (100 -> 200 um) and the accelerated region (200 um -> wear_end).
  std::array<double, 3> wear_regime_fractions{0.5, 0.3, 0.2};
  double wear_end_um = 400.0;
  /// Curvature of the initial concave rise.
  double fresh_curvature = 3.0;
  /// Exponential rate of the accelerated region; 0 is linear.
  double accel_curvature = 2.0;
  double shared_fraction = 0.5;
  double imbalance_skew = 10.0;
  double gain_jitter = 0.1;
  std::vector<ChannelProfile> channels;
  std::uint64_t seed = 0;

  /// 14 channels (force, torque, 4 triaxial accelerometers) at the 200 Hz
  /// desk rate, or at 20 kHz when `desk_scale` is false.
  static SynthConfig defaults(bool desk_scale = true);

  /// Sets imbalance_skew and derives wear_regime_fractions and
  /// accel_curvature so that state dwell times follow skew^(-k/3), k = 0..3
  /// (fresh : worn == skew).
  void apply_skew(double skew);

  void validate() const;
  std::size_t sample_count() const;
};

struct SynthRun {
  std::vector<ChannelSeries> channels;
  std::vector<double> wear_trajectory;
  std::map<std::string, std::string> metadata;
};

/// Wear in micrometers at normalized time t in [0,1].
double wear_curve(const SynthConfig& config, double t);

SynthRun generate_run(const SynthConfig& config);

/// `n_runs` runs with per-run seeds derived from config.seed and per-channel
/// gains jittered uniformly by +-gain_jitter.
std::vector<SynthRun> generate_fleet(const SynthConfig& config, int n_runs);

/// Seed used for run `index` of a fleet.
std::uint64_t fleet_run_seed(std::uint64_t fleet_seed, int index);

/// The channel ids of the default layout grouped by sensor:
/// "force", "torque", "vibration".
std::vector<std::string> sensor_group(const std::string& group);

}  // namespace mdp_tcm
