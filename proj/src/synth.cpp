#include "mdp_tcm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mdp_tcm/rng.hpp"

namespace mdp_tcm {

namespace {

constexpr double kFreshKnotUm = 100.0;
constexpr double kSteadyKnotUm = 200.0;
constexpr double kWornUm = 300.0;

struct ProfileSeed {
  const char* id;
  double base;
  double gain;
  double relative_noise;
  double band_lo;
  double band_hi;
};

// Each channel resolves wear best inside its own band; force and torque
// cover the late regions, the accelerometers spread over the early ones.
constexpr ProfileSeed kDefaultProfiles[] = {
    {"force", 800.0, 1.5, 0.30, 200.0, 400.0},   {"torque", 30.0, 0.05, 0.30, 150.0, 350.0},
    {"vib1_x", 0.0, 0.005, 0.35, 0.0, 150.0},    {"vib1_y", 0.0, 0.005, 0.35, 50.0, 200.0},
    {"vib1_z", 0.0, 0.004, 0.40, 100.0, 250.0},  {"vib2_x", 0.0, 0.005, 0.35, 0.0, 200.0},
    {"vib2_y", 0.0, 0.005, 0.35, 100.0, 300.0},  {"vib2_z", 0.0, 0.004, 0.40, 0.0, 250.0},
    {"vib3_x", 0.0, 0.006, 0.35, 50.0, 200.0},   {"vib3_y", 0.0, 0.006, 0.35, 150.0, 300.0},
    {"vib3_z", 0.0, 0.004, 0.35, 0.0, 400.0},    {"vib4_x", 0.0, 0.005, 0.30, 25.0, 175.0},
    {"vib4_y", 0.0, 0.005, 0.35, 125.0, 275.0},  {"vib4_z", 0.0, 0.004, 0.30, 200.0, 350.0},
};

// Fraction of the accelerated region spent below the worn threshold for rate lambda.
double worn_crossing(double lambda, double rho) {
  if (std::abs(lambda) < 1e-9) return rho;
  return std::log1p(rho * std::expm1(lambda)) / lambda;
}

double response(const ChannelProfile& p, double shared, double wear_end, double w) {
  const double band = std::clamp((w - p.band_lo) / (p.band_hi - p.band_lo), 0.0, 1.0);
  return shared * w + (1.0 - shared) * wear_end * band;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

SynthConfig SynthConfig::defaults(bool desk_scale) {
  SynthConfig c;
  c.sampling_rate_hz = desk_scale ? 200.0 : 20000.0;
  for (std::size_t i = 0; i < std::size(kDefaultProfiles); ++i) {
    const auto& s = kDefaultProfiles[i];
    const double span = s.gain * c.wear_end_um;
    c.channels.push_back({s.id, s.base, s.gain, 0.3 * span, s.relative_noise * span, s.band_lo, s.band_hi,
                          0.45 * static_cast<double>(i)});
  }
  c.apply_skew(10.0);
  return c;
}

void SynthConfig::apply_skew(double skew) {
  if (!(skew >= 1.0)) throw std::invalid_argument("SynthConfig: imbalance_skew must be >= 1");
  if (!(wear_end_um > kWornUm)) throw std::invalid_argument("SynthConfig: wear_end_um must exceed 300");
  imbalance_skew = skew;
  std::array<double, 4> dwell{};
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    dwell[static_cast<std::size_t>(k)] = std::pow(skew, -k / 3.0);
    total += dwell[static_cast<std::size_t>(k)];
  }
  for (auto& d : dwell) d /= total;
  wear_regime_fractions = {dwell[0], dwell[1], dwell[2] + dwell[3]};
  wear_regime_fractions[2] = 1.0 - wear_regime_fractions[0] - wear_regime_fractions[1];

  const double target = dwell[2] / (dwell[2] + dwell[3]);
  const double rho = (kWornUm - kSteadyKnotUm) / (wear_end_um - kSteadyKnotUm);
  double lo = -60.0, hi = 60.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (worn_crossing(mid, rho) < target ? lo : hi) = mid;
  }
  accel_curvature = 0.5 * (lo + hi);
}

void SynthConfig::validate() const {
  if (!(spindle_rpm > 0.0) || !(sampling_rate_hz > 0.0) || !(run_seconds > 0.0)) {
    throw std::invalid_argument("SynthConfig: rpm, sampling rate and duration must be positive");
  }
  double sum = 0.0;
  for (double f : wear_regime_fractions) {
    if (!(f > 0.0)) throw std::invalid_argument("SynthConfig: regime fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("SynthConfig: regime fractions must sum to 1");
  if (!(wear_end_um >= kWornUm)) throw std::invalid_argument("SynthConfig: wear_end_um must be >= 300");
  if (!(imbalance_skew >= 1.0)) throw std::invalid_argument("SynthConfig: imbalance_skew must be >= 1");
  if (!(shared_fraction >= 0.0 && shared_fraction <= 1.0)) {
    throw std::invalid_argument("SynthConfig: shared_fraction must lie in [0,1]");
  }
  if (!(gain_jitter >= 0.0 && gain_jitter < 1.0)) throw std::invalid_argument("SynthConfig: gain_jitter in [0,1)");
  if (channels.empty()) throw std::invalid_argument("SynthConfig: no channels");
  for (const auto& ch : channels) {
    if (!(ch.band_hi > ch.band_lo)) throw std::invalid_argument("SynthConfig: empty band for " + ch.channel_id);
    if (!(ch.noise_std >= 0.0)) throw std::invalid_argument("SynthConfig: negative noise for " + ch.channel_id);
  }
  if (sample_count() < 2) throw std::invalid_argument("SynthConfig: run shorter than two samples");
}

std::size_t SynthConfig::sample_count() const {
  return static_cast<std::size_t>(std::llround(run_seconds * sampling_rate_hz));
}

double wear_curve(const SynthConfig& config, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("wear_curve: t outside [0,1]");
  const auto [f1, f2, f3] = config.wear_regime_fractions;
  if (t == 1.0) return config.wear_end_um;
  if (t <= f1) {
    const double k = config.fresh_curvature;
    if (t == f1) return kFreshKnotUm;
    return kFreshKnotUm * -std::expm1(-k * t / f1) / -std::expm1(-k);
  }
  if (t <= f1 + f2) {
    return kFreshKnotUm + (kSteadyKnotUm - kFreshKnotUm) * (t - f1) / f2;
  }
  const double u = std::min((t - f1 - f2) / f3, 1.0);
  const double lambda = config.accel_curvature;
  const double shape = std::abs(lambda) < 1e-9 ? u : std::expm1(lambda * u) / std::expm1(lambda);
  return kSteadyKnotUm + (config.wear_end_um - kSteadyKnotUm) * shape;
}

SynthRun generate_run(const SynthConfig& config) {
  config.validate();
  const std::size_t n = config.sample_count();
  SynthRun run;
  run.wear_trajectory.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    run.wear_trajectory[i] = wear_curve(config, static_cast<double>(i) / static_cast<double>(n - 1));
  }
  // Guard monotonicity against rounding at the knots.
  for (std::size_t i = 1; i < n; ++i) {
    run.wear_trajectory[i] = std::max(run.wear_trajectory[i], run.wear_trajectory[i - 1]);
  }

  const double spindle_hz = config.spindle_rpm / 60.0;
  for (std::size_t c = 0; c < config.channels.size(); ++c) {
    const auto& p = config.channels[c];
    Rng rng = make_rng(config.seed, "synth.noise." + p.channel_id);
    std::normal_distribution<double> noise(0.0, p.noise_std > 0.0 ? p.noise_std : 1.0);
    ChannelSeries series{p.channel_id, config.sampling_rate_hz, std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / config.sampling_rate_hz;
      double v = p.base + p.gain * response(p, config.shared_fraction, config.wear_end_um, run.wear_trajectory[i]);
      if (p.amplitude != 0.0) v += p.amplitude * std::sin(2.0 * std::numbers::pi * spindle_hz * t + p.phase);
      if (p.noise_std > 0.0) v += noise(rng);
      series.samples[i] = v;
    }
    run.channels.push_back(std::move(series));
  }

  run.metadata["seed"] = std::to_string(config.seed);
  run.metadata["spindle_rpm"] = fmt(config.spindle_rpm);
  run.metadata["sampling_rate_hz"] = fmt(config.sampling_rate_hz);
  run.metadata["run_seconds"] = fmt(config.run_seconds);
  run.metadata["samples"] = std::to_string(n);
  run.metadata["wear_end_um"] = fmt(config.wear_end_um);
  run.metadata["imbalance_skew"] = fmt(config.imbalance_skew);
  run.metadata["wear_regime_fractions"] = fmt(config.wear_regime_fractions[0]) + " " +
                                          fmt(config.wear_regime_fractions[1]) + " " +
                                          fmt(config.wear_regime_fractions[2]);
  run.metadata["accel_curvature"] = fmt(config.accel_curvature);
  for (const auto& p : config.channels) {
    run.metadata["gain." + p.channel_id] = fmt(p.gain);
  }
  return run;
}

std::uint64_t fleet_run_seed(std::uint64_t fleet_seed, int index) {
  return derive_seed(fleet_seed, "fleet.run." + std::to_string(index));
}

std::vector<SynthRun> generate_fleet(const SynthConfig& config, int n_runs) {
  if (n_runs < 1) throw std::invalid_argument("generate_fleet: need at least one run");
  std::vector<SynthRun> fleet;
  fleet.reserve(static_cast<std::size_t>(n_runs));
  for (int r = 0; r < n_runs; ++r) {
    SynthConfig run_config = config;
    run_config.seed = fleet_run_seed(config.seed, r);
    Rng jitter_rng = make_rng(run_config.seed, "fleet.jitter");
    std::uniform_real_distribution<double> jitter(1.0 - config.gain_jitter, 1.0 + config.gain_jitter);
    for (auto& p : run_config.channels) p.gain *= jitter(jitter_rng);
    SynthRun run = generate_run(run_config);
    run.metadata["fleet_seed"] = std::to_string(config.seed);
    run.metadata["run_index"] = std::to_string(r);
    fleet.push_back(std::move(run));
  }
  return fleet;
}

std::vector<std::string> sensor_group(const std::string& group) {
  if (group == "force" || group == "torque") return {group};
  if (group == "vibration") {
    std::vector<std::string> out;
    for (const auto& p : kDefaultProfiles) {
      if (std::string(p.id).starts_with("vib")) out.emplace_back(p.id);
    }
    return out;
  }
  throw std::invalid_argument("unknown sensor group '" + group + "'");
}

}  // namespace mdp_tcm
