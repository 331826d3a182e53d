#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mdp_tcm/metrics.hpp"
#include "mdp_tcm/multistate.hpp"
#include "mdp_tcm/signal.hpp"
#include "mdp_tcm/synth.hpp"

namespace mdp_tcm {

/// Normalizes and windows each run separately; run i gets run id i.
std::vector<FrameDataset> window_fleet(const std::vector<SynthRun>& fleet, const WindowSpec& spec);

/// Window spec matching a synthetic config (same rate and spindle speed).
WindowSpec window_spec_for(const SynthConfig& config, int multiple = 1);

/// Per-state frame counts.
std::vector<std::size_t> state_counts(const FrameDataset& dataset);

/// Test-split outcome of a plain DBN diagnoser vs. the same DBN with evolved costs.
struct ImbalanceTrial {
  MetricsReport dbn;
  MetricsReport ecs;
  CostVector costs;
  double train_gmean_uniform = 0.0;
  double train_gmean_evolved = 0.0;
};

/// Frame-level split of `data`, one classifier, costs evolved on its training posteriors.
ImbalanceTrial run_imbalance_trial(const FrameDataset& data, const MdpConfig& config, const SplitSpec& split_spec);

/// Multi-state pipeline vs. the single global regressor, evaluated per held-out run.
struct MultiStateTrial {
  MetricsReport diagnosis;       // ECS-DBN on the test frames
  MetricsReport diagnosis_plain; // same network, uniform costs
  MetricsReport mdp;             // raw routed estimates
  MetricsReport mdp_smoothed;
  MetricsReport single;          // one DBN regressor for all states
  MetricsReport single_smoothed;
  std::vector<int> test_runs;
  std::vector<double> run_rmse_raw;       // MDP, per test run
  std::vector<double> run_rmse_smoothed;  // MDP, per test run
  std::vector<double> state_rmse_mdp;     // training RMSE of each state's regressor (NaN when routed to fallback)
  std::vector<double> state_rmse_global;  // training RMSE of the global regressor restricted to that state
  std::vector<int> fallback_states;
};

MultiStateTrial run_multistate_trial(const FrameDataset& train, const FrameDataset& test, const MdpConfig& config);

/// Runs that should be held out: the last `count` run ids present in `data`.
std::vector<int> last_runs(const FrameDataset& data, int count);

struct SubsetResult {
  std::string name;
  std::vector<std::string> channels;
  MultiStateTrial trial;
};

/// Trains and evaluates the pipeline once per channel subset.
std::vector<SubsetResult> run_sensor_ablation(const FrameDataset& train, const FrameDataset& test,
                                              const std::vector<std::pair<std::string, std::vector<std::string>>>& subsets,
                                              const MdpConfig& config);

/// MdpConfig with all training sub-seeds derived from one run seed.
MdpConfig seeded_config(MdpConfig config, std::uint64_t seed);

/// Mean and sample standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

}  // namespace mdp_tcm
