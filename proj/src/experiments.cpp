#include "mdp_tcm/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "mdp_tcm/rng.hpp"

namespace mdp_tcm {

std::vector<FrameDataset> window_fleet(const std::vector<SynthRun>& fleet, const WindowSpec& spec) {
  std::vector<FrameDataset> out;
  out.reserve(fleet.size());
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    out.push_back(prepare_run(fleet[i].channels, spec, fleet[i].wear_trajectory, static_cast<int>(i)));
  }
  return out;
}

WindowSpec window_spec_for(const SynthConfig& config, int multiple) {
  WindowSpec spec;
  spec.spindle_rpm = config.spindle_rpm;
  spec.sampling_rate_hz = config.sampling_rate_hz;
  spec.multiple = multiple;
  return spec;
}

std::vector<std::size_t> state_counts(const FrameDataset& dataset) {
  std::vector<std::size_t> counts(kNumStates, 0);
  for (int s : dataset.state_labels) ++counts.at(static_cast<std::size_t>(s));
  return counts;
}

MdpConfig seeded_config(MdpConfig config, std::uint64_t seed) {
  config.classifier.seed = derive_seed(seed, "classifier");
  config.regressor.seed = derive_seed(seed, "regressor");
  config.de.seed = derive_seed(seed, "de");
  return config;
}

ImbalanceTrial run_imbalance_trial(const FrameDataset& data, const MdpConfig& config, const SplitSpec& split_spec) {
  auto [train, test] = split(data, split_spec);
  MdpConfig cfg = config;
  cfg.evolve_costs = true;
  const EcsDbnModel model = train_ecs_dbn(train, cfg);

  ImbalanceTrial out;
  out.costs = model.costs;
  const Eigen::MatrixXd train_post = predict_proba_batch(model.base, train.frames);
  out.train_gmean_uniform = evaluate_fitness(CostVector::uniform(kNumStates), train_post, train.state_labels);
  out.train_gmean_evolved = evaluate_fitness(model.costs, train_post, train.state_labels);

  const Eigen::MatrixXd post = predict_proba_batch(model.base, test.frames);
  const auto plain = predict_cs_batch(post, CostVector::uniform(kNumStates));
  const auto weighted = predict_cs_batch(post, model.costs);
  out.dbn = classification_report(test.state_labels, plain, kNumStates);
  out.ecs = classification_report(test.state_labels, weighted, kNumStates);
  return out;
}

std::vector<int> last_runs(const FrameDataset& data, int count) {
  std::set<int> ids(data.run_ids.begin(), data.run_ids.end());
  if (count < 1 || static_cast<std::size_t>(count) >= ids.size()) {
    throw std::invalid_argument("last_runs: need 1 <= count < number of runs");
  }
  std::vector<int> all(ids.begin(), ids.end());
  return {all.end() - count, all.end()};
}

namespace {

double state_rmse(const DbnModel& model, const FrameDataset& data, int state) {
  std::vector<double> truth, pred;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.state_labels[i] != state) continue;
    truth.push_back(data.wear_targets[i]);
    pred.push_back(predict_regression(model, data.frames.row(static_cast<Eigen::Index>(i)).transpose()));
  }
  if (truth.empty()) return std::numeric_limits<double>::quiet_NaN();
  return rmse(truth, pred);
}

}  // namespace

MultiStateTrial run_multistate_trial(const FrameDataset& train, const FrameDataset& test, const MdpConfig& config) {
  const MdpTrainResult fit = train_mdp(train, config);
  const MultiStateModel& model = fit.model;

  MultiStateTrial out;
  out.fallback_states = fit.report.fallback_states;
  for (int s = 0; s < kNumStates; ++s) {
    const bool own = model.regressors.count(s) > 0;
    out.state_rmse_mdp.push_back(own ? state_rmse(model.regressors.at(s), train, s)
                                     : std::numeric_limits<double>::quiet_NaN());
    out.state_rmse_global.push_back(state_rmse(model.fallback, train, s));
  }

  std::set<int> ids(test.run_ids.begin(), test.run_ids.end());
  out.test_runs.assign(ids.begin(), ids.end());

  std::vector<double> truth, raw, smoothed, single, single_smoothed;
  std::vector<int> states, diagnosed, plain;
  for (int run : out.test_runs) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < test.size(); ++i) {
      if (test.run_ids[i] == run) rows.push_back(i);
    }
    const FrameDataset part = test.subset(rows);
    const WearEstimate est = estimate_wear(model, part.frames);
    const Eigen::VectorXd base = predict_regression_batch(model.fallback, part.frames);
    std::vector<double> base_v(base.data(), base.data() + base.size());
    const std::vector<double> base_s = model.smoothing_window > 1 ? smooth(base_v, model.smoothing_window) : base_v;

    out.run_rmse_raw.push_back(rmse(part.wear_targets, est.raw));
    out.run_rmse_smoothed.push_back(rmse(part.wear_targets, est.smoothed));

    truth.insert(truth.end(), part.wear_targets.begin(), part.wear_targets.end());
    raw.insert(raw.end(), est.raw.begin(), est.raw.end());
    smoothed.insert(smoothed.end(), est.smoothed.begin(), est.smoothed.end());
    single.insert(single.end(), base_v.begin(), base_v.end());
    single_smoothed.insert(single_smoothed.end(), base_s.begin(), base_s.end());
    states.insert(states.end(), part.state_labels.begin(), part.state_labels.end());
    diagnosed.insert(diagnosed.end(), est.states.begin(), est.states.end());
    const auto argmax_states = predict_cs_batch(est.posteriors, CostVector::uniform(kNumStates));
    plain.insert(plain.end(), argmax_states.begin(), argmax_states.end());
  }

  out.diagnosis = classification_report(states, diagnosed, kNumStates);
  out.diagnosis_plain = classification_report(states, plain, kNumStates);
  add_regression(out.mdp, truth, raw);
  add_regression(out.mdp_smoothed, truth, smoothed);
  add_regression(out.single, truth, single);
  add_regression(out.single_smoothed, truth, single_smoothed);
  return out;
}

std::vector<SubsetResult> run_sensor_ablation(const FrameDataset& train, const FrameDataset& test,
                                              const std::vector<std::pair<std::string, std::vector<std::string>>>& subsets,
                                              const MdpConfig& config) {
  std::vector<SubsetResult> out;
  for (const auto& [name, channels] : subsets) {
    const FrameDataset tr = select_channels(train, channels);
    const FrameDataset te = select_channels(test, channels);
    out.push_back({name, channels, run_multistate_trial(tr, te, config)});
  }
  return out;
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("mean_std: empty input");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

}  // namespace mdp_tcm
