#include "mdp_tcm/multistate.hpp"

#include <cstdio>
#include <stdexcept>

#include "mdp_tcm/errors.hpp"

namespace mdp_tcm {

const DbnModel& MultiStateModel::regressor_for(int state) const {
  const auto it = regressors.find(state);
  return it == regressors.end() ? fallback : it->second;
}

EcsDbnModel train_ecs_dbn(const FrameDataset& train, const MdpConfig& config, MdpTrainReport* report) {
  if (train.empty()) throw DataError("train_ecs_dbn: empty training set");
  FinetuneResult base = train_classifier(train.frames, train.state_labels, kNumStates, config.classifier);
  EcsDbnModel out{std::move(base.model), CostVector::uniform(kNumStates)};
  if (report) report->classifier_loss = std::move(base.epoch_loss);
  if (config.evolve_costs) {
    CostEvolution evo = evolve_costs(out.base, train.frames, train.state_labels, config.de);
    out.costs = std::move(evo.costs);
    if (report) report->de = std::move(evo.de);
  }
  return out;
}

MdpTrainResult train_mdp(const FrameDataset& train, const MdpConfig& config) {
  if (train.empty()) throw DataError("train_mdp: empty training set");
  train.check_consistent();
  MdpTrainResult result;
  result.model.diagnoser = train_ecs_dbn(train, config, &result.report);
  result.model.smoothing_window = config.smoothing_window;
  result.model.sticky_count = config.sticky_count;

  FinetuneResult global = train_regressor(train.frames, train.wear_targets, config.regressor);
  result.model.fallback = std::move(global.model);
  result.report.fallback_loss = std::move(global.epoch_loss);

  for (int state = 0; state < kNumStates; ++state) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train.state_labels[i] == state) rows.push_back(i);
    }
    if (rows.size() < config.min_samples || rows.empty()) {
      result.report.fallback_states.push_back(state);
      continue;
    }
    const FrameDataset part = train.subset(rows);
    TrainConfig rc = config.regressor;
    rc.seed = derive_seed(config.regressor.seed, "mdp.state" + std::to_string(state));
    FinetuneResult fit = train_regressor(part.frames, part.wear_targets, rc);
    result.model.regressors.emplace(state, std::move(fit.model));
    result.report.regressor_loss.emplace(state, std::move(fit.epoch_loss));
  }
  return result;
}

Diagnosis diagnose(const EcsDbnModel& model, const Eigen::VectorXd& frame) {
  Diagnosis d;
  d.posteriors = predict_proba(model.base, frame);
  d.state = predict_cs(d.posteriors, model.costs);
  return d;
}

Diagnosis diagnose(const MultiStateModel& model, const Eigen::VectorXd& frame) {
  return diagnose(model.diagnoser, frame);
}

std::vector<int> apply_sticky(const std::vector<int>& diagnosed, int sticky_count) {
  if (sticky_count < 1) throw std::invalid_argument("apply_sticky: sticky_count must be >= 1");
  if (sticky_count == 1 || diagnosed.empty()) return diagnosed;
  std::vector<int> out(diagnosed.size());
  int current = diagnosed.front();
  int candidate = current;
  int run = 0;
  for (std::size_t t = 0; t < diagnosed.size(); ++t) {
    const int d = diagnosed[t];
    if (d == current) {
      run = 0;
    } else {
      run = d == candidate ? run + 1 : 1;
      candidate = d;
      if (run >= sticky_count) {
        current = d;
        run = 0;
      }
    }
    out[t] = current;
  }
  return out;
}

std::vector<double> smooth(const std::vector<double>& series, std::size_t window) {
  if (window < 1) throw std::invalid_argument("smooth: window must be >= 1");
  if (window == 1) return series;
  std::vector<double> out(series.size());
  for (std::size_t t = 0; t < series.size(); ++t) {
    const std::size_t start = t + 1 >= window ? t + 1 - window : 0;
    double sum = 0.0;
    for (std::size_t i = start; i <= t; ++i) sum += series[i];
    out[t] = sum / static_cast<double>(t - start + 1);
  }
  return out;
}

WearEstimate estimate_wear(const MultiStateModel& model, const Eigen::MatrixXd& frames) {
  WearEstimate out;
  out.posteriors = predict_proba_batch(model.diagnoser.base, frames);
  out.states = apply_sticky(predict_cs_batch(out.posteriors, model.diagnoser.costs), model.sticky_count);

  out.raw.resize(static_cast<std::size_t>(frames.rows()));
  for (std::size_t i = 0; i < out.raw.size(); ++i) {
    out.raw[i] = predict_regression(model.regressor_for(out.states[i]), frames.row(static_cast<Eigen::Index>(i)).transpose());
  }
  out.smoothed = model.smoothing_window > 1 ? smooth(out.raw, model.smoothing_window) : out.raw;
  return out;
}

std::string prediction_csv(const WearEstimate& estimate) {
  std::string out = "frame_index,diagnosed_state";
  for (Eigen::Index k = 0; k < estimate.posteriors.cols(); ++k) out += ",posterior_" + std::to_string(k);
  out += ",wear_estimate_um,wear_smoothed_um\n";
  char buf[64];
  for (std::size_t i = 0; i < estimate.raw.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(estimate.states[i]);
    for (Eigen::Index k = 0; k < estimate.posteriors.cols(); ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", estimate.posteriors(static_cast<Eigen::Index>(i), k));
      out += buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", estimate.raw[i], estimate.smoothed[i]);
    out += buf;
  }
  return out;
}

}  // namespace mdp_tcm
