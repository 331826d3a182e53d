#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdp_tcm/adaptive_de.hpp"
#include "mdp_tcm/cost_sensitive.hpp"
#include "mdp_tcm/dbn.hpp"
#include "mdp_tcm/signal.hpp"

namespace mdp_tcm {

/// Softmax DBN whose posteriors are reweighted by an evolved cost vector.
struct EcsDbnModel {
  DbnModel base;
  CostVector costs;
};

/// Diagnoser plus one wear regressor per tool state. States without their
/// own regressor route to the fallback, which is trained on every frame.
struct MultiStateModel {
  EcsDbnModel diagnoser;
  std::map<int, DbnModel> regressors;
  DbnModel fallback;
  std::size_t smoothing_window = 0;  // 0 or 1 disables smoothing
  int sticky_count = 1;              // consecutive agreeing diagnoses needed to switch state

  const DbnModel& regressor_for(int state) const;
};

struct MdpConfig {
  TrainConfig classifier = TrainConfig::preset("diagnosis-default");
  TrainConfig regressor = TrainConfig::preset("prognosis-default");
  DeConfig de;
  std::size_t min_samples = 50;
  std::size_t smoothing_window = 50;
  int sticky_count = 1;
  /// Skip evolution and keep uniform costs (plain DBN diagnoser).
  bool evolve_costs = true;
};

struct MdpTrainReport {
  std::vector<double> classifier_loss;
  std::map<int, std::vector<double>> regressor_loss;
  std::vector<double> fallback_loss;
  DeResult de;
  std::vector<int> fallback_states;  // states routed to the fallback
};

struct MdpTrainResult {
  MultiStateModel model;
  MdpTrainReport report;
};

/// Diagnoser training (DBN + evolved costs), then one regressor per state
/// with at least min_samples frames, partitioned by true label.
MdpTrainResult train_mdp(const FrameDataset& train, const MdpConfig& config);

/// Trains only the ECS-DBN diagnoser.
EcsDbnModel train_ecs_dbn(const FrameDataset& train, const MdpConfig& config, MdpTrainReport* report = nullptr);

struct Diagnosis {
  int state = 0;
  Eigen::VectorXd posteriors;
};

Diagnosis diagnose(const MultiStateModel& model, const Eigen::VectorXd& frame);
Diagnosis diagnose(const EcsDbnModel& model, const Eigen::VectorXd& frame);

struct WearEstimate {
  std::vector<int> states;
  Eigen::MatrixXd posteriors;  // one row per frame
  std::vector<double> raw;
  std::vector<double> smoothed;  // equals raw when smoothing is off
};

/// Frames must be in time order: diagnose, route, predict, then smooth.
WearEstimate estimate_wear(const MultiStateModel& model, const Eigen::MatrixXd& frames);

/// Trailing moving average: out[t] = mean(in[max(0, t-window+1) .. t]).
std::vector<double> smooth(const std::vector<double>& series, std::size_t window);

/// Applies the sticky-state rule to a stream of per-frame diagnoses.
std::vector<int> apply_sticky(const std::vector<int>& diagnosed, int sticky_count);

/// CSV rows: frame_index,diagnosed_state,posterior_0..3,wear_estimate_um,wear_smoothed_um
std::string prediction_csv(const WearEstimate& estimate);

}  // namespace mdp_tcm
