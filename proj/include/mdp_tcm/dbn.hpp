#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mdp_tcm/rbm.hpp"
#include "mdp_tcm/rng.hpp"

namespace mdp_tcm {

enum class HeadKind { Softmax, Linear };

const char* head_kind_name(HeadKind kind);

/// Affine layer y = W^T x + b, W stored inputs x outputs like RbmParams::weights.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Stacked RBMs unrolled into a feed-forward network with rectified-linear
/// hidden units and either a softmax or a linear output head.
///
/// A linear head predicts in a scaled space; predict_regression maps back
/// with target_offset + target_scale * output.
struct DbnModel {
  std::vector<std::size_t> layer_sizes;  // input, hidden..., output
  std::vector<DenseLayer> hidden;
  DenseLayer head;
  HeadKind head_kind = HeadKind::Softmax;
  double target_offset = 0.0;
  double target_scale = 1.0;

  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  bool all_finite() const;
  /// Throws std::invalid_argument if layer shapes disagree with layer_sizes.
  void check_shapes() const;
};

struct TrainConfig {
  int pretrain_epochs = 200;
  int finetune_epochs = 500;
  double learning_rate = 0.01;
  int batch_size = 500;
  int hidden_min = 5;
  int hidden_max = 60;
  int hidden_layers = 3;
  std::uint64_t seed = 0;
  int gibbs_steps = 1;
  double weight_decay = 0.0;
  /// Overrides the random draw from [hidden_min, hidden_max] when non-empty.
  std::vector<std::size_t> hidden_sizes;

  /// "prognosis-default", "diagnosis-default" or "desk".
  static TrainConfig preset(std::string_view name);
  void validate() const;
};

/// input, hidden sizes (explicit or drawn uniformly from the configured range), outputs.
std::vector<std::size_t> draw_layer_sizes(std::size_t inputs, std::size_t outputs, const TrainConfig& config);

/// Greedy layer-wise CD pretraining. RBM l trains on the sigmoid hidden
/// probabilities of RBM l-1. Returns one RBM per hidden layer.
std::vector<RbmParams> pretrain(const std::vector<std::size_t>& layer_sizes, const Eigen::MatrixXd& frames,
                                const TrainConfig& config);

/// Initial RBM stack used by pretrain (before any CD epoch).
std::vector<RbmParams> initial_stack(const std::vector<std::size_t>& layer_sizes, const TrainConfig& config);

/// Copies RBM weights and hidden biases into feed-forward layers (visible
/// biases are dropped) and adds a freshly initialized head.
DbnModel unroll(const std::vector<RbmParams>& stack, std::size_t outputs, HeadKind head, std::uint64_t seed);

struct ForwardPass {
  std::vector<Eigen::VectorXd> activations;  // one per hidden layer
  Eigen::VectorXd head_input;                // == activations.back()
  Eigen::VectorXd head_output;               // logits or scaled regression output
};

ForwardPass forward(const DbnModel& model, const Eigen::VectorXd& frame);

/// Last hidden layer activations for a batch of rows.
Eigen::MatrixXd hidden_features(const DbnModel& model, const Eigen::MatrixXd& frames);

/// Max-shifted softmax of a logit vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

Eigen::VectorXd predict_proba(const DbnModel& model, const Eigen::VectorXd& frame);
/// One posterior row per frame.
Eigen::MatrixXd predict_proba_batch(const DbnModel& model, const Eigen::MatrixXd& frames);

double predict_regression(const DbnModel& model, const Eigen::VectorXd& frame);
Eigen::VectorXd predict_regression_batch(const DbnModel& model, const Eigen::MatrixXd& frames);

/// Gradient of a loss with respect to every model parameter, same layout as the model.
struct Gradients {
  std::vector<DenseLayer> hidden;
  DenseLayer head;
};

/// Mean negative log-likelihood; fills `grad` when non-null.
double classifier_loss(const DbnModel& model, const Eigen::MatrixXd& frames, const std::vector<int>& labels,
                       Gradients* grad = nullptr);

/// Mean squared error in the model's scaled target space; fills `grad` when non-null.
double regressor_loss(const DbnModel& model, const Eigen::MatrixXd& frames, const std::vector<double>& targets,
                      Gradients* grad = nullptr);

struct FinetuneResult {
  DbnModel model;
  std::vector<double> epoch_loss;
};

/// Mini-batch SGD on mean NLL, epoch-level shuffling from the config seed.
FinetuneResult finetune_classifier(DbnModel model, const Eigen::MatrixXd& frames, const std::vector<int>& labels,
                                   const TrainConfig& config);

/// Mini-batch SGD on mean squared error through the linear head.
FinetuneResult finetune_regressor(DbnModel model, const Eigen::MatrixXd& frames, const std::vector<double>& targets,
                                  const TrainConfig& config);

/// Full recipe: draw sizes, pretrain, unroll, fine-tune.
FinetuneResult train_classifier(const Eigen::MatrixXd& frames, const std::vector<int>& labels, std::size_t classes,
                                const TrainConfig& config);

/// Full recipe for a wear regressor. Targets are min-max scaled to [0,1]
/// for training; the scaling is stored in the model.
FinetuneResult train_regressor(const Eigen::MatrixXd& frames, const std::vector<double>& targets,
                               const TrainConfig& config);

}  // namespace mdp_tcm
