#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "mdp_tcm/rng.hpp"

namespace mdp_tcm {

/// Bernoulli-Bernoulli RBM with I visible and J hidden units.
struct RbmParams {
  Eigen::MatrixXd weights;       // I x J
  Eigen::VectorXd visible_bias;  // I
  Eigen::VectorXd hidden_bias;   // J

  std::size_t visible_size() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t hidden_size() const { return static_cast<std::size_t>(weights.cols()); }

  static RbmParams zeros(std::size_t visible, std::size_t hidden);
  /// Weights ~ N(0, std^2), biases zero.
  static RbmParams random(std::size_t visible, std::size_t hidden, Rng& rng, double std = 0.01);

  bool all_finite() const;
};

struct CdConfig {
  int gibbs_steps = 1;
  double learning_rate = 0.01;
  int epochs = 1;
  int batch_size = 10;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
};

double sigmoid(double x);

/// E(v,h) = -a.v - b.h - v^T W h
double energy(const RbmParams& params, const Eigen::VectorXd& v, const Eigen::VectorXd& h);

/// p(h_j = 1 | v) = sigmoid(b_j + sum_i v_i w_ij)
Eigen::VectorXd prob_h_given_v(const RbmParams& params, const Eigen::VectorXd& v);
/// p(v_i = 1 | h) = sigmoid(a_i + sum_j h_j w_ij)
Eigen::VectorXd prob_v_given_h(const RbmParams& params, const Eigen::VectorXd& h);

/// Row-batched conditionals (one sample per row).
Eigen::MatrixXd hidden_probs(const RbmParams& params, const Eigen::MatrixXd& visible);
Eigen::MatrixXd visible_probs(const RbmParams& params, const Eigen::MatrixXd& hidden);

Eigen::VectorXd sample_hidden(const RbmParams& params, const Eigen::VectorXd& v, Rng& rng);
Eigen::VectorXd sample_visible(const RbmParams& params, const Eigen::VectorXd& h, Rng& rng);

/// Independent Bernoulli draw per entry.
Eigen::MatrixXd bernoulli(const Eigen::MatrixXd& probs, Rng& rng);

/// One CD-k step on a batch. Intermediate hidden states are binary samples;
/// visible reconstructions and the final hidden statistics are probabilities.
RbmParams cd_update(const RbmParams& params, const Eigen::MatrixXd& batch, const CdConfig& config,
                    Rng& rng);

/// `config.epochs` passes of shuffled mini-batch CD over `data`.
RbmParams train_rbm(RbmParams params, const Eigen::MatrixXd& data, const CdConfig& config);

/// Mean binary cross-entropy between data and its one-step mean-field reconstruction.
double reconstruction_cross_entropy(const RbmParams& params, const Eigen::MatrixXd& data);

// Brute-force oracle by explicit partition function. Only for I + J <= 20.

inline constexpr std::size_t kMaxExactUnits = 20;

/// Joint p(v,h) over all binary states. Entry index = v_bits | (h_bits << I),
/// bit i of v_bits is v_i.
struct ExactJoint {
  std::size_t visible = 0;
  std::size_t hidden = 0;
  std::vector<double> probability;
  double log_partition = 0.0;
};

ExactJoint exact_joint(const RbmParams& params);

/// p(h_j = 1 | v) by marginalizing the explicit joint; v must be binary.
Eigen::VectorXd exact_conditional(const RbmParams& params, const Eigen::VectorXd& v);
/// p(v_i = 1 | h) by the same route; h must be binary.
Eigen::VectorXd exact_conditional_visible(const RbmParams& params, const Eigen::VectorXd& h);

}  // namespace mdp_tcm
