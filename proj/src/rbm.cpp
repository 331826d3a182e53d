#include "mdp_tcm/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mdp_tcm/errors.hpp"

namespace mdp_tcm {

namespace {

void require_visible(const RbmParams& p, Eigen::Index n, const char* who) {
  if (n != p.weights.rows()) {
    throw std::invalid_argument(std::string(who) + ": visible dimension mismatch");
  }
}

void require_hidden(const RbmParams& p, Eigen::Index n, const char* who) {
  if (n != p.weights.cols()) {
    throw std::invalid_argument(std::string(who) + ": hidden dimension mismatch");
  }
}

Eigen::MatrixXd sigmoid_matrix(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double z) { return sigmoid(z); });
}

Eigen::VectorXd bits_to_vector(std::size_t bits, std::size_t n) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i)) = (bits >> i) & 1U ? 1.0 : 0.0;
  return out;
}

std::size_t vector_to_bits(const Eigen::VectorXd& v, const char* who) {
  std::size_t bits = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0 && v(i) != 1.0) throw std::invalid_argument(std::string(who) + ": state must be binary");
    if (v(i) == 1.0) bits |= std::size_t{1} << i;
  }
  return bits;
}

}  // namespace

RbmParams RbmParams::zeros(std::size_t visible, std::size_t hidden) {
  const auto i = static_cast<Eigen::Index>(visible);
  const auto j = static_cast<Eigen::Index>(hidden);
  return {Eigen::MatrixXd::Zero(i, j), Eigen::VectorXd::Zero(i), Eigen::VectorXd::Zero(j)};
}

RbmParams RbmParams::random(std::size_t visible, std::size_t hidden, Rng& rng, double std) {
  RbmParams p = zeros(visible, hidden);
  std::normal_distribution<double> normal(0.0, std);
  for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) p.weights(r, c) = normal(rng);
  }
  return p;
}

bool RbmParams::all_finite() const {
  return weights.allFinite() && visible_bias.allFinite() && hidden_bias.allFinite();
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double energy(const RbmParams& params, const Eigen::VectorXd& v, const Eigen::VectorXd& h) {
  require_visible(params, v.size(), "energy");
  require_hidden(params, h.size(), "energy");
  return -params.visible_bias.dot(v) - params.hidden_bias.dot(h) - v.dot(params.weights * h);
}

Eigen::VectorXd prob_h_given_v(const RbmParams& params, const Eigen::VectorXd& v) {
  require_visible(params, v.size(), "prob_h_given_v");
  return sigmoid_matrix(params.hidden_bias + params.weights.transpose() * v);
}

Eigen::VectorXd prob_v_given_h(const RbmParams& params, const Eigen::VectorXd& h) {
  require_hidden(params, h.size(), "prob_v_given_h");
  return sigmoid_matrix(params.visible_bias + params.weights * h);
}

Eigen::MatrixXd hidden_probs(const RbmParams& params, const Eigen::MatrixXd& visible) {
  require_visible(params, visible.cols(), "hidden_probs");
  Eigen::MatrixXd pre = visible * params.weights;
  pre.rowwise() += params.hidden_bias.transpose();
  return sigmoid_matrix(pre);
}

Eigen::MatrixXd visible_probs(const RbmParams& params, const Eigen::MatrixXd& hidden) {
  require_hidden(params, hidden.cols(), "visible_probs");
  Eigen::MatrixXd pre = hidden * params.weights.transpose();
  pre.rowwise() += params.visible_bias.transpose();
  return sigmoid_matrix(pre);
}

Eigen::MatrixXd bernoulli(const Eigen::MatrixXd& probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd out(probs.rows(), probs.cols());
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    for (Eigen::Index r = 0; r < probs.rows(); ++r) out(r, c) = unit(rng) < probs(r, c) ? 1.0 : 0.0;
  }
  return out;
}

Eigen::VectorXd sample_hidden(const RbmParams& params, const Eigen::VectorXd& v, Rng& rng) {
  return bernoulli(prob_h_given_v(params, v), rng);
}

Eigen::VectorXd sample_visible(const RbmParams& params, const Eigen::VectorXd& h, Rng& rng) {
  return bernoulli(prob_v_given_h(params, h), rng);
}

RbmParams cd_update(const RbmParams& params, const Eigen::MatrixXd& batch, const CdConfig& config,
                    Rng& rng) {
  if (batch.rows() == 0) throw DataError("cd_update: empty batch");
  require_visible(params, batch.cols(), "cd_update");
  if (config.gibbs_steps < 1) throw std::invalid_argument("cd_update: gibbs_steps must be >= 1");

  const Eigen::MatrixXd h0 = hidden_probs(params, batch);
  Eigen::MatrixXd h_state = bernoulli(h0, rng);
  Eigen::MatrixXd v_recon;
  Eigen::MatrixXd h_recon;
  for (int step = 0; step < config.gibbs_steps; ++step) {
    v_recon = visible_probs(params, h_state);
    h_recon = hidden_probs(params, v_recon);
    if (step + 1 < config.gibbs_steps) h_state = bernoulli(h_recon, rng);
  }

  const double scale = config.learning_rate / static_cast<double>(batch.rows());
  RbmParams out = params;
  out.weights += scale * (batch.transpose() * h0 - v_recon.transpose() * h_recon);
  if (config.weight_decay > 0.0) out.weights -= config.learning_rate * config.weight_decay * params.weights;
  out.visible_bias += scale * (batch - v_recon).colwise().sum().transpose();
  out.hidden_bias += scale * (h0 - h_recon).colwise().sum().transpose();
  return out;
}

RbmParams train_rbm(RbmParams params, const Eigen::MatrixXd& data, const CdConfig& config) {
  if (data.rows() == 0) throw DataError("train_rbm: empty training set");
  if (config.batch_size < 1) throw std::invalid_argument("train_rbm: batch_size must be positive");
  Rng rng = make_rng(config.seed, "rbm.cd");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<Eigen::Index>(config.batch_size);
  Eigen::MatrixXd rows;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < data.rows(); start += batch) {
      const Eigen::Index len = std::min(batch, data.rows() - start);
      rows.resize(len, data.cols());
      for (Eigen::Index r = 0; r < len; ++r) rows.row(r) = data.row(order[static_cast<std::size_t>(start + r)]);
      params = cd_update(params, rows, config, rng);
    }
    if (!params.all_finite()) {
      throw NumericError("train_rbm: non-finite parameters after epoch " + std::to_string(epoch));
    }
  }
  return params;
}

double reconstruction_cross_entropy(const RbmParams& params, const Eigen::MatrixXd& data) {
  if (data.rows() == 0) throw DataError("reconstruction_cross_entropy: empty data");
  const Eigen::MatrixXd recon = visible_probs(params, hidden_probs(params, data));
  constexpr double kEps = 1e-12;
  double total = 0.0;
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
      const double p = std::clamp(recon(r, c), kEps, 1.0 - kEps);
      const double x = data(r, c);
      total -= x * std::log(p) + (1.0 - x) * std::log(1.0 - p);
    }
  }
  return total / static_cast<double>(data.rows());
}

ExactJoint exact_joint(const RbmParams& params) {
  const std::size_t nv = params.visible_size();
  const std::size_t nh = params.hidden_size();
  if (nv + nh > kMaxExactUnits) {
    throw std::invalid_argument("exact_joint: I + J = " + std::to_string(nv + nh) + " exceeds " +
                                std::to_string(kMaxExactUnits));
  }
  ExactJoint out{nv, nh, {}, 0.0};
  const std::size_t states = std::size_t{1} << (nv + nh);
  std::vector<double> neg_energy(states);
  for (std::size_t s = 0; s < states; ++s) {
    const std::size_t vb = s & ((std::size_t{1} << nv) - 1);
    const std::size_t hb = s >> nv;
    neg_energy[s] = -energy(params, bits_to_vector(vb, nv), bits_to_vector(hb, nh));
  }
  const double top = *std::max_element(neg_energy.begin(), neg_energy.end());
  double z = 0.0;
  for (double e : neg_energy) z += std::exp(e - top);
  out.log_partition = top + std::log(z);
  out.probability.resize(states);
  for (std::size_t s = 0; s < states; ++s) out.probability[s] = std::exp(neg_energy[s] - out.log_partition);
  return out;
}

Eigen::VectorXd exact_conditional(const RbmParams& params, const Eigen::VectorXd& v) {
  require_visible(params, v.size(), "exact_conditional");
  const ExactJoint joint = exact_joint(params);
  const std::size_t vb = vector_to_bits(v, "exact_conditional");
  Eigen::VectorXd on = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(joint.hidden));
  double marginal = 0.0;
  for (std::size_t hb = 0; hb < (std::size_t{1} << joint.hidden); ++hb) {
    const double p = joint.probability[vb | (hb << joint.visible)];
    marginal += p;
    for (std::size_t j = 0; j < joint.hidden; ++j) {
      if ((hb >> j) & 1U) on(static_cast<Eigen::Index>(j)) += p;
    }
  }
  return on / marginal;
}

Eigen::VectorXd exact_conditional_visible(const RbmParams& params, const Eigen::VectorXd& h) {
  require_hidden(params, h.size(), "exact_conditional_visible");
  const ExactJoint joint = exact_joint(params);
  const std::size_t hb = vector_to_bits(h, "exact_conditional_visible");
  Eigen::VectorXd on = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(joint.visible));
  double marginal = 0.0;
  for (std::size_t vb = 0; vb < (std::size_t{1} << joint.visible); ++vb) {
    const double p = joint.probability[vb | (hb << joint.visible)];
    marginal += p;
    for (std::size_t i = 0; i < joint.visible; ++i) {
      if ((vb >> i) & 1U) on(static_cast<Eigen::Index>(i)) += p;
    }
  }
  return on / marginal;
}

}  // namespace mdp_tcm
