#include "mdp_tcm/dbn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>

#include "mdp_tcm/errors.hpp"

namespace mdp_tcm {

const char* head_kind_name(HeadKind kind) { return kind == HeadKind::Softmax ? "softmax" : "linear"; }

bool DbnModel::all_finite() const {
  for (const auto& l : hidden) {
    if (!l.weights.allFinite() || !l.bias.allFinite()) return false;
  }
  return head.weights.allFinite() && head.bias.allFinite() && std::isfinite(target_offset) &&
         std::isfinite(target_scale);
}

void DbnModel::check_shapes() const {
  if (layer_sizes.size() != hidden.size() + 2) throw std::invalid_argument("DbnModel: layer count mismatch");
  for (std::size_t l = 0; l < hidden.size(); ++l) {
    const auto& layer = hidden[l];
    if (static_cast<std::size_t>(layer.weights.rows()) != layer_sizes[l] ||
        static_cast<std::size_t>(layer.weights.cols()) != layer_sizes[l + 1] ||
        static_cast<std::size_t>(layer.bias.size()) != layer_sizes[l + 1]) {
      throw std::invalid_argument("DbnModel: hidden layer " + std::to_string(l) + " has inconsistent shape");
    }
  }
  const std::size_t last = layer_sizes[layer_sizes.size() - 2];
  if (static_cast<std::size_t>(head.weights.rows()) != last ||
      static_cast<std::size_t>(head.weights.cols()) != layer_sizes.back() ||
      static_cast<std::size_t>(head.bias.size()) != layer_sizes.back()) {
    throw std::invalid_argument("DbnModel: head shape does not match last hidden layer");
  }
  if (head_kind == HeadKind::Linear && layer_sizes.back() != 1) {
    throw std::invalid_argument("DbnModel: linear head must have one output");
  }
}

TrainConfig TrainConfig::preset(std::string_view name) {
  TrainConfig c;
  if (name == "prognosis-default") {
    c.pretrain_epochs = 200;
    c.finetune_epochs = 500;
    c.batch_size = 500;
    c.hidden_min = 5;
    c.hidden_max = 60;
  } else if (name == "diagnosis-default") {
    c.pretrain_epochs = 300;
    c.finetune_epochs = 1000;
    c.batch_size = 500;
    c.hidden_min = 10;
    c.hidden_max = 50;
  } else if (name == "desk") {
    // Reduced budget for the single-core synthetic experiments.
    c.pretrain_epochs = 20;
    c.finetune_epochs = 150;
    c.batch_size = 10;
    c.hidden_min = 20;
    c.hidden_max = 50;
    c.hidden_layers = 2;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
  }
  c.learning_rate = 0.01;
  return c;
}

void TrainConfig::validate() const {
  if (pretrain_epochs < 0 || finetune_epochs < 0) throw std::invalid_argument("TrainConfig: negative epochs");
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be positive");
  if (hidden_sizes.empty()) {
    if (hidden_layers < 1) throw std::invalid_argument("TrainConfig: need at least one hidden layer");
    if (hidden_min < 1 || hidden_max < hidden_min) throw std::invalid_argument("TrainConfig: bad hidden range");
  }
  if (gibbs_steps < 1) throw std::invalid_argument("TrainConfig: gibbs_steps must be positive");
}

std::vector<std::size_t> draw_layer_sizes(std::size_t inputs, std::size_t outputs, const TrainConfig& config) {
  config.validate();
  std::vector<std::size_t> sizes{inputs};
  if (!config.hidden_sizes.empty()) {
    sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  } else {
    Rng rng = make_rng(config.seed, "dbn.layer_sizes");
    std::uniform_int_distribution<int> draw(config.hidden_min, config.hidden_max);
    for (int l = 0; l < config.hidden_layers; ++l) sizes.push_back(static_cast<std::size_t>(draw(rng)));
  }
  sizes.push_back(outputs);
  return sizes;
}

std::vector<RbmParams> initial_stack(const std::vector<std::size_t>& layer_sizes, const TrainConfig& config) {
  if (layer_sizes.size() < 3) throw std::invalid_argument("DBN needs input, at least one hidden, output");
  std::vector<RbmParams> stack;
  for (std::size_t l = 0; l + 2 < layer_sizes.size(); ++l) {
    Rng rng = make_rng(config.seed, "dbn.init.layer" + std::to_string(l));
    stack.push_back(RbmParams::random(layer_sizes[l], layer_sizes[l + 1], rng));
  }
  return stack;
}

std::vector<RbmParams> pretrain(const std::vector<std::size_t>& layer_sizes, const Eigen::MatrixXd& frames,
                                const TrainConfig& config) {
  if (frames.rows() == 0) throw DataError("pretrain: empty training set");
  if (static_cast<std::size_t>(frames.cols()) != layer_sizes.front()) {
    throw std::invalid_argument("pretrain: frame width does not match input layer");
  }
  std::vector<RbmParams> stack = initial_stack(layer_sizes, config);
  Eigen::MatrixXd input = frames;
  for (std::size_t l = 0; l < stack.size(); ++l) {
    CdConfig cd;
    cd.gibbs_steps = config.gibbs_steps;
    cd.learning_rate = config.learning_rate;
    cd.epochs = config.pretrain_epochs;
    cd.batch_size = config.batch_size;
    cd.weight_decay = config.weight_decay;
    cd.seed = derive_seed(config.seed, "dbn.pretrain.layer" + std::to_string(l));
    stack[l] = train_rbm(std::move(stack[l]), input, cd);
    if (l + 1 < stack.size()) input = hidden_probs(stack[l], input);
  }
  return stack;
}

DbnModel unroll(const std::vector<RbmParams>& stack, std::size_t outputs, HeadKind head, std::uint64_t seed) {
  if (stack.empty()) throw std::invalid_argument("unroll: empty RBM stack");
  if (head == HeadKind::Linear && outputs != 1) throw std::invalid_argument("unroll: linear head has one output");
  DbnModel model;
  model.head_kind = head;
  model.layer_sizes.push_back(stack.front().visible_size());
  for (std::size_t l = 0; l < stack.size(); ++l) {
    if (l > 0 && stack[l].visible_size() != stack[l - 1].hidden_size()) {
      throw std::invalid_argument("unroll: RBM " + std::to_string(l) + " does not stack on its predecessor");
    }
    model.hidden.push_back({stack[l].weights, stack[l].hidden_bias});
    model.layer_sizes.push_back(stack[l].hidden_size());
  }
  model.layer_sizes.push_back(outputs);
  Rng rng = make_rng(seed, "dbn.init.head");
  const double fan_in = static_cast<double>(stack.back().hidden_size());
  const double std_dev = head == HeadKind::Linear ? 0.01 : 1.0 / std::sqrt(fan_in);
  const RbmParams h = RbmParams::random(stack.back().hidden_size(), outputs, rng, std_dev);
  model.head = {h.weights, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(outputs))};
  return model;
}

namespace {

void require_input(const DbnModel& model, Eigen::Index width) {
  if (static_cast<std::size_t>(width) != model.input_size()) {
    throw DataError("DBN input width " + std::to_string(width) + " != model input " +
                    std::to_string(model.input_size()));
  }
}

struct BatchForward {
  std::vector<Eigen::MatrixXd> pre;  // per hidden layer
  std::vector<Eigen::MatrixXd> act;
  Eigen::MatrixXd out;
};

BatchForward forward_batch(const DbnModel& model, const Eigen::MatrixXd& x) {
  require_input(model, x.cols());
  BatchForward f;
  const Eigen::MatrixXd* in = &x;
  for (const auto& layer : model.hidden) {
    Eigen::MatrixXd z = (*in) * layer.weights;
    z.rowwise() += layer.bias.transpose();
    f.act.push_back(z.cwiseMax(0.0));
    f.pre.push_back(std::move(z));
    in = &f.act.back();
  }
  f.out = (*in) * model.head.weights;
  f.out.rowwise() += model.head.bias.transpose();
  return f;
}

// d_out holds dLoss/dOutput for every row of the batch.
void backprop(const DbnModel& model, const Eigen::MatrixXd& x, const BatchForward& f, Eigen::MatrixXd d_out,
              Gradients& grad) {
  grad.hidden.resize(model.hidden.size());
  const Eigen::MatrixXd& last = f.act.empty() ? x : f.act.back();
  grad.head.weights = last.transpose() * d_out;
  grad.head.bias = d_out.colwise().sum().transpose();
  Eigen::MatrixXd d_act = d_out * model.head.weights.transpose();
  for (std::size_t l = model.hidden.size(); l-- > 0;) {
    Eigen::MatrixXd d_pre = d_act.cwiseProduct((f.pre[l].array() > 0.0).cast<double>().matrix());
    const Eigen::MatrixXd& in = l == 0 ? x : f.act[l - 1];
    grad.hidden[l].weights = in.transpose() * d_pre;
    grad.hidden[l].bias = d_pre.colwise().sum().transpose();
    if (l > 0) d_act = d_pre * model.hidden[l].weights.transpose();
  }
}

void apply(DbnModel& model, const Gradients& grad, double lr) {
  for (std::size_t l = 0; l < model.hidden.size(); ++l) {
    model.hidden[l].weights -= lr * grad.hidden[l].weights;
    model.hidden[l].bias -= lr * grad.hidden[l].bias;
  }
  model.head.weights -= lr * grad.head.weights;
  model.head.bias -= lr * grad.head.bias;
}

void require_head(const DbnModel& model, HeadKind want, const char* who) {
  if (model.head_kind != want) {
    throw std::logic_error(std::string(who) + ": model has a " + head_kind_name(model.head_kind) + " head");
  }
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

template <typename Target, typename LossFn>
FinetuneResult run_sgd(DbnModel model, const Eigen::MatrixXd& frames, const std::vector<Target>& targets,
                       const TrainConfig& config, const char* stream, LossFn loss_fn) {
  config.validate();
  if (frames.rows() == 0) throw DataError(std::string(stream) + ": empty training set");
  if (targets.size() != static_cast<std::size_t>(frames.rows())) {
    throw DataError(std::string(stream) + ": target count does not match frame count");
  }
  require_input(model, frames.cols());
  FinetuneResult result{std::move(model), {}};
  Rng rng = make_rng(config.seed, stream);
  std::vector<std::size_t> order(targets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);
  Gradients grad;
  std::vector<Target> batch_targets;
  for (int epoch = 0; epoch < config.finetune_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::span<const std::size_t> rows =
          std::span<const std::size_t>(order).subspan(start, std::min(batch, order.size() - start));
      const Eigen::MatrixXd x = gather_rows(frames, rows);
      batch_targets.clear();
      for (std::size_t r : rows) batch_targets.push_back(targets[r]);
      const double loss = loss_fn(result.model, x, batch_targets, &grad);
      total += loss * static_cast<double>(rows.size());
      apply(result.model, grad, config.learning_rate);
    }
    result.epoch_loss.push_back(total / static_cast<double>(order.size()));
    if (!result.model.all_finite() || !std::isfinite(result.epoch_loss.back())) {
      throw NumericError(std::string(stream) + ": non-finite parameters after epoch " + std::to_string(epoch));
    }
  }
  return result;
}

}  // namespace

ForwardPass forward(const DbnModel& model, const Eigen::VectorXd& frame) {
  require_input(model, frame.size());
  ForwardPass pass;
  Eigen::VectorXd a = frame;
  for (const auto& layer : model.hidden) {
    a = (layer.weights.transpose() * a + layer.bias).cwiseMax(0.0);
    pass.activations.push_back(a);
  }
  pass.head_input = a;
  pass.head_output = model.head.weights.transpose() * a + model.head.bias;
  return pass;
}

Eigen::MatrixXd hidden_features(const DbnModel& model, const Eigen::MatrixXd& frames) {
  BatchForward f = forward_batch(model, frames);
  return f.act.empty() ? frames : std::move(f.act.back());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - top).exp().matrix();
  return e / e.sum();
}

Eigen::VectorXd predict_proba(const DbnModel& model, const Eigen::VectorXd& frame) {
  require_head(model, HeadKind::Softmax, "predict_proba");
  return softmax(forward(model, frame).head_output);
}

// Inference runs row by row so that a frame's output never depends on
// which other frames share its batch.
Eigen::MatrixXd predict_proba_batch(const DbnModel& model, const Eigen::MatrixXd& frames) {
  require_head(model, HeadKind::Softmax, "predict_proba");
  require_input(model, frames.cols());
  Eigen::MatrixXd p(frames.rows(), static_cast<Eigen::Index>(model.output_size()));
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    p.row(r) = softmax(forward(model, frames.row(r).transpose()).head_output).transpose();
  }
  return p;
}

double predict_regression(const DbnModel& model, const Eigen::VectorXd& frame) {
  require_head(model, HeadKind::Linear, "predict_regression");
  return model.target_offset + model.target_scale * forward(model, frame).head_output(0);
}

Eigen::VectorXd predict_regression_batch(const DbnModel& model, const Eigen::MatrixXd& frames) {
  require_head(model, HeadKind::Linear, "predict_regression");
  require_input(model, frames.cols());
  Eigen::VectorXd y(frames.rows());
  for (Eigen::Index r = 0; r < frames.rows(); ++r) {
    y(r) = model.target_offset + model.target_scale * forward(model, frames.row(r).transpose()).head_output(0);
  }
  return y;
}

double classifier_loss(const DbnModel& model, const Eigen::MatrixXd& frames, const std::vector<int>& labels,
                       Gradients* grad) {
  require_head(model, HeadKind::Softmax, "classifier_loss");
  if (labels.size() != static_cast<std::size_t>(frames.rows()) || labels.empty()) {
    throw DataError("classifier_loss: label count does not match frame count");
  }
  const auto k = static_cast<int>(model.output_size());
  BatchForward f = forward_batch(model, frames);
  const auto n = static_cast<double>(labels.size());
  Eigen::MatrixXd d_out(f.out.rows(), f.out.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < f.out.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= k) throw std::out_of_range("classifier_loss: label " + std::to_string(y) + " out of range");
    const Eigen::VectorXd logits = f.out.row(r).transpose();
    const double top = logits.maxCoeff();
    const double log_z = top + std::log((logits.array() - top).exp().sum());
    loss -= logits(y) - log_z;
    d_out.row(r) = (logits.array() - log_z).exp().matrix().transpose();
    d_out(r, y) -= 1.0;
  }
  if (grad) backprop(model, frames, f, d_out / n, *grad);
  return loss / n;
}

double regressor_loss(const DbnModel& model, const Eigen::MatrixXd& frames, const std::vector<double>& targets,
                      Gradients* grad) {
  require_head(model, HeadKind::Linear, "regressor_loss");
  if (targets.size() != static_cast<std::size_t>(frames.rows()) || targets.empty()) {
    throw DataError("regressor_loss: target count does not match frame count");
  }
  BatchForward f = forward_batch(model, frames);
  const auto n = static_cast<double>(targets.size());
  Eigen::MatrixXd d_out(f.out.rows(), 1);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < f.out.rows(); ++r) {
    const double scaled = (targets[static_cast<std::size_t>(r)] - model.target_offset) / model.target_scale;
    const double err = f.out(r, 0) - scaled;
    loss += err * err;
    d_out(r, 0) = 2.0 * err / n;
  }
  if (grad) backprop(model, frames, f, std::move(d_out), *grad);
  return loss / n;
}

FinetuneResult finetune_classifier(DbnModel model, const Eigen::MatrixXd& frames, const std::vector<int>& labels,
                                   const TrainConfig& config) {
  require_head(model, HeadKind::Softmax, "finetune_classifier");
  const auto k = static_cast<int>(model.output_size());
  for (int y : labels) {
    if (y < 0 || y >= k) throw std::out_of_range("finetune_classifier: label " + std::to_string(y) + " out of range");
  }
  return run_sgd(std::move(model), frames, labels, config, "dbn.finetune.classifier",
                 [](const DbnModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y, Gradients* g) {
                   return classifier_loss(m, x, y, g);
                 });
}

FinetuneResult finetune_regressor(DbnModel model, const Eigen::MatrixXd& frames, const std::vector<double>& targets,
                                  const TrainConfig& config) {
  require_head(model, HeadKind::Linear, "finetune_regressor");
  for (double t : targets) {
    if (!std::isfinite(t)) throw DataError("finetune_regressor: non-finite wear target");
  }
  return run_sgd(std::move(model), frames, targets, config, "dbn.finetune.regressor",
                 [](const DbnModel& m, const Eigen::MatrixXd& x, const std::vector<double>& y, Gradients* g) {
                   return regressor_loss(m, x, y, g);
                 });
}

FinetuneResult train_classifier(const Eigen::MatrixXd& frames, const std::vector<int>& labels, std::size_t classes,
                                const TrainConfig& config) {
  if (frames.rows() == 0) throw DataError("train_classifier: empty training set");
  const auto sizes = draw_layer_sizes(static_cast<std::size_t>(frames.cols()), classes, config);
  DbnModel model = unroll(pretrain(sizes, frames, config), classes, HeadKind::Softmax, config.seed);
  return finetune_classifier(std::move(model), frames, labels, config);
}

FinetuneResult train_regressor(const Eigen::MatrixXd& frames, const std::vector<double>& targets,
                               const TrainConfig& config) {
  if (frames.rows() == 0 || targets.empty()) throw DataError("train_regressor: empty training set");
  const auto sizes = draw_layer_sizes(static_cast<std::size_t>(frames.cols()), 1, config);
  DbnModel model = unroll(pretrain(sizes, frames, config), 1, HeadKind::Linear, config.seed);
  const auto [lo, hi] = std::minmax_element(targets.begin(), targets.end());
  model.target_offset = *lo;
  model.target_scale = *hi > *lo ? *hi - *lo : 1.0;
  return finetune_regressor(std::move(model), frames, targets, config);
}

}  // namespace mdp_tcm
