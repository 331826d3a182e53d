#include "mdp_tcm/cost_sensitive.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mdp_tcm {

CostVector CostVector::uniform(std::size_t classes, double value) {
  CostVector c{std::vector<double>(classes, value)};
  c.validate();
  return c;
}

void CostVector::validate() const {
  if (costs.empty()) throw std::invalid_argument("CostVector: empty");
  for (double c : costs) {
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("CostVector: entry outside [0,1]");
  }
}

CostMatrix CostMatrix::zero_one(std::size_t classes) {
  const auto k = static_cast<Eigen::Index>(classes);
  CostMatrix m{Eigen::MatrixXd::Ones(k, k)};
  m.entries.diagonal().setZero();
  return m;
}

void CostMatrix::validate() const {
  if (entries.rows() != entries.cols()) throw std::invalid_argument("CostMatrix: not square");
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    if (entries(i, i) != 0.0) throw std::invalid_argument("CostMatrix: nonzero diagonal");
    for (Eigen::Index j = 0; j < entries.cols(); ++j) {
      if (!(entries(i, j) >= 0.0) || !std::isfinite(entries(i, j))) {
        throw std::invalid_argument("CostMatrix: negative or non-finite entry");
      }
    }
  }
}

Eigen::VectorXd expected_risk(const Eigen::VectorXd& posteriors, const CostMatrix& costs) {
  costs.validate();
  if (costs.entries.cols() != posteriors.size()) {
    throw std::invalid_argument("expected_risk: posterior length does not match cost matrix");
  }
  return costs.entries * posteriors;
}

Eigen::VectorXd cost_adjusted_scores(const Eigen::VectorXd& posteriors, const CostVector& costs) {
  costs.validate();
  if (static_cast<std::size_t>(posteriors.size()) != costs.size()) {
    throw std::invalid_argument("cost_adjusted_scores: " + std::to_string(posteriors.size()) +
                                " posteriors vs " + std::to_string(costs.size()) + " costs");
  }
  Eigen::VectorXd out(posteriors.size());
  for (Eigen::Index j = 0; j < posteriors.size(); ++j) out(j) = posteriors(j) * costs.costs[static_cast<std::size_t>(j)];
  return out;
}

int argmax(const Eigen::VectorXd& values) {
  if (values.size() == 0) throw std::invalid_argument("argmax: empty vector");
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < values.size(); ++j) {
    if (values(j) > values(best)) best = j;
  }
  return static_cast<int>(best);
}

int predict_cs(const Eigen::VectorXd& posteriors, const CostVector& costs) {
  return argmax(cost_adjusted_scores(posteriors, costs));
}

std::vector<int> predict_cs_batch(const Eigen::MatrixXd& posteriors, const CostVector& costs) {
  costs.validate();
  if (static_cast<std::size_t>(posteriors.cols()) != costs.size()) {
    throw std::invalid_argument("predict_cs_batch: posterior width does not match costs");
  }
  std::vector<int> out(static_cast<std::size_t>(posteriors.rows()));
  for (Eigen::Index r = 0; r < posteriors.rows(); ++r) {
    Eigen::Index best = 0;
    double best_score = posteriors(r, 0) * costs.costs[0];
    for (Eigen::Index j = 1; j < posteriors.cols(); ++j) {
      const double s = posteriors(r, j) * costs.costs[static_cast<std::size_t>(j)];
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

}  // namespace mdp_tcm
