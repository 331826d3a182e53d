#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace mdp_tcm {

/// One misclassification cost per class, each in [0,1].
struct CostVector {
  std::vector<double> costs;

  static CostVector uniform(std::size_t classes, double value = 1.0);
  std::size_t size() const { return costs.size(); }
  /// Throws std::invalid_argument on an entry outside [0,1] or non-finite.
  void validate() const;
};

/// Full K x K cost matrix, entry (i, j) = cost of predicting i when the truth is j.
/// Zero diagonal, nonnegative entries.
struct CostMatrix {
  Eigen::MatrixXd entries;

  /// 0 on the diagonal, 1 elsewhere.
  static CostMatrix zero_one(std::size_t classes);
  void validate() const;
};

/// R(i|x) = sum_j P(j|x) C(i,j)
Eigen::VectorXd expected_risk(const Eigen::VectorXd& posteriors, const CostMatrix& costs);

/// score_j = P(j|x) * c_j
Eigen::VectorXd cost_adjusted_scores(const Eigen::VectorXd& posteriors, const CostVector& costs);

/// argmax_j of the cost-adjusted score; ties go to the lowest index.
int predict_cs(const Eigen::VectorXd& posteriors, const CostVector& costs);

/// predict_cs for every posterior row.
std::vector<int> predict_cs_batch(const Eigen::MatrixXd& posteriors, const CostVector& costs);

/// Lowest-index argmax.
int argmax(const Eigen::VectorXd& values);

}  // namespace mdp_tcm
