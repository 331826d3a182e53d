#include <gtest/gtest.h>

#include <algorithm>

#include "mdp_tcm/cost_sensitive.hpp"
#include "mdp_tcm/rng.hpp"

using namespace mdp_tcm;

namespace {

Eigen::VectorXd random_simplex(std::size_t k, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  Eigen::VectorXd p(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = e(rng);
  return p / p.sum();
}

}  // namespace

TEST(ExpectedRisk, ZeroOneIsOneMinusPosterior) {
  Rng rng = make_rng(1, "t");
  const CostMatrix c = CostMatrix::zero_one(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto p = random_simplex(4, rng);
    const auto r = expected_risk(p, c);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(r(i), 1.0 - p(i), 1e-12);
    Eigen::Index lo = 0, hi = 0;
    r.minCoeff(&lo);
    p.maxCoeff(&hi);
    EXPECT_EQ(lo, hi);
  }
}

TEST(ExpectedRisk, HandEvaluatedTwoClass) {
  CostMatrix c{Eigen::Matrix2d::Zero()};
  c.entries(0, 1) = 1.0;
  c.entries(1, 0) = 10.0;
  const auto r = expected_risk(Eigen::Vector2d(0.7, 0.3), c);
  EXPECT_NEAR(r(0), 0.3, 1e-15);
  EXPECT_NEAR(r(1), 7.0, 1e-15);
}

TEST(ExpectedRisk, ZeroMatrixGivesZeroRisk) {
  const CostMatrix c{Eigen::Matrix3d::Zero()};
  EXPECT_TRUE(expected_risk(Eigen::Vector3d(0.2, 0.3, 0.5), c).isZero(0.0));
  EXPECT_THROW(expected_risk(Eigen::Vector2d(0.5, 0.5), c), std::invalid_argument);
}

TEST(CostMatrix, Validation) {
  CostMatrix c = CostMatrix::zero_one(3);
  EXPECT_NO_THROW(c.validate());
  c.entries(1, 1) = 0.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = CostMatrix::zero_one(3);
  c.entries(0, 2) = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(CostVector, Validation) {
  EXPECT_NO_THROW(CostVector::uniform(4).validate());
  EXPECT_THROW((CostVector{{0.5, 1.5}}).validate(), std::invalid_argument);
  EXPECT_THROW((CostVector{{-0.1, 0.5}}).validate(), std::invalid_argument);
  EXPECT_THROW((CostVector{{}}).validate(), std::invalid_argument);
}

TEST(Scores, UnitCostsAreIdentity) {
  const Eigen::Vector3d p(0.2, 0.5, 0.3);
  EXPECT_EQ(cost_adjusted_scores(p, CostVector::uniform(3)), p);
}

TEST(Scores, HandEvaluated) {
  const auto s = cost_adjusted_scores(Eigen::Vector2d(0.6, 0.4), CostVector{{0.5, 0.9}});
  EXPECT_NEAR(s(0), 0.30, 1e-15);
  EXPECT_NEAR(s(1), 0.36, 1e-15);
  EXPECT_EQ(predict_cs(Eigen::Vector2d(0.6, 0.4), CostVector{{0.5, 0.9}}), 1);
  EXPECT_EQ(argmax(Eigen::Vector2d(0.6, 0.4)), 0);
}

TEST(Scores, OnlyFirstClassPositive) {
  const auto s = cost_adjusted_scores(Eigen::Vector3d(0.2, 0.5, 0.3), CostVector{{1.0, 0.0, 0.0}});
  EXPECT_GT(s(0), 0.0);
  EXPECT_EQ(s(1), 0.0);
  EXPECT_EQ(s(2), 0.0);
}

TEST(Scores, DimensionMismatch) {
  EXPECT_THROW(cost_adjusted_scores(Eigen::Vector3d(0.2, 0.5, 0.3), CostVector::uniform(2)), std::invalid_argument);
}

TEST(PredictCs, TiesGoToLowestIndex) {
  EXPECT_EQ(predict_cs(Eigen::Vector3d(0.25, 0.5, 0.25), CostVector{{1.0, 0.5, 1.0}}), 0);
  EXPECT_EQ(argmax(Eigen::Vector3d(0.2, 0.4, 0.4)), 1);
}

TEST(PredictCs, UniformCostsEqualArgmax) {
  Rng rng = make_rng(2, "t");
  for (double level : {1.0, 0.37}) {
    const CostVector c = CostVector::uniform(4, level);
    for (int trial = 0; trial < 10000; ++trial) {
      const auto p = random_simplex(4, rng);
      ASSERT_EQ(predict_cs(p, c), argmax(p));
    }
  }
}

TEST(PredictCs, ScaleInvariant) {
  Rng rng = make_rng(3, "t");
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    CostVector c{{u(rng), u(rng), u(rng), u(rng)}};
    const auto p = random_simplex(4, rng);
    const int base = predict_cs(p, c);
    // Powers of two keep the scaled products exact.
    for (double s : {0.5, 0.25}) {
      CostVector scaled = c;
      for (double& v : scaled.costs) v *= s;
      ASSERT_EQ(predict_cs(p, scaled), base);
    }
  }
}

TEST(PredictCs, BatchMatchesSingle) {
  Rng rng = make_rng(4, "t");
  Eigen::MatrixXd p(20, 3);
  for (int r = 0; r < 20; ++r) p.row(r) = random_simplex(3, rng).transpose();
  const CostVector c{{0.3, 0.9, 0.6}};
  const auto batch = predict_cs_batch(p, c);
  for (int r = 0; r < 20; ++r) EXPECT_EQ(batch[static_cast<std::size_t>(r)], predict_cs(p.row(r).transpose(), c));
}
