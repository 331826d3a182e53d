#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace mdp_tcm {

/// One-vs-rest counts for a single class.
struct ClassCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

struct ConfusionCounts {
  std::vector<ClassCounts> classes;
  std::vector<std::size_t> support;  // true occurrences per class
  std::size_t n = 0;
};

double accuracy(std::span<const int> truth, std::span<const int> predicted);
ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted, int classes);

// Per-class values. A zero denominator yields 0.
double gmean(const ClassCounts& c);
double precision(const ClassCounts& c);
double recall(const ClassCounts& c);
double f1(const ClassCounts& c);

// Support-weighted averages over classes: sum_k support_k / n * metric_k.
double weighted_gmean(const ConfusionCounts& counts);
double weighted_precision(const ConfusionCounts& counts);
double weighted_recall(const ConfusionCounts& counts);
double weighted_f1(const ConfusionCounts& counts);

double rmse(std::span<const double> truth, std::span<const double> predicted);
/// Throws std::domain_error when truth has zero variance.
double r2score(std::span<const double> truth, std::span<const double> predicted);
/// Ratio, not percent. Throws std::domain_error on a zero target.
double mape(std::span<const double> truth, std::span<const double> predicted);

inline constexpr std::array<const char*, 8> kMetricKeys = {"accuracy", "gmean", "precision", "recall",
                                                           "f1",       "rmse",  "r2score",   "mape"};

/// Fields not computed for a run stay NaN.
struct MetricsReport {
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double gmean = std::numeric_limits<double>::quiet_NaN();
  double precision = std::numeric_limits<double>::quiet_NaN();
  double recall = std::numeric_limits<double>::quiet_NaN();
  double f1 = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
  double r2score = std::numeric_limits<double>::quiet_NaN();
  double mape = std::numeric_limits<double>::quiet_NaN();

  std::array<double, 8> values() const { return {accuracy, gmean, precision, recall, f1, rmse, r2score, mape}; }
};

MetricsReport classification_report(std::span<const int> truth, std::span<const int> predicted, int classes);
/// Fills rmse and r2score over all frames; mape over frames whose truth is >= mape_floor.
void add_regression(MetricsReport& report, std::span<const double> truth, std::span<const double> predicted,
                    double mape_floor = 1.0);

/// `key = value` lines in kMetricKeys order.
std::string to_key_value(const MetricsReport& report);
std::string csv_header();
std::string to_csv_row(const MetricsReport& report);

}  // namespace mdp_tcm
