#include "mdp_tcm/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace mdp_tcm {

namespace {

void require_pair(std::size_t a, std::size_t b, const char* who) {
  if (a != b) throw std::invalid_argument(std::string(who) + ": length mismatch");
  if (a == 0) throw std::invalid_argument(std::string(who) + ": empty input");
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

template <typename Metric>
double weighted(const ConfusionCounts& counts, Metric metric) {
  if (counts.n == 0) throw std::invalid_argument("weighted metric: no samples");
  double total = 0.0;
  for (std::size_t k = 0; k < counts.classes.size(); ++k) {
    if (counts.support[k] == 0) continue;
    total += static_cast<double>(counts.support[k]) / static_cast<double>(counts.n) * metric(counts.classes[k]);
  }
  return total;
}

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

double accuracy(std::span<const int> truth, std::span<const int> predicted) {
  require_pair(truth.size(), predicted.size(), "accuracy");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += truth[i] == predicted[i];
  return ratio(hit, truth.size());
}

ConfusionCounts confusion(std::span<const int> truth, std::span<const int> predicted, int classes) {
  require_pair(truth.size(), predicted.size(), "confusion");
  if (classes < 1) throw std::invalid_argument("confusion: classes must be positive");
  const auto k = static_cast<std::size_t>(classes);
  ConfusionCounts out{std::vector<ClassCounts>(k), std::vector<std::size_t>(k, 0), truth.size()};
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int y = truth[i];
    const int p = predicted[i];
    if (y < 0 || y >= classes || p < 0 || p >= classes) {
      throw std::out_of_range("confusion: label outside [0, " + std::to_string(classes) + ")");
    }
    ++out.support[static_cast<std::size_t>(y)];
    for (std::size_t c = 0; c < k; ++c) {
      const bool is_true = static_cast<std::size_t>(y) == c;
      const bool is_pred = static_cast<std::size_t>(p) == c;
      auto& cc = out.classes[c];
      if (is_true && is_pred) ++cc.tp;
      else if (is_pred) ++cc.fp;
      else if (is_true) ++cc.fn;
      else ++cc.tn;
    }
  }
  return out;
}

double gmean(const ClassCounts& c) { return std::sqrt(ratio(c.tp, c.tp + c.fn) * ratio(c.tn, c.tn + c.fp)); }
double precision(const ClassCounts& c) { return ratio(c.tp, c.tp + c.fp); }
double recall(const ClassCounts& c) { return ratio(c.tp, c.tp + c.fn); }

double f1(const ClassCounts& c) {
  const double p = precision(c);
  const double r = recall(c);
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

double weighted_gmean(const ConfusionCounts& counts) { return weighted(counts, [](const ClassCounts& c) { return gmean(c); }); }
double weighted_precision(const ConfusionCounts& counts) {
  return weighted(counts, [](const ClassCounts& c) { return precision(c); });
}
double weighted_recall(const ConfusionCounts& counts) { return weighted(counts, [](const ClassCounts& c) { return recall(c); }); }
double weighted_f1(const ConfusionCounts& counts) { return weighted(counts, [](const ClassCounts& c) { return f1(c); }); }

double rmse(std::span<const double> truth, std::span<const double> predicted) {
  require_pair(truth.size(), predicted.size(), "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

double r2score(std::span<const double> truth, std::span<const double> predicted) {
  require_pair(truth.size(), predicted.size(), "r2score");
  double mean = 0.0;
  for (double y : truth) mean += y;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(ss_tot > 0.0)) throw std::domain_error("r2score: truth has zero variance");
  return 1.0 - ss_res / ss_tot;
}

double mape(std::span<const double> truth, std::span<const double> predicted) {
  require_pair(truth.size(), predicted.size(), "mape");
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 0.0) throw std::domain_error("mape: zero target at index " + std::to_string(i));
    sum += std::abs((truth[i] - predicted[i]) / truth[i]);
  }
  return sum / static_cast<double>(truth.size());
}

MetricsReport classification_report(std::span<const int> truth, std::span<const int> predicted, int classes) {
  const ConfusionCounts counts = confusion(truth, predicted, classes);
  MetricsReport r;
  r.accuracy = accuracy(truth, predicted);
  r.gmean = weighted_gmean(counts);
  r.precision = weighted_precision(counts);
  r.recall = weighted_recall(counts);
  r.f1 = weighted_f1(counts);
  return r;
}

void add_regression(MetricsReport& report, std::span<const double> truth, std::span<const double> predicted,
                    double mape_floor) {
  report.rmse = rmse(truth, predicted);
  report.r2score = r2score(truth, predicted);
  std::vector<double> t, p;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= mape_floor) {
      t.push_back(truth[i]);
      p.push_back(predicted[i]);
    }
  }
  if (!t.empty()) report.mape = mape(t, p);
}

std::string to_key_value(const MetricsReport& report) {
  std::string out;
  const auto v = report.values();
  for (std::size_t i = 0; i < kMetricKeys.size(); ++i) {
    out += std::string(kMetricKeys[i]) + " = " + format_value(v[i]) + "\n";
  }
  return out;
}

std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < kMetricKeys.size(); ++i) out += (i ? "," : "") + std::string(kMetricKeys[i]);
  return out;
}

std::string to_csv_row(const MetricsReport& report) {
  std::string out;
  const auto v = report.values();
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_value(v[i]);
  return out;
}

}  // namespace mdp_tcm
