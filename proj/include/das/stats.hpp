#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "das/types.hpp"

namespace das {

struct StatsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricResult {
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  int n_pos = 0;
  int n_neg = 0;
};

/// One aggregate row per detector, Table-style: mean baseline, mean absolute
/// improvement, mean per-dataset relative improvement (percent), win count
/// and the one-tailed paired t-test p-value over the deltas.
struct AggregateSummary {
  double baseline_mean = 0.0;
  double improv_abs = 0.0;
  double improv_pct = 0.0;
  int win_count = 0;
  int total = 0;
  double t_stat = 0.0;
  double p_value = 1.0;
};

/// Rank-based AUC-ROC: P(score_pos > score_neg) + 0.5 P(tie).
double auc_roc(const Vector& scores, const IntVector& labels);

/// Average precision with tied scores treated as a single cut.
double auc_pr(const Vector& scores, const IntVector& labels);

MetricResult compute_metrics(const Vector& scores, const IntVector& labels);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t with nu degrees of freedom.
double student_t_cdf(double t, double nu);

/// One-tailed paired t-test, H1: mean(deltas) > 0. Degenerate sd == 0 rule:
/// p = 0 if mean > 0, 1 if mean < 0, 0.5 if mean == 0.
std::pair<double, double> paired_t_test_one_tailed(const std::vector<double>& deltas);

AggregateSummary aggregate(
    const std::vector<std::pair<double, double>>& baseline_enhanced);

}  // namespace das
