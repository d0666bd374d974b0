#include "das/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace das {

namespace {

void check_two_classes(const Vector& scores, const IntVector& labels,
                       int& n_pos, int& n_neg) {
  if (scores.size() != labels.size()) {
    throw StatsError("scores/labels length mismatch");
  }
  n_pos = 0;
  n_neg = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    (labels(i) == 1 ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) {
    throw StatsError("both classes required for AUC");
  }
}

}  // namespace

double auc_roc(const Vector& scores, const IntVector& labels) {
  int n_pos, n_neg;
  check_two_classes(scores, labels, n_pos, n_neg);
  const Eigen::Index n = scores.size();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores(a) < scores(b);
  });

  // Midrank sum over positives (Mann-Whitney).
  double rank_sum_pos = 0.0;
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j < n && scores(order[j]) == scores(order[i])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j + 1);  // 1-based
    for (Eigen::Index k = i; k < j; ++k) {
      if (labels(order[k]) == 1) rank_sum_pos += midrank;
    }
    i = j;
  }
  const double u = rank_sum_pos -
                   0.5 * static_cast<double>(n_pos) * (n_pos + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_pr(const Vector& scores, const IntVector& labels) {
  int n_pos, n_neg;
  check_two_classes(scores, labels, n_pos, n_neg);
  const Eigen::Index n = scores.size();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return scores(a) > scores(b);
  });

  // Average precision; an equal-score group is a single cut whose precision
  // is evaluated after the whole group is included.
  double ap = 0.0;
  Eigen::Index taken = 0;
  Eigen::Index tp = 0;
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    Eigen::Index group_pos = 0;
    while (j < n && scores(order[j]) == scores(order[i])) {
      if (labels(order[j]) == 1) ++group_pos;
      ++j;
    }
    taken += j - i;
    tp += group_pos;
    const double precision = static_cast<double>(tp) / static_cast<double>(taken);
    ap += precision * static_cast<double>(group_pos);
    i = j;
  }
  return ap / static_cast<double>(n_pos);
}

MetricResult compute_metrics(const Vector& scores, const IntVector& labels) {
  MetricResult m;
  check_two_classes(scores, labels, m.n_pos, m.n_neg);
  m.auc_roc = auc_roc(scores, labels);
  m.auc_pr = auc_pr(scores, labels);
  return m;
}

namespace {

double ln_gamma(double x) { return std::lgamma(x); }

// Lentz continued fraction for I_x(a,b), from the standard series.
double betacf(double a, double b, double x) {
  const double eps = 1e-15;
  const double fpmin = 1e-300;
  const int max_iter = 500;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double nu) {
  const double x = nu / (nu + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * nu, 0.5, x);
  return t >= 0.0 ? 1.0 - tail : tail;
}

std::pair<double, double> paired_t_test_one_tailed(
    const std::vector<double>& deltas) {
  const std::size_t n = deltas.size();
  if (n < 2) throw StatsError("t-test needs at least 2 samples");
  const double mean =
      std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : deltas) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) {
    if (mean > 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    if (mean < 0.0) return {-std::numeric_limits<double>::infinity(), 1.0};
    return {0.0, 0.5};
  }
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double p = 1.0 - student_t_cdf(t, static_cast<double>(n - 1));
  return {t, p};
}

AggregateSummary aggregate(
    const std::vector<std::pair<double, double>>& baseline_enhanced) {
  if (baseline_enhanced.empty()) throw StatsError("empty aggregation input");
  AggregateSummary s;
  s.total = static_cast<int>(baseline_enhanced.size());
  std::vector<double> deltas;
  deltas.reserve(baseline_enhanced.size());
  double pct_sum = 0.0;
  int pct_count = 0;
  for (const auto& [base, enh] : baseline_enhanced) {
    s.baseline_mean += base;
    deltas.push_back(enh - base);
    if (enh > base) ++s.win_count;
    if (base > 1e-12) {
      pct_sum += (enh - base) / base;
      ++pct_count;
    }
  }
  s.baseline_mean /= static_cast<double>(s.total);
  s.improv_abs =
      std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(s.total);
  s.improv_pct = pct_count ? 100.0 * pct_sum / pct_count : 0.0;
  if (deltas.size() >= 2) {
    auto [t, p] = paired_t_test_one_tailed(deltas);
    s.t_stat = t;
    s.p_value = p;
  } else {
    s.t_stat = 0.0;
    s.p_value = deltas[0] > 0.0 ? 0.0 : (deltas[0] < 0.0 ? 1.0 : 0.5);
  }
  return s;
}

}  // namespace das
