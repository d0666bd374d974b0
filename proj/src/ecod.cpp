#include <algorithm>
#include <cmath>

#include "das/detector.hpp"

namespace das {

EcodModel ecod_fit(const Matrix& X) {
  if (X.rows() < 1) throw DetectorError("ecod: empty training set");
  EcodModel model;
  model.sorted_columns = X;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    double* begin = model.sorted_columns.col(j).data();
    std::sort(begin, begin + X.rows());
  }
  return model;
}

Vector ecod_score(const EcodModel& m, const Matrix& X) {
  const Eigen::Index n_train = m.sorted_columns.rows();
  const Eigen::Index d = m.sorted_columns.cols();
  if (X.cols() != d) throw DetectorError("ecod: dimension mismatch");

  // Per-feature tail probabilities from the empirical CDF with the
  // count/(n+1) convention; both tails clamped at 1/(n+1) so the log stays
  // finite. The score depends only on within-column ranks.
  Vector scores = Vector::Zero(X.rows());
  const double denom = static_cast<double>(n_train + 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double* begin = m.sorted_columns.col(j).data();
      const double x = X(i, j);
      const auto count_le = std::upper_bound(begin, begin + n_train, x) - begin;
      const double left = std::max(static_cast<double>(count_le) / denom, 1.0 / denom);
      const double right = std::max(1.0 - static_cast<double>(count_le) / denom, 1.0 / denom);
      total += std::max(-std::log(left), -std::log(right));
    }
    scores(i) = total;
  }
  return scores;
}

}  // namespace das
