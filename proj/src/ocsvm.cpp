#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "das/detector.hpp"
#include "das/rng.hpp"

namespace das {

Matrix rbf_kernel(const Matrix& A, const Matrix& B, double gamma) {
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  Matrix sq = -2.0 * (A * B.transpose());
  sq.colwise() += a2;
  sq.rowwise() += b2.transpose();
  return (-gamma * sq.cwiseMax(0.0).array()).exp();
}

std::pair<Vector, double> ocsvm_fit_dual(const Matrix& K, double nu,
                                         std::uint64_t seed, double tol,
                                         int max_sweeps_per_row) {
  const Eigen::Index n = K.rows();
  if (n < 2) throw DetectorError("ocsvm: need at least 2 samples");
  if (!(nu > 0.0 && nu <= 1.0)) throw DetectorError("ocsvm: nu must be in (0,1]");
  const double upper = 1.0 / (nu * static_cast<double>(n));

  // libsvm-style feasible start: the first floor(nu*n) slots (in a seeded
  // order) take the full box, one slot takes the remainder.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  Vector alpha = Vector::Zero(n);
  double remaining = 1.0;
  for (Eigen::Index i : order) {
    const double take = std::min(upper, remaining);
    alpha(i) = take;
    remaining -= take;
    if (remaining <= 0.0) break;
  }

  Vector grad = K * alpha;  // gradient of 1/2 a'Ka

  const long max_iter = static_cast<long>(max_sweeps_per_row) * n;
  double violation = std::numeric_limits<double>::infinity();
  for (long iter = 0; iter < max_iter; ++iter) {
    // Most violating pair under the equality constraint: increase the
    // coordinate with the smallest gradient that still has headroom, pay for
    // it from the largest-gradient coordinate that is above zero.
    Eigen::Index i_up = -1, j_down = -1;
    double g_min = std::numeric_limits<double>::infinity();
    double g_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (alpha(i) < upper && grad(i) < g_min) {
        g_min = grad(i);
        i_up = i;
      }
      if (alpha(i) > 0.0 && grad(i) > g_max) {
        g_max = grad(i);
        j_down = i;
      }
    }
    if (i_up < 0 || j_down < 0) {
      violation = 0.0;  // fully saturated box (nu == 1)
      break;
    }
    violation = g_max - g_min;
    if (violation < tol) break;

    const double curvature =
        std::max(K(i_up, i_up) + K(j_down, j_down) - 2.0 * K(i_up, j_down), 1e-12);
    double delta = (g_max - g_min) / curvature;
    delta = std::min(delta, upper - alpha(i_up));
    delta = std::min(delta, alpha(j_down));
    if (delta <= 0.0) break;

    alpha(i_up) += delta;
    alpha(j_down) -= delta;
    grad += delta * (K.col(i_up) - K.col(j_down));
  }
  if (violation >= tol) {
    throw DetectorError("ocsvm: solver did not converge, max KKT violation " +
                        std::to_string(violation));
  }

  // Renormalize the simplex constraint, then clip box round-off so the box
  // bounds hold exactly.
  alpha /= alpha.sum();
  for (Eigen::Index i = 0; i < n; ++i) {
    alpha(i) = std::clamp(alpha(i), 0.0, upper);
  }
  grad = K * alpha;

  // rho from the KKT conditions: free points have grad == rho exactly;
  // otherwise take the midpoint of the feasible interval.
  double rho_sum = 0.0;
  int rho_count = 0;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  const double margin = 1e-10;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha(i) > margin && alpha(i) < upper - margin) {
      rho_sum += grad(i);
      ++rho_count;
    } else if (alpha(i) >= upper - margin) {
      lower_bound = std::max(lower_bound, grad(i));
    } else {
      upper_bound = std::min(upper_bound, grad(i));
    }
  }
  double rho;
  if (rho_count > 0) {
    rho = rho_sum / rho_count;
  } else if (std::isfinite(lower_bound) && std::isfinite(upper_bound)) {
    rho = 0.5 * (lower_bound + upper_bound);
  } else if (std::isfinite(lower_bound)) {
    rho = lower_bound;
  } else {
    rho = upper_bound;
  }
  return {alpha, rho};
}

OcsvmModel ocsvm_fit(const Matrix& X, double nu, double gamma,
                     std::uint64_t seed) {
  if (gamma <= 0.0) throw DetectorError("ocsvm: gamma must be positive");
  const Matrix K = rbf_kernel(X, X, gamma);
  auto [alpha, rho] = ocsvm_fit_dual(K, nu, seed);

  OcsvmModel model;
  model.gamma = gamma;
  model.rho = rho;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) > 0.0) sv.push_back(i);
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
  model.alpha.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t i = 0; i < sv.size(); ++i) {
    model.support_vectors.row(static_cast<Eigen::Index>(i)) = X.row(sv[i]);
    model.alpha(static_cast<Eigen::Index>(i)) = alpha(sv[i]);
  }
  return model;
}

Vector ocsvm_score(const OcsvmModel& m, const Matrix& X) {
  if (X.cols() != m.support_vectors.cols()) {
    throw DetectorError("ocsvm: dimension mismatch");
  }
  // Decision value is sum_i alpha_i k(x_i, x) - rho; flipped so that higher
  // means more anomalous.
  const Matrix K = rbf_kernel(X, m.support_vectors, m.gamma);
  return (m.rho - (K * m.alpha).array()).matrix();
}

}  // namespace das
