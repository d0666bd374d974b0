#include <Eigen/Eigenvalues>

#include "das/detector.hpp"

namespace das {

PcaModel pca_fit(const Matrix& X, double variance_retained) {
  if (!(variance_retained > 0.0 && variance_retained <= 1.0)) {
    throw DetectorError("pca: variance_retained must be in (0,1]");
  }
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n < 2) throw DetectorError("pca: need at least 2 samples");

  PcaModel model;
  model.mean = X.colwise().mean();
  const Matrix centered = X.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw DetectorError("pca: eigendecomposition failed");
  }
  // Eigen returns eigenvalues ascending; walk from the largest down until the
  // retained cumulative variance reaches the target.
  const Eigen::VectorXd evals = solver.eigenvalues().cwiseMax(0.0);
  const double total = evals.sum();
  Eigen::Index k = 0;
  double cum = 0.0;
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    ++k;
    cum += evals(i);
    if (total <= 0.0 || cum >= variance_retained * total) break;
  }
  model.basis.resize(d, k);
  model.retained_eigenvalues.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    model.basis.col(j) = solver.eigenvectors().col(d - 1 - j);
    model.retained_eigenvalues(j) = evals(d - 1 - j);
  }
  return model;
}

Vector pca_score(const PcaModel& m, const Matrix& X) {
  const Matrix centered = X.rowwise() - m.mean.transpose();
  const Matrix projected = centered * m.basis;          // n x k
  const Matrix reconstructed = projected * m.basis.transpose();
  return (centered - reconstructed).rowwise().squaredNorm();
}

}  // namespace das
