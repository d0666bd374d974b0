#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "das/data.hpp"
#include "das/types.hpp"

namespace das {

struct DetectorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class DetectorKind { IForest, Pca, Ecod, Ocsvm };

const char* to_string(DetectorKind kind);
std::optional<DetectorKind> detector_kind_from_string(const std::string& name);
inline constexpr DetectorKind kAllDetectorKinds[] = {
    DetectorKind::IForest, DetectorKind::Pca, DetectorKind::Ecod,
    DetectorKind::Ocsvm};

struct DetectorHyperparams {
  int iforest_n_trees = 100;
  int iforest_subsample = 256;  // capped at n during fit
  double pca_variance_retained = 0.9;
  double ocsvm_nu = 0.5;
  double ocsvm_gamma = 0.0;  // <= 0 means 1 / (d * mean feature variance)
  std::uint64_t seed = 0;
};

// ---- per-kind model state ---------------------------------------------------

struct IForestModel {
  struct Node {
    int feature = -1;     // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;         // samples that reached this node during build
  };
  struct Tree {
    std::vector<Node> nodes;  // node 0 is the root
  };
  std::vector<Tree> trees;
  int subsample_size = 0;
};

struct PcaModel {
  Vector mean;
  Matrix basis;  // d x k, orthonormal columns spanning the retained subspace
  Vector retained_eigenvalues;
};

struct EcodModel {
  Eigen::MatrixXd sorted_columns;  // n x d, column-major, each column ascending
};

struct OcsvmModel {
  Matrix support_vectors;  // rows with alpha > 0
  Vector alpha;            // matching dual coefficients
  double rho = 0.0;
  double gamma = 1.0;
};

// ---- fitted detector --------------------------------------------------------

/// A fitted score function f_t. Immutable after fit; scoring is const and
/// thread-safe. Orientation contract: higher score = more anomalous, for
/// every kind.
class FittedDetector {
 public:
  using State = std::variant<IForestModel, PcaModel, EcodModel, OcsvmModel>;

  FittedDetector(DetectorKind kind, State state,
                 std::pair<double, double> train_score_range)
      : kind_(kind),
        state_(std::move(state)),
        train_score_range_(train_score_range) {}

  // The instrumentation counter is not part of the model; copies and moves
  // start fresh.
  FittedDetector(const FittedDetector& other)
      : kind_(other.kind_),
        state_(other.state_),
        train_score_range_(other.train_score_range_) {}
  FittedDetector(FittedDetector&& other) noexcept
      : kind_(other.kind_),
        state_(std::move(other.state_)),
        train_score_range_(other.train_score_range_) {}
  FittedDetector& operator=(const FittedDetector&) = delete;
  FittedDetector& operator=(FittedDetector&&) = delete;

  DetectorKind kind() const { return kind_; }
  const State& state() const { return state_; }
  std::pair<double, double> train_score_range() const {
    return train_score_range_;
  }

  Eigen::Index dim() const;
  Vector predict_score(const Matrix& X) const;
  double predict_score_one(const Vector& x) const;

  /// Number of predict_score invocations since construction (rows scored
  /// count as one call per batch). Used by the synthesis instrumentation.
  std::uint64_t score_call_count() const { return score_calls_.load(); }
  void reset_score_call_count() const { score_calls_.store(0); }

 private:
  DetectorKind kind_;
  State state_;
  std::pair<double, double> train_score_range_;
  mutable std::atomic<std::uint64_t> score_calls_{0};
};

FittedDetector fit_detector(DetectorKind kind, const Dataset& train,
                            const DetectorHyperparams& hp);

// ---- per-kind internals, exposed for tests and synthesis strategies --------

/// IForest path-length normalizer c(n) = 2 H(n-1) - 2 (n-1)/n. Harmonic
/// numbers are exact for arguments <= 10 and ln(i) + Euler-Mascheroni above.
double iforest_normalizer(int n);
double iforest_path_length(const IForestModel::Tree& tree, const Vector& x);

IForestModel iforest_fit(const Matrix& X, int n_trees, int subsample,
                         std::uint64_t seed);
Vector iforest_score(const IForestModel& m, const Matrix& X);

PcaModel pca_fit(const Matrix& X, double variance_retained);
Vector pca_score(const PcaModel& m, const Matrix& X);

EcodModel ecod_fit(const Matrix& X);
Vector ecod_score(const EcodModel& m, const Matrix& X);

Matrix rbf_kernel(const Matrix& A, const Matrix& B, double gamma);

/// Solves the nu-one-class-SVM dual min 1/2 a'Ka s.t. 0 <= a_i <= 1/(nu n),
/// sum a = 1 by pairwise coordinate ascent. Throws on non-convergence.
std::pair<Vector, double> ocsvm_fit_dual(const Matrix& K, double nu,
                                         std::uint64_t seed,
                                         double tol = 1e-4,
                                         int max_sweeps_per_row = 10);

OcsvmModel ocsvm_fit(const Matrix& X, double nu, double gamma,
                     std::uint64_t seed);
Vector ocsvm_score(const OcsvmModel& m, const Matrix& X);

// ---- serialization ---------------------------------------------------------

std::string detector_to_json(const FittedDetector& det);
FittedDetector detector_from_json(const std::string& json_text);

}  // namespace das
