#include "das/detector.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace das {

using json = nlohmann::json;

const char* to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::IForest: return "iforest";
    case DetectorKind::Pca: return "pca";
    case DetectorKind::Ecod: return "ecod";
    case DetectorKind::Ocsvm: return "ocsvm";
  }
  return "unknown";
}

std::optional<DetectorKind> detector_kind_from_string(const std::string& name) {
  if (name == "iforest") return DetectorKind::IForest;
  if (name == "pca") return DetectorKind::Pca;
  if (name == "ecod") return DetectorKind::Ecod;
  if (name == "ocsvm") return DetectorKind::Ocsvm;
  return std::nullopt;
}

Eigen::Index FittedDetector::dim() const {
  return std::visit(
      [](const auto& m) -> Eigen::Index {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IForestModel>) {
          Eigen::Index d = 0;
          for (const auto& tree : m.trees) {
            for (const auto& node : tree.nodes) {
              d = std::max<Eigen::Index>(d, node.feature + 1);
            }
          }
          return d;
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          return m.mean.size();
        } else if constexpr (std::is_same_v<T, EcodModel>) {
          return m.sorted_columns.cols();
        } else {
          return m.support_vectors.cols();
        }
      },
      state_);
}

Vector FittedDetector::predict_score(const Matrix& X) const {
  score_calls_.fetch_add(1, std::memory_order_relaxed);
  return std::visit(
      [&](const auto& m) -> Vector {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IForestModel>) {
          return iforest_score(m, X);
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          return pca_score(m, X);
        } else if constexpr (std::is_same_v<T, EcodModel>) {
          return ecod_score(m, X);
        } else {
          return ocsvm_score(m, X);
        }
      },
      state_);
}

double FittedDetector::predict_score_one(const Vector& x) const {
  Matrix X(1, x.size());
  X.row(0) = x;
  return predict_score(X)(0);
}

FittedDetector fit_detector(DetectorKind kind, const Dataset& train,
                            const DetectorHyperparams& hp) {
  const Matrix& X = train.features;
  if (X.rows() < 2) throw DetectorError("fit: need at least 2 samples");
  if (!X.allFinite()) throw DetectorError("fit: non-finite training values");

  FittedDetector::State state = [&]() -> FittedDetector::State {
    switch (kind) {
      case DetectorKind::IForest:
        return iforest_fit(X, hp.iforest_n_trees, hp.iforest_subsample, hp.seed);
      case DetectorKind::Pca:
        return pca_fit(X, hp.pca_variance_retained);
      case DetectorKind::Ecod:
        return ecod_fit(X);
      case DetectorKind::Ocsvm: {
        double gamma = hp.ocsvm_gamma;
        if (gamma <= 0.0) {
          const Vector mean = X.colwise().mean();
          const double var =
              (X.rowwise() - mean.transpose()).array().square().mean();
          if (var <= 0.0) {
            throw DetectorError("ocsvm: all-identical training rows");
          }
          gamma = 1.0 / (static_cast<double>(X.cols()) * var);
        }
        return ocsvm_fit(X, hp.ocsvm_nu, gamma, hp.seed);
      }
    }
    throw DetectorError("fit: unknown detector kind");
  }();

  FittedDetector det(kind, std::move(state), {0.0, 0.0});
  const Vector train_scores = det.predict_score(X);
  det.reset_score_call_count();
  return FittedDetector(kind, det.state(),
                        {train_scores.minCoeff(), train_scores.maxCoeff()});
}

// ---- JSON serialization -----------------------------------------------------

namespace {

constexpr int kSchemaVersion = 1;

json vec_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Vector vec_from_json(const json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

template <typename Mat>
json mat_to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

template <typename Mat>
Mat mat_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string detector_to_json(const FittedDetector& det) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = to_string(det.kind());
  j["train_score_min"] = det.train_score_range().first;
  j["train_score_max"] = det.train_score_range().second;

  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IForestModel>) {
          j["subsample_size"] = m.subsample_size;
          json trees = json::array();
          for (const auto& tree : m.trees) {
            json nodes = json::array();
            for (const auto& nd : tree.nodes) {
              nodes.push_back({{"f", nd.feature},
                               {"t", nd.threshold},
                               {"l", nd.left},
                               {"r", nd.right},
                               {"s", nd.size}});
            }
            trees.push_back(std::move(nodes));
          }
          j["trees"] = std::move(trees);
        } else if constexpr (std::is_same_v<T, PcaModel>) {
          j["mean"] = vec_to_json(m.mean);
          j["basis"] = mat_to_json(m.basis);
          j["retained_eigenvalues"] = vec_to_json(m.retained_eigenvalues);
        } else if constexpr (std::is_same_v<T, EcodModel>) {
          j["sorted_columns"] = mat_to_json(m.sorted_columns);
        } else {
          j["support_vectors"] = mat_to_json(m.support_vectors);
          j["alpha"] = vec_to_json(m.alpha);
          j["rho"] = m.rho;
          j["gamma"] = m.gamma;
        }
      },
      det.state());
  return j.dump();
}

FittedDetector detector_from_json(const std::string& json_text) {
  const json j = json::parse(json_text);
  if (j.at("schema_version").get<int>() != kSchemaVersion) {
    throw DetectorError("unsupported detector schema version");
  }
  const auto kind = detector_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw DetectorError("unknown detector kind in document");

  FittedDetector::State state;
  switch (*kind) {
    case DetectorKind::IForest: {
      IForestModel m;
      m.subsample_size = j.at("subsample_size").get<int>();
      for (const auto& tree_json : j.at("trees")) {
        IForestModel::Tree tree;
        for (const auto& nd : tree_json) {
          tree.nodes.push_back({nd.at("f").get<int>(), nd.at("t").get<double>(),
                                nd.at("l").get<int>(), nd.at("r").get<int>(),
                                nd.at("s").get<int>()});
        }
        m.trees.push_back(std::move(tree));
      }
      state = std::move(m);
      break;
    }
    case DetectorKind::Pca: {
      PcaModel m;
      m.mean = vec_from_json(j.at("mean"));
      m.basis = mat_from_json<Matrix>(j.at("basis"));
      m.retained_eigenvalues = vec_from_json(j.at("retained_eigenvalues"));
      state = std::move(m);
      break;
    }
    case DetectorKind::Ecod: {
      EcodModel m;
      m.sorted_columns = mat_from_json<Eigen::MatrixXd>(j.at("sorted_columns"));
      state = std::move(m);
      break;
    }
    case DetectorKind::Ocsvm: {
      OcsvmModel m;
      m.support_vectors = mat_from_json<Matrix>(j.at("support_vectors"));
      m.alpha = vec_from_json(j.at("alpha"));
      m.rho = j.at("rho").get<double>();
      m.gamma = j.at("gamma").get<double>();
      state = std::move(m);
      break;
    }
  }
  return FittedDetector(*kind, std::move(state),
                        {j.at("train_score_min").get<double>(),
                         j.at("train_score_max").get<double>()});
}

}  // namespace das
