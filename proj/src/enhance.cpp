#include "das/enhance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "das/rng.hpp"

namespace das {

AugmentedSet augment(const Dataset& train, const SynthesizedSet& syn) {
  if (syn.points.rows() > 0 && syn.points.cols() != train.cols()) {
    throw EnhanceError("augment: dimension mismatch");
  }
  const Eigen::Index n0 = train.rows();
  const Eigen::Index n1 = syn.points.rows();
  AugmentedSet aug;
  aug.features.resize(n0 + n1, train.cols());
  aug.features.topRows(n0) = train.features;
  if (n1 > 0) aug.features.bottomRows(n1) = syn.points;
  aug.labels.resize(n0 + n1);
  aug.labels.head(n0).setZero();
  aug.labels.tail(n1).setOnes();
  return aug;
}

namespace {

struct TreeBuilder {
  const Matrix& X;
  const IntVector& y;
  EnhancementClassifier::Tree& tree;
  Rng& rng;
  int max_features;

  static double gini(int n_pos, int n_total) {
    if (n_total == 0) return 0.0;
    const double p = static_cast<double>(n_pos) / n_total;
    return 2.0 * p * (1.0 - p);
  }

  int build(std::vector<Eigen::Index>& idx) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    int n_pos = 0;
    for (Eigen::Index i : idx) n_pos += y(i);
    const int n = static_cast<int>(idx.size());
    // Ties vote anomaly.
    tree.nodes[node_id].vote = 2 * n_pos >= n ? 1 : 0;
    if (n_pos == 0 || n_pos == n || n < 2) return node_id;

    // Best Gini split over a random feature subset of size max_features.
    const Eigen::Index d = X.cols();
    std::vector<Eigen::Index> feats(static_cast<std::size_t>(d));
    std::iota(feats.begin(), feats.end(), 0);
    rng.shuffle(feats);

    double best_impurity = gini(n_pos, n);
    int best_feature = -1;
    double best_threshold = 0.0;
    int tried = 0;
    for (Eigen::Index f : feats) {
      if (tried >= max_features && best_feature >= 0) break;
      ++tried;
      // Sort node samples by this feature; candidate cuts at value changes.
      std::vector<std::pair<double, int>> vals;
      vals.reserve(idx.size());
      for (Eigen::Index i : idx) vals.emplace_back(X(i, f), y(i));
      std::sort(vals.begin(), vals.end());
      int left_pos = 0;
      for (int k = 0; k < n - 1; ++k) {
        left_pos += vals[static_cast<std::size_t>(k)].second;
        if (vals[static_cast<std::size_t>(k)].first ==
            vals[static_cast<std::size_t>(k + 1)].first) {
          continue;
        }
        const int left_n = k + 1;
        const int right_n = n - left_n;
        const double impurity =
            (left_n * gini(left_pos, left_n) +
             right_n * gini(n_pos - left_pos, right_n)) /
            n;
        if (impurity < best_impurity - 1e-15) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = 0.5 * (vals[static_cast<std::size_t>(k)].first +
                                  vals[static_cast<std::size_t>(k + 1)].first);
        }
      }
    }
    if (best_feature < 0) return node_id;  // unsplittable mixed leaf

    std::vector<Eigen::Index> left_idx, right_idx;
    for (Eigen::Index i : idx) {
      (X(i, best_feature) <= best_threshold ? left_idx : right_idx).push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return node_id;

    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    const int left = build(left_idx);
    tree.nodes[node_id].left = left;
    const int right = build(right_idx);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

int tree_vote(const EnhancementClassifier::Tree& tree, const auto& row) {
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = row(nd.feature) <= nd.threshold ? nd.left : nd.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].vote;
}

}  // namespace

EnhancementClassifier fit_enhancement(const AugmentedSet& aug,
                                      const ForestParams& params) {
  const Eigen::Index n = aug.features.rows();
  if (n < 2) throw EnhanceError("fit_enhancement: need at least 2 rows");
  if (aug.labels.size() != n) {
    throw EnhanceError("fit_enhancement: labels / features size mismatch");
  }
  const int n_pos = aug.labels.sum();
  if (n_pos == 0 || n_pos == n) {
    throw EnhanceError("fit_enhancement: both classes required");
  }
  if (params.n_trees < 1) throw EnhanceError("n_trees must be >= 1");

  const int mtry =
      params.max_features > 0
          ? params.max_features
          : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(aug.features.cols()))));

  std::vector<EnhancementClassifier::Tree> trees(
      static_cast<std::size_t>(params.n_trees));
  Rng root(params.seed);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng = root.split(static_cast<std::uint64_t>(t));
    std::vector<Eigen::Index> idx;
    idx.reserve(static_cast<std::size_t>(n));
    if (params.bootstrap) {
      for (Eigen::Index i = 0; i < n; ++i) {
        idx.push_back(static_cast<Eigen::Index>(
            rng.uniform_index(static_cast<std::size_t>(n))));
      }
      // A bootstrap draw can be single-class; retry keeps the tree usable.
      int pos = 0;
      for (Eigen::Index i : idx) pos += aug.labels(i);
      int retries = 0;
      while ((pos == 0 || pos == static_cast<int>(idx.size())) && retries < 100) {
        idx.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
          idx.push_back(static_cast<Eigen::Index>(
              rng.uniform_index(static_cast<std::size_t>(n))));
        }
        pos = 0;
        for (Eigen::Index i : idx) pos += aug.labels(i);
        ++retries;
      }
    } else {
      for (Eigen::Index i = 0; i < n; ++i) idx.push_back(i);
    }
    TreeBuilder{aug.features, aug.labels, trees[static_cast<std::size_t>(t)],
                rng, mtry}
        .build(idx);
  }
  return EnhancementClassifier(std::move(trees), params);
}

Vector EnhancementClassifier::predict_score(const Matrix& X) const {
  Vector scores = Vector::Zero(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    int votes = 0;
    for (const auto& tree : trees_) votes += tree_vote(tree, X.row(i));
    scores(i) = static_cast<double>(votes) / static_cast<double>(trees_.size());
  }
  return scores;
}

Vector min_max_normalize(const Vector& scores,
                         std::optional<std::pair<double, double>> anchors) {
  if (scores.size() == 0) return scores;
  double lo, hi;
  if (anchors) {
    lo = anchors->first;
    hi = anchors->second;
  } else {
    lo = scores.minCoeff();
    hi = scores.maxCoeff();
  }
  if (hi <= lo) return Vector::Constant(scores.size(), 0.5);
  return ((scores.array() - lo) / (hi - lo)).cwiseMax(0.0).cwiseMin(1.0);
}

Vector EnhancedDetector::fused_score(const Matrix& X) const {
  const Vector base_scores = base_->predict_score(X);
  const Vector clf_scores = classifier_.predict_score(X);
  if (anchor_mode_ == AnchorMode::Batch) {
    return min_max_normalize(base_scores) + min_max_normalize(clf_scores);
  }
  return min_max_normalize(base_scores, base_norm_) +
         min_max_normalize(clf_scores, clf_norm_);
}

Vector EnhancedDetector::fused_score(const Dataset& X) const {
  return fused_score(X.features);
}

}  // namespace das
