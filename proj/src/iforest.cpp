#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "das/detector.hpp"
#include "das/rng.hpp"

namespace das {

double iforest_normalizer(int n) {
  if (n <= 1) return 0.0;
  const int m = n - 1;
  double harmonic;
  if (m <= 10) {
    harmonic = 0.0;
    for (int i = 1; i <= m; ++i) harmonic += 1.0 / i;
  } else {
    harmonic = std::log(static_cast<double>(m)) + 0.5772156649;
  }
  return 2.0 * harmonic - 2.0 * static_cast<double>(m) / static_cast<double>(n);
}

namespace {

struct Builder {
  const Matrix& X;
  IForestModel::Tree& tree;
  Rng& rng;
  int height_limit;

  // Returns the index of the created node.
  int build(std::vector<Eigen::Index>& idx, int depth) {
    const int node_id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[node_id].size = static_cast<int>(idx.size());

    if (idx.size() <= 1 || depth >= height_limit) return node_id;

    const Eigen::Index d = X.cols();
    // Pick a feature with spread; give up after d attempts (all-identical
    // node sample stays a leaf).
    int feature = -1;
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index attempt = 0; attempt < d; ++attempt) {
      const int f = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(d)));
      lo = hi = X(idx[0], f);
      for (Eigen::Index i : idx) {
        lo = std::min(lo, X(i, f));
        hi = std::max(hi, X(i, f));
      }
      if (hi > lo) {
        feature = f;
        break;
      }
    }
    if (feature < 0) return node_id;

    const double threshold = rng.uniform(lo, hi);
    std::vector<Eigen::Index> left_idx, right_idx;
    for (Eigen::Index i : idx) {
      (X(i, feature) < threshold ? left_idx : right_idx).push_back(i);
    }
    if (left_idx.empty() || right_idx.empty()) return node_id;

    tree.nodes[node_id].feature = feature;
    tree.nodes[node_id].threshold = threshold;
    const int left = build(left_idx, depth + 1);
    tree.nodes[node_id].left = left;
    const int right = build(right_idx, depth + 1);
    tree.nodes[node_id].right = right;
    return node_id;
  }
};

}  // namespace

IForestModel iforest_fit(const Matrix& X, int n_trees, int subsample,
                         std::uint64_t seed) {
  if (n_trees < 1) throw DetectorError("iforest: n_trees must be >= 1");
  const Eigen::Index n = X.rows();
  const int psi = static_cast<int>(std::min<Eigen::Index>(subsample, n));

  IForestModel model;
  model.subsample_size = psi;
  model.trees.resize(static_cast<std::size_t>(n_trees));
  const int height_limit =
      static_cast<int>(std::ceil(std::log2(std::max(2.0, static_cast<double>(psi)))));

  Rng root(seed);
  for (int t = 0; t < n_trees; ++t) {
    Rng rng = root.split(static_cast<std::uint64_t>(t));
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    std::vector<Eigen::Index> sample(all.begin(), all.begin() + psi);
    Builder{X, model.trees[static_cast<std::size_t>(t)], rng, height_limit}
        .build(sample, 0);
  }
  return model;
}

double iforest_path_length(const IForestModel::Tree& tree, const Vector& x) {
  int node = 0;
  int depth = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
    node = x(nd.feature) < nd.threshold ? nd.left : nd.right;
    ++depth;
  }
  const int leaf_size = tree.nodes[static_cast<std::size_t>(node)].size;
  return static_cast<double>(depth) + iforest_normalizer(leaf_size);
}

Vector iforest_score(const IForestModel& m, const Matrix& X) {
  const double c = iforest_normalizer(m.subsample_size);
  Vector scores(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i);
    double mean_path = 0.0;
    for (const auto& tree : m.trees) mean_path += iforest_path_length(tree, x);
    mean_path /= static_cast<double>(m.trees.size());
    scores(i) = c > 0.0 ? std::pow(2.0, -mean_path / c) : 0.5;
  }
  return scores;
}

}  // namespace das
