#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "das/data.hpp"
#include "das/detector.hpp"
#include "das/synthesis.hpp"
#include "das/types.hpp"

namespace das {

struct EnhanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two-class training table: original train rows labeled 0, synthesized rows
/// labeled 1, in that order (multiset union).
struct AugmentedSet {
  Matrix features;
  IntVector labels;
};

AugmentedSet augment(const Dataset& train, const SynthesizedSet& syn);

struct ForestParams {
  int n_trees = 100;
  bool bootstrap = true;
  int max_features = 0;  // 0 means ceil(sqrt(d))
  std::uint64_t seed = 0;
};

/// Random forest of Gini-split binary trees, unlimited depth, min leaf 1.
/// score(x) in {0, 1/n_trees, ..., 1} = fraction of trees voting anomaly.
class EnhancementClassifier {
 public:
  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int vote = 0;  // leaf majority label
  };
  struct Tree {
    std::vector<Node> nodes;
  };

  EnhancementClassifier(std::vector<Tree> trees, ForestParams params)
      : trees_(std::move(trees)), params_(params) {}

  Vector predict_score(const Matrix& X) const;
  int n_trees() const { return static_cast<int>(trees_.size()); }
  const ForestParams& params() const { return params_; }
  const std::vector<Tree>& trees() const { return trees_; }

 private:
  std::vector<Tree> trees_;
  ForestParams params_;
};

EnhancementClassifier fit_enhancement(const AugmentedSet& aug,
                                      const ForestParams& params);

/// (s - min) / (max - min), clipped to [0,1]; anchors default to the batch
/// itself; max == min maps everything to 0.5.
Vector min_max_normalize(const Vector& scores,
                         std::optional<std::pair<double, double>> anchors =
                             std::nullopt);

enum class AnchorMode { Batch, Train };

/// Fused detector F_t = Norm(f_t) + Norm(f~_t) per Eq-style min-max fusion.
class EnhancedDetector {
 public:
  EnhancedDetector(std::shared_ptr<const FittedDetector> base,
                   EnhancementClassifier classifier,
                   AnchorMode anchor_mode = AnchorMode::Batch,
                   std::pair<double, double> base_norm = {0.0, 0.0},
                   std::pair<double, double> clf_norm = {0.0, 1.0})
      : base_(std::move(base)),
        classifier_(std::move(classifier)),
        anchor_mode_(anchor_mode),
        base_norm_(base_norm),
        clf_norm_(clf_norm) {}

  const FittedDetector& base() const { return *base_; }
  const EnhancementClassifier& classifier() const { return classifier_; }
  AnchorMode anchor_mode() const { return anchor_mode_; }

  Vector fused_score(const Dataset& X) const;
  Vector fused_score(const Matrix& X) const;

 private:
  std::shared_ptr<const FittedDetector> base_;
  EnhancementClassifier classifier_;
  AnchorMode anchor_mode_;
  std::pair<double, double> base_norm_;
  std::pair<double, double> clf_norm_;
};

}  // namespace das
