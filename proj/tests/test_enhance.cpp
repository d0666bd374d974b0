#include <doctest.h>

#include <cmath>
#include <memory>
#include <set>

#include "das/enhance.hpp"
#include "das/rng.hpp"

using namespace das;

namespace {

Dataset cluster(int n, int d, std::uint64_t seed, double shift = 0.0) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features(i, j) = rng.normal() + shift;
  }
  return ds;
}

SynthesizedSet as_synthesized(const Matrix& points) {
  SynthesizedSet set;
  set.points = points;
  set.requested = static_cast<int>(points.rows());
  set.provenance.resize(static_cast<std::size_t>(points.rows()));
  return set;
}

}  // namespace

TEST_CASE("augment stacks train rows then synthesized rows") {
  const Dataset train = cluster(10, 2, 1);
  const SynthesizedSet syn = as_synthesized(Matrix::Constant(4, 2, 9.0));
  const AugmentedSet aug = augment(train, syn);
  REQUIRE(aug.features.rows() == 14);
  CHECK(aug.labels.head(10).sum() == 0);
  CHECK(aug.labels.tail(4).sum() == 4);
  CHECK(aug.features.topRows(10) == train.features);
  CHECK(aug.features.bottomRows(4) == syn.points);
}

TEST_CASE("augment keeps duplicates (multiset union)") {
  Dataset train;
  train.features = Matrix::Constant(3, 2, 1.0);
  const SynthesizedSet syn = as_synthesized(Matrix::Constant(2, 2, 1.0));
  const AugmentedSet aug = augment(train, syn);
  CHECK(aug.features.rows() == 5);
}

TEST_CASE("augment with empty syn equals train, all labels 0") {
  const Dataset train = cluster(5, 2, 1);
  const SynthesizedSet empty = as_synthesized(Matrix(0, 2));
  const AugmentedSet aug = augment(train, empty);
  CHECK(aug.features == train.features);
  CHECK(aug.labels.sum() == 0);
}

TEST_CASE("augment rejects mismatched dimensionality") {
  const Dataset train = cluster(5, 2, 1);
  SynthesizedSet wrong_dim = as_synthesized(Matrix::Zero(2, 3));
  CHECK_THROWS_AS(augment(train, wrong_dim), EnhanceError);
}

TEST_CASE("forest separates a linearly separable toy problem") {
  AugmentedSet aug;
  aug.features.resize(20, 1);
  aug.labels.resize(20);
  for (int i = 0; i < 10; ++i) {
    aug.features(i, 0) = i * 0.1;       // class 0 in [0, 0.9]
    aug.labels(i) = 0;
    aug.features(10 + i, 0) = 5.0 + i;  // class 1 in [5, 14]
    aug.labels(10 + i) = 1;
  }
  ForestParams params;
  params.seed = 3;
  const EnhancementClassifier clf = fit_enhancement(aug, params);
  CHECK(clf.n_trees() == 100);

  Matrix probe(2, 1);
  probe << 0.5, 9.0;
  const Vector scores = clf.predict_score(probe);
  CHECK(scores(0) < 0.1);
  CHECK(scores(1) > 0.9);
}

TEST_CASE("single tree without bootstrap votes 0 or 1") {
  AugmentedSet aug;
  aug.features.resize(6, 1);
  aug.features << 0, 1, 2, 10, 11, 12;
  aug.labels.resize(6);
  aug.labels << 0, 0, 0, 1, 1, 1;
  ForestParams params;
  params.n_trees = 1;
  params.bootstrap = false;
  const EnhancementClassifier clf = fit_enhancement(aug, params);
  Matrix probe(4, 1);
  probe << -5, 1.5, 10.5, 100;
  const Vector scores = clf.predict_score(probe);
  for (int i = 0; i < 4; ++i) {
    CHECK((scores(i) == 0.0 || scores(i) == 1.0));
  }
  CHECK(scores(0) == 0.0);
  CHECK(scores(3) == 1.0);
}

TEST_CASE("forest scores live on the vote grid") {
  const Dataset normals = cluster(30, 2, 5);
  const Dataset anoms = cluster(10, 2, 6, 4.0);
  AugmentedSet aug;
  aug.features.resize(40, 2);
  aug.features.topRows(30) = normals.features;
  aug.features.bottomRows(10) = anoms.features;
  aug.labels = IntVector::Zero(40);
  aug.labels.tail(10).setConstant(1);
  ForestParams params;
  params.n_trees = 25;
  params.seed = 9;
  const EnhancementClassifier clf = fit_enhancement(aug, params);
  const Vector scores = clf.predict_score(cluster(50, 2, 7, 2.0).features);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double votes = scores(i) * 25.0;
    CHECK(std::abs(votes - std::round(votes)) < 1e-9);
    CHECK(scores(i) >= 0.0);
    CHECK(scores(i) <= 1.0);
  }
}

TEST_CASE("forest training is deterministic per seed") {
  const Dataset normals = cluster(40, 3, 11);
  const Dataset anoms = cluster(8, 3, 12, 3.0);
  AugmentedSet aug;
  aug.features.resize(48, 3);
  aug.features.topRows(40) = normals.features;
  aug.features.bottomRows(8) = anoms.features;
  aug.labels = IntVector::Zero(48);
  aug.labels.tail(8).setConstant(1);
  ForestParams params;
  params.n_trees = 20;
  params.seed = 77;
  const Matrix probe = cluster(30, 3, 13).features;
  const Vector a = fit_enhancement(aug, params).predict_score(probe);
  const Vector b = fit_enhancement(aug, params).predict_score(probe);
  CHECK(a == b);
  params.seed = 78;
  const Vector c = fit_enhancement(aug, params).predict_score(probe);
  CHECK(a != c);
}

TEST_CASE("fit_enhancement validates its input") {
  AugmentedSet aug;
  aug.features.resize(3, 1);
  aug.features << 1, 2, 3;
  aug.labels.resize(3);
  aug.labels << 0, 0, 0;  // single class
  ForestParams params;
  CHECK_THROWS_AS(fit_enhancement(aug, params), EnhanceError);

  aug.labels.resize(2);
  aug.labels << 0, 1;  // size mismatch
  CHECK_THROWS_AS(fit_enhancement(aug, params), EnhanceError);
}

TEST_CASE("min_max_normalize cases") {
  Vector s(3);
  s << 1.0, 2.0, 3.0;
  const Vector n = min_max_normalize(s);
  CHECK(n(0) == 0.0);
  CHECK(n(1) == doctest::Approx(0.5));
  CHECK(n(2) == 1.0);

  SUBCASE("constant batch maps to 0.5") {
    const Vector flat = min_max_normalize(Vector::Constant(4, 7.0));
    for (int i = 0; i < 4; ++i) CHECK(flat(i) == 0.5);
  }

  SUBCASE("external anchors clip out-of-range values") {
    const Vector c = min_max_normalize(s, std::make_pair(1.5, 2.5));
    CHECK(c(0) == 0.0);
    CHECK(c(1) == doctest::Approx(0.5));
    CHECK(c(2) == 1.0);
  }

  SUBCASE("degenerate anchors also map to 0.5") {
    const Vector c = min_max_normalize(s, std::make_pair(2.0, 2.0));
    for (int i = 0; i < 3; ++i) CHECK(c(i) == 0.5);
  }

  SUBCASE("affine transforms of the batch leave output unchanged") {
    const Vector t = 3.0 * s.array() + 11.0;
    const Vector nt = min_max_normalize(t);
    for (int i = 0; i < 3; ++i) CHECK(nt(i) == doctest::Approx(n(i)));
  }
}

TEST_CASE("fused score combines complementary rankings") {
  // Base detector: distance from origin. Classifier: trained so that a region
  // the base misses votes anomaly.
  const Dataset train = cluster(60, 2, 21);
  DetectorHyperparams hp;
  hp.seed = 2;
  auto base = std::make_shared<FittedDetector>(
      fit_detector(DetectorKind::IForest, train, hp));

  const Dataset anoms = cluster(12, 2, 22, 3.0);
  AugmentedSet aug;
  aug.features.resize(72, 2);
  aug.features.topRows(60) = train.features;
  aug.features.bottomRows(12) = anoms.features;
  aug.labels = IntVector::Zero(72);
  aug.labels.tail(12).setConstant(1);
  ForestParams params;
  params.seed = 23;
  EnhancedDetector fused(base, fit_enhancement(aug, params));

  Matrix probe(3, 2);
  probe << 0.0, 0.0,   // typical normal
           3.0, 3.0,   // planted anomaly region
           8.0, -8.0;  // far outlier
  const Vector scores = fused.fused_score(probe);
  CHECK(scores(0) < scores(1));
  CHECK(scores(0) < scores(2));
  for (int i = 0; i < 3; ++i) {
    CHECK(scores(i) >= 0.0);
    CHECK(scores(i) <= 2.0);
  }
}

TEST_CASE("batch-anchored fusion preserves base ranking when classifier is flat") {
  const Dataset train = cluster(50, 2, 31);
  DetectorHyperparams hp;
  hp.seed = 5;
  auto base = std::make_shared<FittedDetector>(
      fit_detector(DetectorKind::Pca, train, hp));

  // Classifier trained on separable far-away anomalies votes identically (0)
  // across a probe batch of normals, so fused ranking equals base ranking.
  const Dataset anoms = cluster(10, 2, 32, 50.0);
  AugmentedSet aug;
  aug.features.resize(60, 2);
  aug.features.topRows(50) = train.features;
  aug.features.bottomRows(10) = anoms.features;
  aug.labels = IntVector::Zero(60);
  aug.labels.tail(10).setConstant(1);
  ForestParams params;
  params.seed = 33;
  EnhancedDetector fused(base, fit_enhancement(aug, params));

  const Matrix probe = cluster(20, 2, 34).features;
  const Vector clf_scores = fused.classifier().predict_score(probe);
  REQUIRE(clf_scores.maxCoeff() == clf_scores.minCoeff());

  const Vector base_scores = base->predict_score(probe);
  const Vector fused_scores = fused.fused_score(probe);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) {
      if (base_scores(i) < base_scores(j)) {
        CHECK(fused_scores(i) <= fused_scores(j) + 1e-12);
      }
    }
  }
}
