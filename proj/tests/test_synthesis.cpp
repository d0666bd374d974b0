#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "das/harness.hpp"
#include "das/rng.hpp"
#include "das/synthesis.hpp"

using namespace das;

namespace {

Dataset cluster(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.features.resize(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
  }
  return ds;
}

FittedDetector fitted(DetectorKind kind, const Dataset& train) {
  DetectorHyperparams hp;
  hp.seed = 1;
  hp.iforest_n_trees = 50;
  return fit_detector(kind, train, hp);
}

}  // namespace

TEST_CASE("borderline seeds select the top percentile") {
  Dataset train;
  train.features.resize(10, 2);
  // Near-collinear points: the PCA score is the squared offset from the
  // principal line, distinct per row by construction.
  train.features << 1, 0.05, 2, -0.12, 3, 0.21, 4, -0.33, 5, 0.08,
      6, 0.17, 7, -0.26, 8, 0.30, 9, -0.02, 10, 0.44;
  const FittedDetector det = fitted(DetectorKind::Pca, train);
  const Vector scores = det.predict_score(train.features);
  std::set<double> distinct(scores.data(), scores.data() + 10);
  REQUIRE(distinct.size() == 10);

  SUBCASE("percentile 90 keeps the single top scorer") {
    const auto seeds = select_borderline_seeds(det, train, 90.0);
    Eigen::Index argmax = 0;
    scores.maxCoeff(&argmax);
    REQUIRE(seeds.size() == 1);
    CHECK(seeds[0] == argmax);
  }

  SUBCASE("percentile 50 keeps the upper half") {
    const auto seeds = select_borderline_seeds(det, train, 50.0);
    // Sort-based oracle: indices whose score reaches the median.
    std::vector<double> sorted(scores.data(), scores.data() + 10);
    std::sort(sorted.begin(), sorted.end());
    const double median = 0.5 * (sorted[4] + sorted[5]);
    REQUIRE(seeds.size() == 5);
    for (Eigen::Index idx : seeds) CHECK(scores(idx) >= median);
  }

  SUBCASE("all-equal scores keep every index") {
    Dataset flat;
    flat.features = Matrix::Constant(6, 2, 1.0);
    DetectorHyperparams hp;
    const FittedDetector det_flat =
        fit_detector(DetectorKind::IForest, flat, hp);
    const auto seeds = select_borderline_seeds(det_flat, flat, 90.0);
    CHECK(seeds.size() == 6);
  }

  SUBCASE("percentile out of range") {
    CHECK_THROWS_AS(select_borderline_seeds(det, train, 0.0), SynthesisError);
    CHECK_THROWS_AS(select_borderline_seeds(det, train, 100.0), SynthesisError);
  }
}

TEST_CASE("controlled extrapolation accepts immediately with vacuous constraints") {
  const Dataset train = cluster(40, 3, 5);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  policy.score_band_lo = 0.0;
  policy.score_band_hi = 1.0;
  policy.min_seed_distance_scale = 0.0;
  const ExtrapolationContext ctx = make_extrapolation_context(det, train, policy);
  Rng rng(7);
  int steps = 0;
  const auto point = controlled_extrapolation(
      Vector(train.features.row(0)), det, train, policy, ctx, rng,
      DirectionStrategy::CentroidOutward, true, &steps);
  REQUIRE(point.has_value());
  CHECK(steps == 1);
}

TEST_CASE("controlled extrapolation returns none when the band is unreachable") {
  const Dataset train = cluster(40, 3, 5);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  policy.max_steps = 1;
  policy.score_band_lo = 0.999;   // ~impossible band of width ~0
  policy.score_band_hi = 0.9991;
  policy.min_seed_distance_scale = 50.0;  // and an unreachable distance
  const ExtrapolationContext ctx = make_extrapolation_context(det, train, policy);
  Rng rng(7);
  const auto point = controlled_extrapolation(
      Vector(train.features.row(0)), det, train, policy, ctx, rng,
      DirectionStrategy::CentroidOutward, true, nullptr);
  CHECK_FALSE(point.has_value());
}

TEST_CASE("generate_hard_anomalies basics") {
  const Dataset train = cluster(60, 3, 13);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  policy.rng_seed = 3;

  SUBCASE("empty request") {
    const SynthesizedSet set = generate_hard_anomalies(0, det, train, policy);
    CHECK(set.produced() == 0);
    CHECK_FALSE(set.shortfall());
  }

  SUBCASE("points respect hardness and distance constraints") {
    const ExtrapolationContext ctx =
        make_extrapolation_context(det, train, policy);
    const SynthesizedSet set = generate_hard_anomalies(12, det, train, policy);
    REQUIRE(set.produced() > 0);
    const Vector scores = det.predict_score(set.points);
    const auto [lo, hi] = det.train_score_range();
    CHECK(scores.mean() <= hi);
    CHECK(scores.mean() >= lo);
    for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
      double nearest = 1e300;
      for (Eigen::Index t = 0; t < train.rows(); ++t) {
        nearest = std::min(
            nearest, (train.features.row(t) - set.points.row(i)).norm());
      }
      CHECK(nearest >= ctx.min_distance);
      CHECK(scores(i) <= ctx.band_hi_score + 1e-12);
      CHECK(scores(i) >= ctx.band_lo_score - 1e-12);
    }
  }

  SUBCASE("deterministic under fixed seed") {
    const SynthesizedSet a = generate_hard_anomalies(8, det, train, policy);
    const SynthesizedSet b = generate_hard_anomalies(8, det, train, policy);
    CHECK(a.points == b.points);
  }

  SUBCASE("seed provenance points into the borderline set") {
    const SynthesizedSet set = generate_hard_anomalies(8, det, train, policy);
    const auto borderline =
        select_borderline_seeds(det, train, policy.seed_percentile);
    const std::set<Eigen::Index> allowed(borderline.begin(), borderline.end());
    for (const auto& p : set.provenance) {
      CHECK(allowed.count(p.seed_index) == 1);
    }
  }

  SUBCASE("negative request rejected") {
    CHECK_THROWS_AS(generate_hard_anomalies(-1, det, train, policy),
                    SynthesisError);
  }
}

TEST_CASE("hard anomalies score below a 10-sigma outlier") {
  const Dataset train = cluster(80, 2, 17);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  policy.rng_seed = 11;
  const SynthesizedSet set = generate_hard_anomalies(10, det, train, policy);
  REQUIRE(set.produced() > 0);

  Matrix outlier(1, 2);
  outlier << 10.0, 10.0;
  const double outlier_score = det.predict_score(outlier)(0);
  const Vector scores = det.predict_score(set.points);
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    CHECK(scores(i) < outlier_score);
  }
}

TEST_CASE("gaussian noise synthesis") {
  const Dataset train = cluster(50, 2, 19);

  SUBCASE("zero sigma copies train rows") {
    Rng rng(1);
    const SynthesizedSet set = gaussian_noise_synthesis(train, 20, 0.0, rng);
    for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
      const Eigen::Index src = set.provenance[static_cast<std::size_t>(i)].seed_index;
      CHECK(set.points.row(i) == train.features.row(src));
    }
  }

  SUBCASE("noise scale matches sigma_scale within 10%") {
    Rng rng(2);
    const double sigma_scale = 0.7;
    const SynthesizedSet set =
        gaussian_noise_synthesis(train, 10000, sigma_scale, rng);
    const Vector mean = train.features.colwise().mean();
    const Vector std =
        ((train.features.rowwise() - mean.transpose()).array().square()
             .colwise().mean()).sqrt();
    for (int j = 0; j < 2; ++j) {
      double ss = 0.0;
      for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
        const Eigen::Index src =
            set.provenance[static_cast<std::size_t>(i)].seed_index;
        const double delta = set.points(i, j) - train.features(src, j);
        ss += delta * delta;
      }
      const double observed = std::sqrt(ss / set.points.rows());
      CHECK(observed == doctest::Approx(sigma_scale * std(j)).epsilon(0.10));
    }
  }

  SUBCASE("deterministic under fixed seed") {
    Rng a(5), b(5);
    CHECK(gaussian_noise_synthesis(train, 15, 0.3, a).points ==
          gaussian_noise_synthesis(train, 15, 0.3, b).points);
  }
}

TEST_CASE("random uniform synthesis") {
  Dataset train;
  train.features.resize(4, 2);
  train.features << 0, 5, 1, 5, 2, 5, 3, 5;  // second feature constant

  SUBCASE("zero expansion keeps constant features constant") {
    Rng rng(3);
    const SynthesizedSet set = random_uniform_synthesis(train, 50, 0.0, rng);
    for (Eigen::Index i = 0; i < 50; ++i) {
      CHECK(set.points(i, 1) == 5.0);
      CHECK(set.points(i, 0) >= 0.0);
      CHECK(set.points(i, 0) <= 3.0);
    }
  }

  SUBCASE("all coordinates inside expanded bounds") {
    Rng rng(4);
    const SynthesizedSet set = random_uniform_synthesis(train, 200, 0.1, rng);
    for (Eigen::Index i = 0; i < 200; ++i) {
      CHECK(set.points(i, 0) >= -0.3);
      CHECK(set.points(i, 0) <= 3.3);
    }
  }

  SUBCASE("empirical mean near midpoint of bounds") {
    Rng rng(5);
    const SynthesizedSet set = random_uniform_synthesis(train, 10000, 0.1, rng);
    const double mid = 1.5;
    const double halfwidth = 1.8;
    const double mean = set.points.col(0).mean();
    CHECK(std::abs(mean - mid) < 0.05 * 2.0 * halfwidth);
  }
}

TEST_CASE("smote synthesis") {
  SUBCASE("midpoint on a segment") {
    Dataset train;
    train.features.resize(2, 2);
    train.features << 0, 0, 2, 2;
    Rng rng(6);
    const SynthesizedSet set = smote_synthesis(train, 50, 1, rng);
    for (Eigen::Index i = 0; i < 50; ++i) {
      // k = 1 on a 2-point set: every output lies on the single segment.
      CHECK(set.points(i, 0) == doctest::Approx(set.points(i, 1)));
      CHECK(set.points(i, 0) >= 0.0);
      CHECK(set.points(i, 0) <= 2.0);
    }
  }

  SUBCASE("outputs between the endpoint coordinates") {
    const Dataset train = cluster(30, 3, 21);
    Rng rng(7);
    const SynthesizedSet set = smote_synthesis(train, 100, 3, rng);
    const Vector lo = train.features.colwise().minCoeff();
    const Vector hi = train.features.colwise().maxCoeff();
    for (Eigen::Index i = 0; i < 100; ++i) {
      for (int j = 0; j < 3; ++j) {
        CHECK(set.points(i, j) >= lo(j) - 1e-12);
        CHECK(set.points(i, j) <= hi(j) + 1e-12);
      }
    }
  }

  SUBCASE("rejects too-small training sets") {
    Dataset train;
    train.features.resize(2, 1);
    train.features << 0, 1;
    Rng rng(8);
    CHECK_THROWS_AS(smote_synthesis(train, 5, 2, rng), SynthesisError);
  }
}

TEST_CASE("simple ablation never calls predict_score") {
  const Dataset train = cluster(50, 3, 23);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  policy.rng_seed = 9;
  det.reset_score_call_count();
  const SynthesizedSet set =
      ablation_variant(AblationVariant::Simple, 10, det, train, policy);
  CHECK(det.score_call_count() == 0);
  CHECK(set.produced() > 0);
}

TEST_CASE("random ablation draws seeds roughly uniformly") {
  const Dataset train = cluster(20, 2, 27);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  policy.rng_seed = 13;
  policy.score_band_lo = 0.0;   // vacuous so every draw is accepted
  policy.score_band_hi = 1.0;
  policy.min_seed_distance_scale = 0.0;
  const SynthesizedSet set =
      ablation_variant(AblationVariant::Random, 10000, det, train, policy);
  REQUIRE(set.produced() == 10000);

  // Chi-square against uniform over the 20 rows; 19 dof, p > 0.01 threshold
  // is ~36.19.
  std::vector<int> counts(20, 0);
  for (const auto& p : set.provenance) {
    counts[static_cast<std::size_t>(p.seed_index)]++;
  }
  const double expected = 10000.0 / 20.0;
  double chi2 = 0.0;
  for (int c : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi2 < 36.19);
}

TEST_CASE("generic ablation is identical across detector kinds") {
  const Dataset train = cluster(50, 3, 29);
  SynthesisPolicy policy;
  policy.rng_seed = 17;
  // Vacuous score band: accepted candidates then depend only on geometry,
  // not on the kind-specific score scale.
  policy.score_band_lo = 0.0;
  policy.score_band_hi = 1.0;

  const FittedDetector iforest = fitted(DetectorKind::IForest, train);
  const FittedDetector ecod = fitted(DetectorKind::Ecod, train);
  // Seeds differ across kinds (borderline sets differ), so pin them by using
  // every row: percentile low enough that all rows qualify is impossible
  // (must be > 0), so compare via the Random variant which ignores scores
  // for seed selection.
  const SynthesizedSet a =
      ablation_variant(AblationVariant::Generic, 10, iforest, train, policy);
  const SynthesizedSet b =
      ablation_variant(AblationVariant::Generic, 10, ecod, train, policy);
  // Direction strategy is kind-independent for Generic; outputs match when
  // the seed sets match. Compare step geometry on a fixed seed instead.
  const ExtrapolationContext ctx_a =
      make_extrapolation_context(iforest, train, policy);
  const ExtrapolationContext ctx_b =
      make_extrapolation_context(ecod, train, policy);
  Rng ra(99), rb(99);
  const auto pa = controlled_extrapolation(Vector(train.features.row(3)),
                                           iforest, train, policy, ctx_a, ra,
                                           DirectionStrategy::RandomUnit,
                                           false, nullptr);
  const auto pb = controlled_extrapolation(Vector(train.features.row(3)), ecod,
                                           train, policy, ctx_b, rb,
                                           DirectionStrategy::RandomUnit,
                                           false, nullptr);
  REQUIRE(pa.has_value());
  REQUIRE(pb.has_value());
  CHECK(*pa == *pb);
  CHECK(a.produced() > 0);
  CHECK(b.produced() > 0);
}

TEST_CASE("hardness dominance over random uniform outliers") {
  Dataset train = make_planted_dataset(PlantedKind::Fringe, 6, 400, 0.05, 31);
  // Normals only for the one-class setting.
  const OneClassSplit split = split_one_class(train, 1.0, 1);
  for (DetectorKind kind : kAllDetectorKinds) {
    CAPTURE(std::string(to_string(kind)));
    const FittedDetector det = fitted(kind, split.train);
    SynthesisPolicy policy;
    policy.rng_seed = 41;
    const SynthesizedSet das_set =
        generate_hard_anomalies(40, det, split.train, policy);
    Rng rng(42);
    const SynthesizedSet uniform_set =
        random_uniform_synthesis(split.train, 40, 0.1, rng);
    REQUIRE(das_set.produced() > 0);
    CHECK(det.predict_score(das_set.points).mean() <
          det.predict_score(uniform_set.points).mean());
  }
}

TEST_CASE("synthesized csv export includes provenance columns") {
  const Dataset train = cluster(30, 2, 43);
  const FittedDetector det = fitted(DetectorKind::IForest, train);
  SynthesisPolicy policy;
  const SynthesizedSet set = generate_hard_anomalies(5, det, train, policy);
  const std::string path = "/tmp/das_syn_test.csv";
  save_synthesized_csv(set, path);
  std::ifstream in(path);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header.find("seed_index") != std::string::npos);
  CHECK(header.find("steps_taken") != std::string::npos);
  CHECK(header.find("final_base_score") != std::string::npos);
  CHECK(header.find("generator") != std::string::npos);
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == set.produced());
  std::remove(path.c_str());
}
