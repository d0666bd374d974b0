#include "das/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace das {

const char* to_string(GeneratorTag tag) {
  switch (tag) {
    case GeneratorTag::Das: return "das";
    case GeneratorTag::Gaussian: return "gaussian";
    case GeneratorTag::RandomUniform: return "random_uniform";
    case GeneratorTag::Smote: return "smote";
    case GeneratorTag::AblationGeneric: return "ablation_generic";
    case GeneratorTag::AblationSimple: return "ablation_simple";
    case GeneratorTag::AblationRandom: return "ablation_random";
  }
  return "unknown";
}

std::optional<GeneratorTag> generator_tag_from_string(const std::string& name) {
  for (GeneratorTag tag :
       {GeneratorTag::Das, GeneratorTag::Gaussian, GeneratorTag::RandomUniform,
        GeneratorTag::Smote, GeneratorTag::AblationGeneric,
        GeneratorTag::AblationSimple, GeneratorTag::AblationRandom}) {
    if (name == to_string(tag)) return tag;
  }
  return std::nullopt;
}

const char* to_string(DirectionStrategy s) {
  switch (s) {
    case DirectionStrategy::Auto: return "auto";
    case DirectionStrategy::CentroidOutward: return "centroid_outward";
    case DirectionStrategy::PrincipalSubspace: return "principal_subspace";
    case DirectionStrategy::CoordinateSwap: return "coordinate_swap";
    case DirectionStrategy::BorderlinePeer: return "borderline_peer";
    case DirectionStrategy::RandomUnit: return "random_unit";
  }
  return "unknown";
}

std::optional<DirectionStrategy> direction_strategy_from_string(
    const std::string& name) {
  for (DirectionStrategy s :
       {DirectionStrategy::Auto, DirectionStrategy::CentroidOutward,
        DirectionStrategy::PrincipalSubspace, DirectionStrategy::CoordinateSwap,
        DirectionStrategy::BorderlinePeer, DirectionStrategy::RandomUnit}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

DirectionStrategy direction_strategy_for(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::IForest: return DirectionStrategy::CentroidOutward;
    case DetectorKind::Pca: return DirectionStrategy::PrincipalSubspace;
    case DetectorKind::Ecod: return DirectionStrategy::CoordinateSwap;
    case DetectorKind::Ocsvm: return DirectionStrategy::BorderlinePeer;
  }
  return DirectionStrategy::RandomUnit;
}

void SynthesisPolicy::validate() const {
  if (!(seed_percentile > 0.0 && seed_percentile < 100.0)) {
    throw SynthesisError("seed_percentile must be in (0,100)");
  }
  if (!(step_init > 0.0)) throw SynthesisError("step_init must be > 0");
  if (!(step_growth > 1.0)) throw SynthesisError("step_growth must be > 1");
  if (max_steps < 1) throw SynthesisError("max_steps must be >= 1");
  if (!(score_band_lo < score_band_hi)) {
    throw SynthesisError("score_band lo must be below hi");
  }
  if (score_band_lo < 0.0 || score_band_hi > 1.0) {
    throw SynthesisError("score_band quantiles must be in [0,1]");
  }
  if (min_seed_distance_scale < 0.0) {
    throw SynthesisError("min_seed_distance_scale must be >= 0");
  }
}

namespace {

double quantile(std::vector<double> sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

Vector random_unit_vector(Eigen::Index d, Rng& rng) {
  Vector v(d);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

double nearest_train_distance(const Matrix& X, const Vector& p) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    best = std::min(best, (X.row(i).transpose() - p).norm());
  }
  return best;
}

SynthesizedSet from_rows(std::vector<Vector> rows,
                         std::vector<SynthesizedPointInfo> info,
                         GeneratorTag tag, int requested, int failed,
                         Eigen::Index d) {
  SynthesizedSet set;
  set.tag = tag;
  set.requested = requested;
  set.failed_draws = failed;
  set.provenance = std::move(info);
  set.points.resize(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    set.points.row(static_cast<Eigen::Index>(i)) = rows[i];
  }
  return set;
}

}  // namespace

double mean_nearest_neighbor_distance(const Matrix& X) {
  const Eigen::Index n = X.rows();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      best = std::min(best, (X.row(i) - X.row(j)).norm());
    }
    total += best;
  }
  return total / static_cast<double>(n);
}

std::vector<Eigen::Index> select_borderline_seeds(const FittedDetector& det,
                                                 const Dataset& train,
                                                 double percentile) {
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw SynthesisError("percentile must be in (0,100)");
  }
  const Vector scores = det.predict_score(train.features);
  std::vector<double> sorted(scores.data(), scores.data() + scores.size());
  std::sort(sorted.begin(), sorted.end());
  const double threshold = quantile(sorted, percentile / 100.0);

  std::vector<Eigen::Index> seeds;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (scores(i) >= threshold) seeds.push_back(i);
  }
  if (seeds.empty()) {
    Eigen::Index argmax = 0;
    scores.maxCoeff(&argmax);
    seeds.push_back(argmax);
  }
  return seeds;
}

namespace {

ExtrapolationContext make_context_impl(const FittedDetector& det,
                                       const Dataset& train,
                                       const SynthesisPolicy& policy,
                                       bool use_scores) {
  policy.validate();
  ExtrapolationContext ctx;
  const Matrix& X = train.features;
  ctx.centroid = X.colwise().mean();
  ctx.feature_std =
      ((X.rowwise() - ctx.centroid.transpose()).array().square().colwise().mean())
          .sqrt();
  // Zero-spread features get unit step scale so displacement stays possible.
  for (Eigen::Index j = 0; j < ctx.feature_std.size(); ++j) {
    if (ctx.feature_std(j) <= 0.0) ctx.feature_std(j) = 1.0;
  }

  ctx.min_distance =
      policy.min_seed_distance_scale * mean_nearest_neighbor_distance(X);

  if (use_scores) {
    const Vector scores = det.predict_score(X);
    std::vector<double> sorted(scores.data(), scores.data() + scores.size());
    std::sort(sorted.begin(), sorted.end());
    // Quantile 0 / 1 are vacuous bounds, not the sample min / max: a band of
    // (0, 1) must accept every candidate.
    ctx.band_lo_score = policy.score_band_lo <= 0.0
                            ? -std::numeric_limits<double>::infinity()
                            : quantile(sorted, policy.score_band_lo);
    ctx.band_hi_score = policy.score_band_hi >= 1.0
                            ? std::numeric_limits<double>::infinity()
                            : quantile(sorted, policy.score_band_hi);
    ctx.borderline = select_borderline_seeds(det, train, policy.seed_percentile);
  } else {
    // Score-free fringe proxy: seeds are the training rows in the top
    // percentile of distance from the centroid.
    std::vector<double> dist(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      dist[static_cast<std::size_t>(i)] =
          (X.row(i).transpose() - ctx.centroid).norm();
    }
    std::vector<double> sorted = dist;
    std::sort(sorted.begin(), sorted.end());
    const double threshold = quantile(sorted, policy.seed_percentile / 100.0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      if (dist[static_cast<std::size_t>(i)] >= threshold) {
        ctx.borderline.push_back(i);
      }
    }
    if (ctx.borderline.empty()) ctx.borderline.push_back(0);
  }
  return ctx;
}

}  // namespace

ExtrapolationContext make_extrapolation_context(const FittedDetector& det,
                                                const Dataset& train,
                                                const SynthesisPolicy& policy) {
  return make_context_impl(det, train, policy, /*use_scores=*/true);
}

namespace {

Vector propose_candidate(const Vector& seed, double step,
                         DirectionStrategy strategy, const FittedDetector& det,
                         const Dataset& train, const ExtrapolationContext& ctx,
                         Rng& rng) {
  const Eigen::Index d = seed.size();
  switch (strategy) {
    case DirectionStrategy::CentroidOutward: {
      Vector dir = seed - ctx.centroid;
      const double norm = dir.norm();
      dir = norm > 1e-12 ? Vector(dir / norm) : random_unit_vector(d, rng);
      return seed + step * dir.cwiseProduct(ctx.feature_std);
    }
    case DirectionStrategy::PrincipalSubspace: {
      const auto* pca = std::get_if<PcaModel>(&det.state());
      const Matrix& basis =
          pca != nullptr && pca->basis.cols() > 0 ? pca->basis
                                                  : ctx.principal_basis;
      if (basis.cols() == 0) {
        return seed + step * random_unit_vector(d, rng).cwiseProduct(ctx.feature_std);
      }
      Vector coeff(basis.cols());
      for (Eigen::Index i = 0; i < coeff.size(); ++i) coeff(i) = rng.normal();
      Vector dir = basis * coeff;
      const double norm = dir.norm();
      if (norm < 1e-12) dir = basis.col(0); else dir /= norm;
      // Step is isotropic here: the subspace direction must not be bent out
      // of the retained basis by per-feature scaling.
      const double scale = ctx.feature_std.mean();
      return seed + step * scale * dir;
    }
    case DirectionStrategy::CoordinateSwap: {
      Vector candidate = seed;
      const Eigen::Index n_swap =
          std::max<Eigen::Index>(1, (d + 1) / 2);
      std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      for (Eigen::Index s = 0; s < n_swap; ++s) {
        const Eigen::Index j = order[static_cast<std::size_t>(s)];
        const Eigen::Index donor = static_cast<Eigen::Index>(
            rng.uniform_index(static_cast<std::size_t>(train.rows())));
        candidate(j) = train.features(donor, j);
      }
      return candidate;
    }
    case DirectionStrategy::BorderlinePeer: {
      // Tangential walk toward the nearest other borderline seed.
      double best = std::numeric_limits<double>::infinity();
      Eigen::Index peer = -1;
      for (Eigen::Index idx : ctx.borderline) {
        const double dist = (train.features.row(idx).transpose() - seed).norm();
        if (dist > 1e-12 && dist < best) {
          best = dist;
          peer = idx;
        }
      }
      Vector dir = peer >= 0
                       ? Vector((train.features.row(peer).transpose() - seed) / best)
                       : random_unit_vector(d, rng);
      return seed + step * dir.cwiseProduct(ctx.feature_std);
    }
    case DirectionStrategy::RandomUnit:
    case DirectionStrategy::Auto:
      return seed + step * random_unit_vector(d, rng).cwiseProduct(ctx.feature_std);
  }
  return seed;
}

}  // namespace

std::optional<Vector> controlled_extrapolation(
    const Vector& seed_point, const FittedDetector& det, const Dataset& train,
    const SynthesisPolicy& policy, const ExtrapolationContext& ctx, Rng& rng,
    DirectionStrategy strategy, bool use_score_band, int* steps_taken) {
  double step = policy.step_init;
  for (int attempt = 1; attempt <= policy.max_steps; ++attempt) {
    const Vector candidate =
        propose_candidate(seed_point, step, strategy, det, train, ctx, rng);
    bool ok = true;
    if (use_score_band) {
      const double score = det.predict_score_one(candidate);
      ok = score >= ctx.band_lo_score && score <= ctx.band_hi_score;
    }
    if (ok && ctx.min_distance > 0.0) {
      ok = nearest_train_distance(train.features, candidate) >= ctx.min_distance;
    }
    if (ok) {
      if (steps_taken != nullptr) *steps_taken = attempt;
      return candidate;
    }
    step *= policy.step_growth;
  }
  return std::nullopt;
}

namespace {

SynthesizedSet das_like_synthesis(int n_samples, const FittedDetector& det,
                                  const Dataset& train,
                                  const SynthesisPolicy& policy,
                                  GeneratorTag tag, DirectionStrategy strategy,
                                  bool use_score_band, bool random_seeds) {
  if (n_samples < 0) throw SynthesisError("n_samples must be >= 0");
  policy.validate();

  ExtrapolationContext ctx = make_context_impl(det, train, policy, use_score_band);
  DirectionStrategy resolved =
      strategy != DirectionStrategy::Auto ? strategy
                                          : policy.direction_strategy;
  if (resolved == DirectionStrategy::Auto) {
    resolved = direction_strategy_for(det.kind());
  }
  if (resolved == DirectionStrategy::PrincipalSubspace &&
      std::get_if<PcaModel>(&det.state()) == nullptr && train.rows() >= 2) {
    ctx.principal_basis = pca_fit(train.features, 0.9).basis;
  }

  Rng root(policy.rng_seed);
  std::vector<Vector> rows;
  std::vector<SynthesizedPointInfo> info;
  int failed = 0;
  // Each accepted point needs one draw; failed draws are retried with fresh
  // seeds up to a bounded budget so an unreachable band terminates.
  const long max_draws = 10L * std::max(n_samples, 1);
  long draw = 0;
  while (static_cast<int>(rows.size()) < n_samples && draw < max_draws) {
    Rng rng = root.split(static_cast<std::uint64_t>(draw));
    ++draw;
    const Eigen::Index seed_idx =
        random_seeds
            ? static_cast<Eigen::Index>(
                  rng.uniform_index(static_cast<std::size_t>(train.rows())))
            : ctx.borderline[rng.uniform_index(ctx.borderline.size())];
    const Vector seed = train.features.row(seed_idx);
    int steps = 0;
    const auto point = controlled_extrapolation(seed, det, train, policy, ctx,
                                                rng, resolved, use_score_band,
                                                &steps);
    if (!point) {
      ++failed;
      continue;
    }
    rows.push_back(*point);
    const double final_score =
        use_score_band ? det.predict_score_one(*point) : 0.0;
    info.push_back({seed_idx, steps, final_score});
  }
  return from_rows(std::move(rows), std::move(info), tag, n_samples, failed,
                   train.cols());
}

}  // namespace

SynthesizedSet generate_hard_anomalies(int n_samples, const FittedDetector& det,
                                       const Dataset& train,
                                       const SynthesisPolicy& policy) {
  return das_like_synthesis(n_samples, det, train, policy, GeneratorTag::Das,
                            DirectionStrategy::Auto, /*use_score_band=*/true,
                            /*random_seeds=*/false);
}

SynthesizedSet ablation_variant(AblationVariant variant, int n_samples,
                                const FittedDetector& det, const Dataset& train,
                                const SynthesisPolicy& policy) {
  switch (variant) {
    case AblationVariant::Generic:
      return das_like_synthesis(n_samples, det, train, policy,
                                GeneratorTag::AblationGeneric,
                                DirectionStrategy::RandomUnit, true, false);
    case AblationVariant::Simple:
      return das_like_synthesis(n_samples, det, train, policy,
                                GeneratorTag::AblationSimple,
                                DirectionStrategy::Auto, false, false);
    case AblationVariant::Random:
      return das_like_synthesis(n_samples, det, train, policy,
                                GeneratorTag::AblationRandom,
                                DirectionStrategy::Auto, true, true);
  }
  throw SynthesisError("unknown ablation variant");
}

SynthesizedSet gaussian_noise_synthesis(const Dataset& train, int n_samples,
                                        double sigma_scale, Rng& rng) {
  if (n_samples < 0) throw SynthesisError("n_samples must be >= 0");
  const Matrix& X = train.features;
  const Vector mean = X.colwise().mean();
  const Vector std =
      ((X.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt();

  std::vector<Vector> rows;
  std::vector<SynthesizedPointInfo> info;
  for (int i = 0; i < n_samples; ++i) {
    const Eigen::Index src = static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::size_t>(X.rows())));
    Vector p = X.row(src);
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      p(j) += sigma_scale * std(j) * rng.normal();
    }
    rows.push_back(p);
    info.push_back({src, 0, 0.0});
  }
  return from_rows(std::move(rows), std::move(info), GeneratorTag::Gaussian,
                   n_samples, 0, X.cols());
}

SynthesizedSet random_uniform_synthesis(const Dataset& train, int n_samples,
                                        double expansion, Rng& rng) {
  if (n_samples < 0) throw SynthesisError("n_samples must be >= 0");
  const Matrix& X = train.features;
  const Vector lo = X.colwise().minCoeff();
  const Vector hi = X.colwise().maxCoeff();
  const Vector range = hi - lo;

  std::vector<Vector> rows;
  std::vector<SynthesizedPointInfo> info;
  for (int i = 0; i < n_samples; ++i) {
    Vector p(X.cols());
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      p(j) = rng.uniform(lo(j) - expansion * range(j),
                         hi(j) + expansion * range(j));
    }
    rows.push_back(p);
    info.push_back({-1, 0, 0.0});
  }
  return from_rows(std::move(rows), std::move(info),
                   GeneratorTag::RandomUniform, n_samples, 0, X.cols());
}

SynthesizedSet smote_synthesis(const Dataset& train, int n_samples,
                               int k_neighbors, Rng& rng) {
  if (n_samples < 0) throw SynthesisError("n_samples must be >= 0");
  if (k_neighbors < 1) throw SynthesisError("k_neighbors must be >= 1");
  const Matrix& X = train.features;
  const Eigen::Index n = X.rows();
  if (n <= k_neighbors) {
    throw SynthesisError("smote: need more rows than neighbors");
  }

  std::vector<Vector> rows;
  std::vector<SynthesizedPointInfo> info;
  for (int s = 0; s < n_samples; ++s) {
    const Eigen::Index a = static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::size_t>(n)));
    // k nearest neighbors of a by Euclidean distance (a excluded).
    std::vector<std::pair<double, Eigen::Index>> dist;
    dist.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != a) dist.emplace_back((X.row(i) - X.row(a)).norm(), i);
    }
    std::partial_sort(dist.begin(), dist.begin() + k_neighbors, dist.end());
    const Eigen::Index b =
        dist[rng.uniform_index(static_cast<std::size_t>(k_neighbors))].second;
    const double lambda = rng.uniform();
    rows.push_back(X.row(a) + lambda * (X.row(b) - X.row(a)));
    info.push_back({a, 0, 0.0});
  }
  return from_rows(std::move(rows), std::move(info), GeneratorTag::Smote,
                   n_samples, 0, X.cols());
}

SynthesizedSet synthesize(GeneratorTag tag, int n_samples,
                          const FittedDetector& det, const Dataset& train,
                          const SynthesisPolicy& policy) {
  Rng rng(policy.rng_seed);
  switch (tag) {
    case GeneratorTag::Das:
      return generate_hard_anomalies(n_samples, det, train, policy);
    case GeneratorTag::Gaussian:
      return gaussian_noise_synthesis(train, n_samples, 0.1, rng);
    case GeneratorTag::RandomUniform:
      return random_uniform_synthesis(train, n_samples, 0.1, rng);
    case GeneratorTag::Smote: {
      const int k = static_cast<int>(
          std::min<Eigen::Index>(5, train.rows() - 1));
      return smote_synthesis(train, n_samples, std::max(1, k), rng);
    }
    case GeneratorTag::AblationGeneric:
      return ablation_variant(AblationVariant::Generic, n_samples, det, train,
                              policy);
    case GeneratorTag::AblationSimple:
      return ablation_variant(AblationVariant::Simple, n_samples, det, train,
                              policy);
    case GeneratorTag::AblationRandom:
      return ablation_variant(AblationVariant::Random, n_samples, det, train,
                              policy);
  }
  throw SynthesisError("unknown generator tag");
}

void save_synthesized_csv(const SynthesizedSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SynthesisError("cannot write file: " + path);
  const Eigen::Index d = set.points.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << 'f' << j << ',';
  out << "seed_index,steps_taken,final_base_score,generator\n";
  char buf[64];
  for (Eigen::Index i = 0; i < set.points.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", set.points(i, j));
      out << buf << ',';
    }
    const auto& p = set.provenance[static_cast<std::size_t>(i)];
    std::snprintf(buf, sizeof buf, "%.17g", p.final_base_score);
    out << p.seed_index << ',' << p.steps_taken << ',' << buf << ','
        << to_string(set.tag) << '\n';
  }
}

}  // namespace das
