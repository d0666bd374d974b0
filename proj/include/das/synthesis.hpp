#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "das/data.hpp"
#include "das/detector.hpp"
#include "das/rng.hpp"
#include "das/types.hpp"

namespace das {

struct SynthesisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class GeneratorTag {
  Das,
  Gaussian,
  RandomUniform,
  Smote,
  AblationGeneric,
  AblationSimple,
  AblationRandom,
};

const char* to_string(GeneratorTag tag);
std::optional<GeneratorTag> generator_tag_from_string(const std::string& name);

/// Per-kind displacement rule used by controlled extrapolation. `Auto`
/// resolves to the strategy matched to the detector being attacked.
enum class DirectionStrategy {
  Auto,
  CentroidOutward,   // iforest: along the fringe, away from the data centroid
  PrincipalSubspace, // pca: random direction inside the retained subspace
  CoordinateSwap,    // ecod: recombine marginally-typical coordinates
  BorderlinePeer,    // ocsvm: tangential walk toward the nearest borderline peer
  RandomUnit,        // detector-agnostic (Generic ablation)
};

const char* to_string(DirectionStrategy s);
std::optional<DirectionStrategy> direction_strategy_from_string(
    const std::string& name);

/// The strategy `Auto` resolves to for each detector kind.
DirectionStrategy direction_strategy_for(DetectorKind kind);

/// Parameters of the seed-selection + controlled-extrapolation policy.
/// min_seed_distance_scale multiplies the mean nearest-neighbor distance of
/// the training set, resolved at generation time.
struct SynthesisPolicy {
  double seed_percentile = 90.0;
  double step_init = 0.5;    // in units of per-feature train std
  double step_growth = 1.5;
  int max_steps = 20;
  double score_band_lo = 0.70;   // train-score quantiles the candidate must hit
  double score_band_hi = 0.999;
  double min_seed_distance_scale = 1.0;
  DirectionStrategy direction_strategy = DirectionStrategy::Auto;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SynthesizedPointInfo {
  Eigen::Index seed_index = -1;  // -1 for generators without seeds
  int steps_taken = 0;
  double final_base_score = 0.0;
};

struct SynthesizedSet {
  Matrix points;  // n_syn x d
  std::vector<SynthesizedPointInfo> provenance;
  GeneratorTag tag = GeneratorTag::Das;
  int requested = 0;
  int failed_draws = 0;  // draws whose extrapolation exhausted max_steps

  int produced() const { return static_cast<int>(points.rows()); }
  bool shortfall() const { return produced() < requested; }
};

/// Indices of training rows whose base score reaches the given percentile of
/// train scores (ties at the threshold kept; argmax fallback keeps the
/// result nonempty).
std::vector<Eigen::Index> select_borderline_seeds(const FittedDetector& det,
                                                  const Dataset& train,
                                                  double percentile);

/// Resolved per-dataset constants shared by every extrapolation draw.
struct ExtrapolationContext {
  Vector feature_std;
  Vector centroid;
  double band_lo_score = 0.0;  // train-score quantiles of the policy band
  double band_hi_score = 0.0;
  double min_distance = 0.0;   // resolved absolute nearest-train threshold
  std::vector<Eigen::Index> borderline;
  Matrix principal_basis;      // subspace for PrincipalSubspace when the base
                               // detector does not carry one (cross-detector)
};

ExtrapolationContext make_extrapolation_context(const FittedDetector& det,
                                                const Dataset& train,
                                                const SynthesisPolicy& policy);

/// Mean nearest-neighbor (Euclidean) distance over the training rows.
double mean_nearest_neighbor_distance(const Matrix& X);

/// Score-guided displacement of one borderline seed. Accepts the first
/// candidate whose base score lies inside the train-score band and whose
/// nearest-train distance clears the threshold; the step grows geometrically
/// on every rejection. `use_score_band = false` reproduces the Simple
/// ablation (no predict_score access).
std::optional<Vector> controlled_extrapolation(
    const Vector& seed_point, const FittedDetector& det, const Dataset& train,
    const SynthesisPolicy& policy, const ExtrapolationContext& ctx, Rng& rng,
    DirectionStrategy strategy, bool use_score_band, int* steps_taken = nullptr);

SynthesizedSet generate_hard_anomalies(int n_samples, const FittedDetector& det,
                                       const Dataset& train,
                                       const SynthesisPolicy& policy);

SynthesizedSet gaussian_noise_synthesis(const Dataset& train, int n_samples,
                                        double sigma_scale, Rng& rng);

SynthesizedSet random_uniform_synthesis(const Dataset& train, int n_samples,
                                        double expansion, Rng& rng);

SynthesizedSet smote_synthesis(const Dataset& train, int n_samples,
                               int k_neighbors, Rng& rng);

enum class AblationVariant { Generic, Simple, Random };

SynthesizedSet ablation_variant(AblationVariant variant, int n_samples,
                                const FittedDetector& det, const Dataset& train,
                                const SynthesisPolicy& policy);

/// Dispatch over every generator tag with shared defaults for the baselines.
SynthesizedSet synthesize(GeneratorTag tag, int n_samples,
                          const FittedDetector& det, const Dataset& train,
                          const SynthesisPolicy& policy);

void save_synthesized_csv(const SynthesizedSet& set, const std::string& path);

}  // namespace das
