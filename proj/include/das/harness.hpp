#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "das/data.hpp"
#include "das/detector.hpp"
#include "das/enhance.hpp"
#include "das/stats.hpp"
#include "das/synthesis.hpp"

namespace das {

struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- planted synthetic benchmarks ------------------------------------------

enum class PlantedKind { Fringe, Local, Clustered };

const char* to_string(PlantedKind kind);

/// Two-Gaussian-cluster benchmark with a known anomaly mechanism. Labels are
/// always present.
Dataset make_planted_dataset(PlantedKind kind, int dim, int n_normal,
                             double anomaly_fraction, std::uint64_t seed);

// ---- configuration ----------------------------------------------------------

/// A dataset source: a CSV path, or a planted spec of the form
/// "planted:<fringe|local|clustered>:<dim>[:<n_normal>[:<anomaly_fraction>[:<seed>]]]".
struct DatasetSpec {
  std::string source;
  std::string label_column = "label";

  std::string name() const;
};

Dataset resolve_dataset(const DatasetSpec& spec);

struct ExperimentConfig {
  std::vector<DatasetSpec> datasets;
  std::vector<DetectorKind> detectors;
  GeneratorTag synthesis = GeneratorTag::Das;
  SynthesisPolicy policy;
  double n_syn_fraction = 0.10;
  double train_fraction = 0.5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  AnchorMode anchor_mode = AnchorMode::Batch;
  DetectorHyperparams hyperparams;
  std::string out_dir = "out";
  std::vector<std::string> emit_formats = {"json", "csv"};
  bool export_scores = false;

  void validate() const;
};

/// Parse the flat key-value config grammar (same dialect as policy docs).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Apply one `key = value` override on top of an existing config.
void apply_config_override(ExperimentConfig& config, const std::string& key,
                           const std::string& value);

// ---- reports ----------------------------------------------------------------

struct SynthesisDiagnostics {
  int requested = 0;
  int produced = 0;
  int failed_draws = 0;
  double mean_base_score = 0.0;  // base-detector score of synthesized points
  std::uint64_t predict_score_calls = 0;
};

struct CellResult {
  std::string dataset;
  DetectorKind detector = DetectorKind::IForest;
  std::uint64_t seed = 0;
  GeneratorTag tag = GeneratorTag::Das;
  std::optional<DetectorKind> policy_kind;  // cross-detector runs only
  std::optional<MetricResult> baseline;
  std::optional<MetricResult> enhanced;
  SynthesisDiagnostics synthesis;
  std::string error;  // nonempty if the cell failed

  bool ok() const { return error.empty(); }
};

struct AggregateKey {
  DetectorKind detector;
  GeneratorTag tag;
  std::optional<DetectorKind> policy_kind;

  bool operator<(const AggregateKey& other) const;
};

struct RunReport {
  std::string config_echo;
  std::string template_version;
  std::vector<CellResult> cells;
  std::map<AggregateKey, AggregateSummary> aggregates_pr;
  std::map<AggregateKey, AggregateSummary> aggregates_roc;

  int failed_cells() const;
};

// ---- runners ----------------------------------------------------------------

RunReport run_pipeline(const ExperimentConfig& config);

/// Iterate synthesis tags {das, gaussian, random_uniform, smote}.
RunReport run_synthesis_comparison(const ExperimentConfig& config);

/// Iterate {das, ablation_generic, ablation_simple, ablation_random}.
RunReport run_ablation(const ExperimentConfig& config);

/// Fit base_kind once per (dataset, seed), synthesize with each policy kind's
/// direction strategy, report per-cell AUC-PR deltas.
RunReport run_cross_detector(const ExperimentConfig& config,
                             DetectorKind base_kind,
                             const std::vector<DetectorKind>& policy_kinds);

/// Write report.json / cells.csv / aggregates.csv (per requested formats)
/// into config.out_dir; per-cell score files when export_scores is set.
void emit_report(const RunReport& report, const ExperimentConfig& config);

/// The cells.csv text, exposed so determinism can be checked byte-wise.
std::string cells_csv(const RunReport& report);
std::string aggregates_csv(const RunReport& report);
std::string report_json(const RunReport& report);

}  // namespace das
