#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "das/harness.hpp"

using namespace das;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig config;
  config.datasets = {{"planted:fringe:2:80:0.1:7", "label"}};
  config.detectors = {DetectorKind::IForest};
  config.seeds = {1, 2};
  config.hyperparams.iforest_n_trees = 25;
  config.out_dir = "/tmp/das_harness_out";
  return config;
}

}  // namespace

TEST_CASE("planted datasets have the advertised structure") {
  for (PlantedKind kind :
       {PlantedKind::Fringe, PlantedKind::Local, PlantedKind::Clustered}) {
    CAPTURE(std::string(to_string(kind)));
    const Dataset ds = make_planted_dataset(kind, 4, 200, 0.1, 3);
    REQUIRE(ds.labels.has_value());
    CHECK(ds.cols() == 4);
    const int n_anom = ds.labels->sum();
    CHECK(n_anom == 20);
    CHECK(ds.rows() == 220);
  }
}

TEST_CASE("planted generation is deterministic per seed") {
  const Dataset a = make_planted_dataset(PlantedKind::Local, 3, 100, 0.08, 11);
  const Dataset b = make_planted_dataset(PlantedKind::Local, 3, 100, 0.08, 11);
  CHECK(a.features == b.features);
  const Dataset c = make_planted_dataset(PlantedKind::Local, 3, 100, 0.08, 12);
  CHECK(a.features != c.features);
}

TEST_CASE("planted anomalies are separable by an oracle distance score") {
  // Fringe anomalies sit 3.5+ sigma from their cluster center; distance to the
  // nearest of the two planted centers must rank them above most normals.
  const Dataset ds = make_planted_dataset(PlantedKind::Fringe, 2, 300, 0.1, 5);
  Vector center_a(2), center_b(2);
  center_a << 4.0, -1.5;
  center_b << -4.0, 1.5;
  Vector score(ds.rows());
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    const Vector x = ds.features.row(i);
    score(i) = std::min((x - center_a).norm(), (x - center_b).norm());
  }
  CHECK(auc_roc(score, *ds.labels) > 0.95);
}

TEST_CASE("resolve_dataset parses planted specs with defaults") {
  DatasetSpec spec;
  spec.source = "planted:clustered:3";
  const Dataset ds = resolve_dataset(spec);
  CHECK(ds.cols() == 3);
  CHECK(ds.rows() == 240 + static_cast<int>(std::round(240 * 0.08)));
  CHECK(spec.name() == "planted_clustered_3");

  DatasetSpec full;
  full.source = "planted:fringe:5:100:0.2:9";
  const Dataset ds2 = resolve_dataset(full);
  CHECK(ds2.cols() == 5);
  CHECK(ds2.labels->sum() == 20);
}

TEST_CASE("resolve_dataset rejects malformed specs") {
  DatasetSpec bad_kind;
  bad_kind.source = "planted:weird:3";
  CHECK_THROWS_AS(resolve_dataset(bad_kind), HarnessError);
  DatasetSpec bad_dim;
  bad_dim.source = "planted:fringe:0";
  CHECK_THROWS_AS(resolve_dataset(bad_dim), HarnessError);
  DatasetSpec missing;
  missing.source = "/nonexistent/data.csv";
  CHECK_THROWS_AS(resolve_dataset(missing), DataError);
}

TEST_CASE("config parsing round trip") {
  const std::string text =
      "# experiment\n"
      "dataset = planted:fringe:2, planted:local:4\n"
      "detector = iforest, pca\n"
      "synthesis = gaussian\n"
      "seeds = 3, 4, 5\n"
      "n_syn_frac = 0.2\n"
      "train_frac = 0.6\n"
      "anchors = train\n"
      "out = /tmp/x\n"
      "seed_percentile = 80\n";
  const ExperimentConfig config = parse_config(text);
  REQUIRE(config.datasets.size() == 2);
  CHECK(config.datasets[1].source == "planted:local:4");
  REQUIRE(config.detectors.size() == 2);
  CHECK(config.detectors[1] == DetectorKind::Pca);
  CHECK(config.synthesis == GeneratorTag::Gaussian);
  CHECK(config.seeds == std::vector<std::uint64_t>{3, 4, 5});
  CHECK(config.n_syn_fraction == 0.2);
  CHECK(config.train_fraction == 0.6);
  CHECK(config.anchor_mode == AnchorMode::Train);
  CHECK(config.out_dir == "/tmp/x");
  CHECK(config.policy.seed_percentile == 80.0);
}

TEST_CASE("config override and validation errors") {
  ExperimentConfig config = tiny_config();
  apply_config_override(config, "n_syn_frac", "0.3");
  CHECK(config.n_syn_fraction == 0.3);
  apply_config_override(config, "max_steps", "5");
  CHECK(config.policy.max_steps == 5);
  CHECK_THROWS_AS(apply_config_override(config, "nope", "1"), HarnessError);
  apply_config_override(config, "train_frac", "1.5");
  CHECK_THROWS_AS(config.validate(), HarnessError);

  ExperimentConfig bad = tiny_config();
  bad.detectors.clear();
  CHECK_THROWS_AS(bad.validate(), HarnessError);
  bad = tiny_config();
  bad.seeds.clear();
  CHECK_THROWS_AS(bad.validate(), HarnessError);
}

TEST_CASE("run_pipeline produces complete cells with both metric blocks") {
  const ExperimentConfig config = tiny_config();
  const RunReport report = run_pipeline(config);
  REQUIRE(report.cells.size() == 2);  // 1 dataset x 1 detector x 2 seeds
  for (const CellResult& cell : report.cells) {
    CAPTURE(cell.seed);
    REQUIRE(cell.ok());
    REQUIRE(cell.baseline.has_value());
    REQUIRE(cell.enhanced.has_value());
    CHECK(cell.baseline->auc_pr >= 0.0);
    CHECK(cell.baseline->auc_pr <= 1.0);
    CHECK(cell.enhanced->n_pos == cell.baseline->n_pos);
    // Synthesis accounting identity.
    CHECK(cell.synthesis.produced + (cell.synthesis.requested -
                                     cell.synthesis.produced) ==
          cell.synthesis.requested);
    CHECK(cell.synthesis.produced >= 0);
    CHECK(cell.synthesis.requested ==
          static_cast<int>(std::ceil(0.10 * std::floor(0.5 * 80))));
  }
  CHECK(report.failed_cells() == 0);
  CHECK(report.aggregates_pr.size() == 1);
  const AggregateSummary& agg = report.aggregates_pr.begin()->second;
  CHECK(agg.total == 2);
}

TEST_CASE("run_pipeline is deterministic") {
  const ExperimentConfig config = tiny_config();
  const RunReport a = run_pipeline(config);
  const RunReport b = run_pipeline(config);
  CHECK(cells_csv(a) == cells_csv(b));
  CHECK(aggregates_csv(a) == aggregates_csv(b));
}

TEST_CASE("synthesis comparison covers the four generator tags") {
  ExperimentConfig config = tiny_config();
  config.seeds = {1};
  const RunReport report = run_synthesis_comparison(config);
  REQUIRE(report.cells.size() == 4);
  std::set<GeneratorTag> tags;
  for (const CellResult& cell : report.cells) tags.insert(cell.tag);
  CHECK(tags == std::set<GeneratorTag>{GeneratorTag::Das, GeneratorTag::Gaussian,
                                       GeneratorTag::RandomUniform,
                                       GeneratorTag::Smote});
  CHECK(report.aggregates_pr.size() == 4);
}

TEST_CASE("ablation run covers das plus the three variants") {
  ExperimentConfig config = tiny_config();
  config.seeds = {1};
  const RunReport report = run_ablation(config);
  REQUIRE(report.cells.size() == 4);
  std::set<GeneratorTag> tags;
  for (const CellResult& cell : report.cells) tags.insert(cell.tag);
  CHECK(tags == std::set<GeneratorTag>{
                    GeneratorTag::Das, GeneratorTag::AblationGeneric,
                    GeneratorTag::AblationSimple, GeneratorTag::AblationRandom});
  // Simple ablation must not have scored anything during synthesis.
  for (const CellResult& cell : report.cells) {
    if (cell.tag == GeneratorTag::AblationSimple) {
      CHECK(cell.synthesis.predict_score_calls == 0);
    }
  }
}

TEST_CASE("cross-detector run records the policy kind per cell") {
  ExperimentConfig config = tiny_config();
  config.seeds = {1};
  const RunReport report = run_cross_detector(
      config, DetectorKind::IForest,
      {DetectorKind::IForest, DetectorKind::Pca});
  REQUIRE(report.cells.size() == 2);
  for (const CellResult& cell : report.cells) {
    CHECK(cell.detector == DetectorKind::IForest);
    REQUIRE(cell.policy_kind.has_value());
  }
  CHECK(report.cells[0].policy_kind != report.cells[1].policy_kind);
}

TEST_CASE("cell failures are isolated and counted") {
  ExperimentConfig config = tiny_config();
  // Second dataset loads fine but has no anomalies, so its one-class split
  // fails inside the cell.
  const std::string path = "/tmp/das_all_normal.csv";
  {
    std::ofstream out(path);
    out << "a,b,label\n";
    for (int i = 0; i < 12; ++i) out << i << ',' << 2 * i << ",0\n";
  }
  config.datasets.push_back({path, "label"});
  config.seeds = {1};
  const RunReport report = run_pipeline(config);
  REQUIRE(report.cells.size() == 2);
  int ok = 0, failed = 0;
  for (const CellResult& cell : report.cells) {
    if (cell.ok()) {
      ++ok;
      CHECK(cell.baseline.has_value());
    } else {
      ++failed;
      CHECK_FALSE(cell.error.empty());
    }
  }
  CHECK(ok == 1);
  CHECK(failed == 1);
  CHECK(report.failed_cells() == 1);
  std::remove(path.c_str());
}

TEST_CASE("emit_report writes the requested artifacts") {
  ExperimentConfig config = tiny_config();
  config.seeds = {1};
  config.export_scores = true;
  const std::filesystem::path out = "/tmp/das_emit_test";
  std::filesystem::remove_all(out);
  config.out_dir = out.string();
  const RunReport report = run_pipeline(config);
  emit_report(report, config);

  CHECK(std::filesystem::exists(out / "report.json"));
  CHECK(std::filesystem::exists(out / "cells.csv"));
  CHECK(std::filesystem::exists(out / "aggregates.csv"));
  // One score export per successful cell.
  int score_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(out)) {
    if (entry.path().filename().string().rfind("scores_", 0) == 0) {
      ++score_files;
    }
  }
  CHECK(score_files == 1);

  // report.json is valid JSON with the expected top-level keys.
  std::ifstream in(out / "report.json");
  const nlohmann::json j = nlohmann::json::parse(in);
  CHECK(j.contains("cells"));
  CHECK(j.contains("aggregates_auc_pr"));
  CHECK(j.contains("aggregates_auc_roc"));
  CHECK(j.contains("template_version"));
  CHECK(j.contains("generated_at"));
  CHECK(j["template_version"] == "prompt-templates/1");
  std::filesystem::remove_all(out);
}

TEST_CASE("cells_csv carries no timestamp and one row per cell") {
  ExperimentConfig config = tiny_config();
  const RunReport report = run_pipeline(config);
  const std::string csv = cells_csv(report);
  // Header + one line per cell, trailing newline.
  int lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 1 + static_cast<int>(report.cells.size()));
  CHECK(csv.find("generated_at") == std::string::npos);
}
