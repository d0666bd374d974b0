// Command-line harness: runs the enhancement pipeline, synthesis-method
// comparisons, ablations and cross-detector experiments, and emits reports.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "das/harness.hpp"
#include "das/promptkit.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> datasets;
  std::string label_col;
  std::string detectors;
  std::string synthesis;
  std::string seeds;
  std::optional<double> n_syn_frac;
  std::optional<double> train_frac;
  std::string anchors;
  std::string out_dir;
  std::string emit;
  bool export_scores = false;
  std::string policy_path;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--config", opt.config_path, "key = value config file");
  cmd->add_option("--dataset", opt.datasets,
                  "CSV path or planted:<kind>:<dim>[:n:frac:seed]; repeatable");
  cmd->add_option("--label-col", opt.label_col, "label column name");
  cmd->add_option("--detector", opt.detectors,
                  "comma list of iforest,pca,ecod,ocsvm");
  cmd->add_option("--synthesis", opt.synthesis, "generator tag");
  cmd->add_option("--seeds", opt.seeds, "comma list of split seeds");
  cmd->add_option("--n-syn-frac", opt.n_syn_frac,
                  "synthesized fraction of train size");
  cmd->add_option("--train-frac", opt.train_frac, "normal train fraction");
  cmd->add_option("--anchors", opt.anchors, "batch or train");
  cmd->add_option("--out", opt.out_dir, "output directory");
  cmd->add_option("--emit", opt.emit, "comma subset of json,csv");
  cmd->add_flag("--export-scores", opt.export_scores,
                "write per-cell score vectors");
  cmd->add_option("--policy", opt.policy_path, "synthesis policy document");
}

das::ExperimentConfig build_config(const CommonOptions& opt) {
  das::ExperimentConfig config;
  config.datasets.clear();
  if (!opt.config_path.empty()) config = das::load_config(opt.config_path);
  for (const auto& d : opt.datasets) {
    das::apply_config_override(config, "dataset", d);
  }
  if (!opt.label_col.empty()) {
    das::apply_config_override(config, "label_col", opt.label_col);
  }
  if (!opt.detectors.empty()) {
    das::apply_config_override(config, "detector", opt.detectors);
  }
  if (!opt.synthesis.empty()) {
    das::apply_config_override(config, "synthesis", opt.synthesis);
  }
  if (!opt.seeds.empty()) das::apply_config_override(config, "seeds", opt.seeds);
  if (opt.n_syn_frac) config.n_syn_fraction = *opt.n_syn_frac;
  if (opt.train_frac) config.train_fraction = *opt.train_frac;
  if (!opt.anchors.empty()) {
    das::apply_config_override(config, "anchors", opt.anchors);
  }
  if (!opt.out_dir.empty()) config.out_dir = opt.out_dir;
  if (!opt.emit.empty()) das::apply_config_override(config, "emit", opt.emit);
  if (opt.export_scores) config.export_scores = true;

  if (config.detectors.empty()) {
    config.detectors = {das::DetectorKind::IForest, das::DetectorKind::Pca,
                        das::DetectorKind::Ecod, das::DetectorKind::Ocsvm};
  }
  if (!opt.policy_path.empty()) {
    std::ifstream in(opt.policy_path);
    if (!in) throw das::HarnessError("cannot open policy: " + opt.policy_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    auto [doc, policy] = das::parse_policy_spec(text);
    const auto seed = config.policy.rng_seed;
    config.policy = policy;
    config.policy.rng_seed = seed;
  }
  return config;
}

int finish(const das::RunReport& report, const das::ExperimentConfig& config) {
  das::emit_report(report, config);
  for (const auto& [key, summary] : report.aggregates_pr) {
    std::cout << das::to_string(key.detector) << " / " << das::to_string(key.tag);
    if (key.policy_kind) {
      std::cout << " / policy=" << das::to_string(*key.policy_kind);
    }
    std::cout << ": baseline AUC-PR " << summary.baseline_mean << ", delta "
              << summary.improv_abs << ", wins " << summary.win_count << "/"
              << summary.total << ", p " << summary.p_value << "\n";
  }
  if (report.failed_cells() > 0) {
    std::cerr << report.failed_cells() << " cell(s) failed; see report\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Detector-aware hard-anomaly synthesis harness"};
  app.require_subcommand(1);

  CommonOptions opt;
  std::string base_kind = "ocsvm";
  std::string policy_kinds = "iforest,pca,ocsvm";
  std::string prompt_kind = "iforest";
  std::string prompt_out;
  bool prompt_generic = false;
  std::string report_in;

  CLI::App* run = app.add_subcommand("run", "end-to-end enhancement pipeline");
  add_common(run, opt);
  CLI::App* compare =
      app.add_subcommand("compare-synthesis", "compare generator tags");
  add_common(compare, opt);
  CLI::App* cross =
      app.add_subcommand("cross-detector", "matched vs mismatched policies");
  add_common(cross, opt);
  cross->add_option("--base", base_kind, "base detector kind");
  cross->add_option("--policies", policy_kinds, "comma list of policy kinds");
  CLI::App* ablation = app.add_subcommand("ablation", "policy ablation variants");
  add_common(ablation, opt);

  CLI::App* prompt = app.add_subcommand("prompt", "emit a code-generation prompt");
  prompt->add_option("--kind", prompt_kind, "detector kind");
  prompt->add_option("--out", prompt_out, "write prompt to file");
  prompt->add_flag("--generic", prompt_generic,
                   "drop the detector description (ablation prompt)");

  CLI::App* report_cmd =
      app.add_subcommand("report", "re-emit CSVs from a report.json");
  report_cmd->add_option("--in", report_in, "existing report.json")->required();
  report_cmd->add_option("--out", opt.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (prompt->parsed()) {
      const auto kind = das::detector_kind_from_string(prompt_kind);
      if (!kind) {
        std::cerr << "unknown detector kind: " << prompt_kind << "\n";
        return 1;
      }
      const das::PromptBundle bundle =
          prompt_generic
              ? das::assemble_prompt(*kind, std::string())
              : das::assemble_prompt(*kind);
      if (prompt_out.empty()) {
        std::cout << bundle.render();
      } else {
        std::ofstream out(prompt_out);
        out << bundle.render();
      }
      return 0;
    }
    if (report_cmd->parsed()) {
      // Rebuild the flat CSVs from a stored JSON report.
      std::ifstream in(report_in);
      if (!in) {
        std::cerr << "cannot open " << report_in << "\n";
        return 1;
      }
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      // Round-trip through the JSON layer only; cells.csv carries every field
      // needed for re-aggregation.
      auto j = nlohmann::json::parse(text);
      das::RunReport report;
      report.template_version = j.value("template_version", "");
      for (const auto& cj : j.at("cells")) {
        das::CellResult c;
        c.dataset = cj.at("dataset").get<std::string>();
        c.detector = *das::detector_kind_from_string(
            cj.at("detector").get<std::string>());
        c.seed = cj.at("seed").get<std::uint64_t>();
        c.tag = *das::generator_tag_from_string(cj.at("tag").get<std::string>());
        if (cj.contains("policy_kind")) {
          c.policy_kind = das::detector_kind_from_string(
              cj.at("policy_kind").get<std::string>());
        }
        if (cj.contains("error")) {
          c.error = cj.at("error").get<std::string>();
        } else {
          das::MetricResult base, enh;
          base.auc_pr = cj.at("baseline").at("auc_pr").get<double>();
          base.auc_roc = cj.at("baseline").at("auc_roc").get<double>();
          base.n_pos = cj.at("baseline").at("n_pos").get<int>();
          base.n_neg = cj.at("baseline").at("n_neg").get<int>();
          enh.auc_pr = cj.at("enhanced").at("auc_pr").get<double>();
          enh.auc_roc = cj.at("enhanced").at("auc_roc").get<double>();
          c.baseline = base;
          c.enhanced = enh;
        }
        const auto& sj = cj.at("synthesis");
        c.synthesis.requested = sj.at("requested").get<int>();
        c.synthesis.produced = sj.at("produced").get<int>();
        c.synthesis.failed_draws = sj.at("failed_draws").get<int>();
        c.synthesis.mean_base_score = sj.at("mean_base_score").get<double>();
        c.synthesis.predict_score_calls =
            sj.at("predict_score_calls").get<std::uint64_t>();
        report.cells.push_back(std::move(c));
      }
      std::map<das::AggregateKey, std::vector<std::pair<double, double>>> pr, roc;
      for (const auto& cell : report.cells) {
        if (!cell.ok()) continue;
        const das::AggregateKey key{cell.detector, cell.tag, cell.policy_kind};
        pr[key].emplace_back(cell.baseline->auc_pr, cell.enhanced->auc_pr);
        roc[key].emplace_back(cell.baseline->auc_roc, cell.enhanced->auc_roc);
      }
      for (const auto& [key, pairs] : pr) {
        report.aggregates_pr[key] = das::aggregate(pairs);
      }
      for (const auto& [key, pairs] : roc) {
        report.aggregates_roc[key] = das::aggregate(pairs);
      }
      das::ExperimentConfig config;
      config.out_dir = opt.out_dir.empty() ? "." : opt.out_dir;
      config.emit_formats = {"csv"};
      das::emit_report(report, config);
      return 0;
    }

    das::ExperimentConfig config = build_config(opt);
    config.validate();
    if (run->parsed()) return finish(das::run_pipeline(config), config);
    if (compare->parsed()) {
      return finish(das::run_synthesis_comparison(config), config);
    }
    if (ablation->parsed()) return finish(das::run_ablation(config), config);
    if (cross->parsed()) {
      const auto base = das::detector_kind_from_string(base_kind);
      if (!base) {
        std::cerr << "unknown base detector: " << base_kind << "\n";
        return 1;
      }
      std::vector<das::DetectorKind> kinds;
      std::stringstream ss(policy_kinds);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto k = das::detector_kind_from_string(item);
        if (!k) {
          std::cerr << "unknown policy kind: " << item << "\n";
          return 1;
        }
        kinds.push_back(*k);
      }
      return finish(das::run_cross_detector(config, *base, kinds), config);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
