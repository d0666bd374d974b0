#include "das/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "das/promptkit.hpp"
#include "das/rng.hpp"

namespace das {

using json = nlohmann::json;

// ---- planted benchmarks -----------------------------------------------------

const char* to_string(PlantedKind kind) {
  switch (kind) {
    case PlantedKind::Fringe: return "fringe";
    case PlantedKind::Local: return "local";
    case PlantedKind::Clustered: return "clustered";
  }
  return "unknown";
}

Dataset make_planted_dataset(PlantedKind kind, int dim, int n_normal,
                             double anomaly_fraction, std::uint64_t seed) {
  if (dim < 2) throw HarnessError("planted: dim must be >= 2");
  if (n_normal < 4) throw HarnessError("planted: n_normal must be >= 4");
  if (!(anomaly_fraction > 0.0 && anomaly_fraction < 1.0)) {
    throw HarnessError("planted: anomaly_fraction must be in (0,1)");
  }
  Rng rng(seed);
  const int n_anom = std::max(
      1, static_cast<int>(std::round(anomaly_fraction * n_normal)));
  const int n = n_normal + n_anom;

  // Two Gaussian clusters, mirror images of each other: widely separated
  // along the first axis and offset in opposite directions on every other
  // axis, so each coordinate's marginal is bimodal and the cluster membership
  // is encoded in the joint sign pattern.
  Vector center_a = Vector::Zero(dim);
  center_a(0) = -4.0;
  for (int j = 1; j < dim; ++j) center_a(j) = 1.5;
  const Vector center_b = -center_a;

  Dataset ds;
  ds.features.resize(n, dim);
  IntVector labels(n);

  for (int i = 0; i < n_normal; ++i) {
    const Vector& center = rng.uniform() < 0.5 ? center_a : center_b;
    for (int j = 0; j < dim; ++j) {
      ds.features(i, j) = center(j) + rng.normal();
    }
    labels(i) = 0;
  }

  for (int i = 0; i < n_anom; ++i) {
    const Eigen::Index row = n_normal + i;
    const Vector& center = rng.uniform() < 0.5 ? center_a : center_b;
    Vector p(dim);
    switch (kind) {
      case PlantedKind::Fringe: {
        // Radially pushed to a hard shell just outside the cluster body.
        Vector dir(dim);
        double norm = 0.0;
        do {
          for (int j = 0; j < dim; ++j) dir(j) = rng.normal();
          norm = dir.norm();
        } while (norm < 1e-9);
        p = center + dir / norm * rng.uniform(2.9, 3.8);
        break;
      }
      case PlantedKind::Local: {
        // Three small pockets per cluster on the tangential ring at the
        // cluster boundary: each pocket sits a fixed distance from the
        // center along an axis direction orthogonalized against the radial
        // (from the origin) axis, so it hugs the boundary sideways instead
        // of extending outward.
        const Vector chat = center / center.norm();
        const int which = static_cast<int>(rng.uniform_index(3));
        Vector e = Vector::Zero(dim);
        e((which % (dim - 1)) + 1) = 1.0;
        if (which == 2) e(1) = -1.0;  // third pocket: opposite side on axis 1
        Vector t = e - e.dot(chat) * chat;
        t /= t.norm();
        p = center + 1.31 * std::sqrt(static_cast<double>(dim)) * t;
        for (int j = 0; j < dim; ++j) p(j) += 0.30 * rng.normal();
        break;
      }
      case PlantedKind::Clustered: {
        // One tight clump per cluster on the boundary shell, displaced
        // tangentially to the radial axis (same construction as Local but a
        // single, tighter pocket).
        const Vector chat = center / center.norm();
        Vector e1 = Vector::Zero(dim);
        e1(1) = 1.0;
        Vector t = e1 - e1.dot(chat) * chat;
        t /= t.norm();
        p = center + 1.31 * std::sqrt(static_cast<double>(dim)) * t;
        for (int j = 0; j < dim; ++j) p(j) += 0.25 * rng.normal();
        break;
      }
    }
    ds.features.row(row) = p;
    labels(row) = 1;
  }
  ds.labels = labels;
  std::vector<std::string> names;
  for (int j = 0; j < dim; ++j) names.push_back("f" + std::to_string(j));
  ds.feature_names = names;
  return ds;
}

// ---- dataset specs ----------------------------------------------------------

std::string DatasetSpec::name() const {
  if (source.rfind("planted:", 0) == 0) {
    std::string n = source;
    std::replace(n.begin(), n.end(), ':', '_');
    return n;
  }
  return std::filesystem::path(source).stem().string();
}

Dataset resolve_dataset(const DatasetSpec& spec) {
  if (spec.source.rfind("planted:", 0) == 0) {
    std::vector<std::string> parts;
    std::stringstream ss(spec.source);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() < 3) {
      throw HarnessError("planted spec needs planted:<kind>:<dim>[:n:frac:seed]");
    }
    PlantedKind kind;
    if (parts[1] == "fringe") kind = PlantedKind::Fringe;
    else if (parts[1] == "local") kind = PlantedKind::Local;
    else if (parts[1] == "clustered") kind = PlantedKind::Clustered;
    else throw HarnessError("unknown planted kind: " + parts[1]);
    const int dim = std::stoi(parts[2]);
    const int n_normal = parts.size() > 3 ? std::stoi(parts[3]) : 240;
    const double frac = parts.size() > 4 ? std::stod(parts[4]) : 0.08;
    const std::uint64_t seed =
        parts.size() > 5 ? std::stoull(parts[5]) : 12345;
    return make_planted_dataset(kind, dim, n_normal, frac, seed);
  }
  return load_csv(spec.source, spec.label_column);
}

// ---- configuration ----------------------------------------------------------

void ExperimentConfig::validate() const {
  if (datasets.empty()) throw HarnessError("config: at least one dataset required");
  if (detectors.empty()) throw HarnessError("config: at least one detector required");
  if (!(n_syn_fraction > 0.0 && n_syn_fraction <= 1.0)) {
    throw HarnessError("config: n_syn_fraction must be in (0,1]");
  }
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw HarnessError("config: train_fraction must be in (0,1]");
  }
  if (seeds.empty()) throw HarnessError("config: at least one seed required");
  policy.validate();
}

namespace {

std::string trim(const std::string& s);

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void apply_config_override(ExperimentConfig& config, const std::string& key,
                           const std::string& value) {
  if (key == "dataset") {
    for (const auto& src : split_list(value)) {
      config.datasets.push_back({src, config.datasets.empty()
                                          ? std::string("label")
                                          : config.datasets.back().label_column});
    }
  } else if (key == "label_col") {
    if (config.datasets.empty()) {
      throw HarnessError("label_col given before any dataset");
    }
    for (auto& d : config.datasets) d.label_column = value;
  } else if (key == "detector") {
    config.detectors.clear();
    for (const auto& name : split_list(value)) {
      const auto kind = detector_kind_from_string(name);
      if (!kind) throw HarnessError("unknown detector kind: " + name);
      config.detectors.push_back(*kind);
    }
  } else if (key == "synthesis") {
    const auto tag = generator_tag_from_string(value);
    if (!tag) throw HarnessError("unknown synthesis tag: " + value);
    config.synthesis = *tag;
  } else if (key == "seeds") {
    config.seeds.clear();
    for (const auto& s : split_list(value)) {
      config.seeds.push_back(std::stoull(s));
    }
  } else if (key == "n_syn_frac") {
    config.n_syn_fraction = std::stod(value);
  } else if (key == "train_frac") {
    config.train_fraction = std::stod(value);
  } else if (key == "anchors") {
    if (value == "batch") config.anchor_mode = AnchorMode::Batch;
    else if (value == "train") config.anchor_mode = AnchorMode::Train;
    else throw HarnessError("anchors must be batch or train");
  } else if (key == "out") {
    config.out_dir = value;
  } else if (key == "emit") {
    config.emit_formats = split_list(value);
  } else if (key == "export_scores") {
    config.export_scores = value == "1" || value == "true";
  } else {
    // Delegate policy parameters to the shared policy grammar.
    try {
      // apply_key is internal to promptkit; reuse via a one-line document.
      auto [doc, policy] = parse_policy_spec(
          "detector_kind = iforest\n" + key + " = " + value + "\n");
      // Merge just the overridden field by re-parsing on top of the current
      // policy: simplest correct route is a field-by-field copy.
      (void)doc;
      SynthesisPolicy& p = config.policy;
      if (key == "seed_percentile") p.seed_percentile = policy.seed_percentile;
      else if (key == "step_init") p.step_init = policy.step_init;
      else if (key == "step_growth") p.step_growth = policy.step_growth;
      else if (key == "max_steps") p.max_steps = policy.max_steps;
      else if (key == "score_band_lo") p.score_band_lo = policy.score_band_lo;
      else if (key == "score_band_hi") p.score_band_hi = policy.score_band_hi;
      else if (key == "min_seed_distance") {
        p.min_seed_distance_scale = policy.min_seed_distance_scale;
      } else if (key == "direction_strategy") {
        p.direction_strategy = policy.direction_strategy;
      } else if (key == "rng_seed") {
        p.rng_seed = policy.rng_seed;
      } else {
        throw HarnessError("unknown config key: " + key);
      }
    } catch (const PromptError& e) {
      throw HarnessError(std::string("config: ") + e.what());
    }
  }
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  config.datasets.clear();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw HarnessError("config line " + std::to_string(line_no) +
                         ": expected key = value");
    }
    apply_config_override(config, trim(stripped.substr(0, eq)),
                          trim(stripped.substr(eq + 1)));
  }
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

// ---- core cell --------------------------------------------------------------

bool AggregateKey::operator<(const AggregateKey& other) const {
  return std::tuple(static_cast<int>(detector), static_cast<int>(tag),
                    policy_kind ? static_cast<int>(*policy_kind) : -1) <
         std::tuple(static_cast<int>(other.detector), static_cast<int>(other.tag),
                    other.policy_kind ? static_cast<int>(*other.policy_kind) : -1);
}

int RunReport::failed_cells() const {
  int n = 0;
  for (const auto& c : cells) {
    if (!c.ok()) ++n;
  }
  return n;
}

namespace {

// OCSVM needs comparable feature scales for the shared RBF gamma. The other
// kinds run on raw features: IForest and ECOD are scale-insensitive by
// construction, and raw-covariance PCA keeps high-variance structure in the
// retained subspace, which is the classic reconstruction-error formulation.
bool standardize_for(DetectorKind kind) {
  return kind == DetectorKind::Ocsvm;
}

std::uint64_t mix_seed(std::uint64_t seed, DetectorKind kind, GeneratorTag tag,
                       std::uint64_t salt) {
  std::uint64_t z = seed;
  z = z * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(kind) + 1;
  z = z * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(tag) + 1;
  z = z * 0x9E3779B97F4A7C15ull + salt + 1;
  z ^= z >> 29;
  return z;
}

struct CellExtras {
  Vector test_base_scores;
  Vector test_fused_scores;
  IntVector test_labels;
  Vector syn_base_scores;
};

CellResult run_cell(const Dataset& data, const std::string& dataset_name,
                    DetectorKind kind, std::uint64_t seed, GeneratorTag tag,
                    const ExperimentConfig& config,
                    std::optional<DetectorKind> policy_kind,
                    CellExtras* extras) {
  CellResult cell;
  cell.dataset = dataset_name;
  cell.detector = kind;
  cell.seed = seed;
  cell.tag = tag;
  cell.policy_kind = policy_kind;
  try {
    const OneClassSplit split =
        split_one_class(data, config.train_fraction, seed);

    Dataset train = split.train;
    Dataset test = split.test;
    if (standardize_for(kind)) {
      const StandardizationParams params = fit_standardizer(split.train);
      train = apply_standardizer(params, split.train);
      test = apply_standardizer(params, split.test);
    }

    DetectorHyperparams hp = config.hyperparams;
    hp.seed = mix_seed(seed, kind, tag, 1);
    auto det = std::make_shared<const FittedDetector>(
        fit_detector(kind, train, hp));

    const int n_syn = static_cast<int>(std::ceil(
        config.n_syn_fraction * static_cast<double>(train.rows())));

    SynthesisPolicy policy = config.policy;
    policy.rng_seed = mix_seed(seed, kind, tag, 2);
    if (policy_kind) {
      policy.direction_strategy = direction_strategy_for(*policy_kind);
    }

    det->reset_score_call_count();
    const SynthesizedSet syn = synthesize(tag, n_syn, *det, train, policy);
    const std::uint64_t syn_calls = det->score_call_count();

    cell.synthesis.requested = syn.requested;
    cell.synthesis.produced = syn.produced();
    cell.synthesis.failed_draws = syn.failed_draws;
    cell.synthesis.predict_score_calls = syn_calls;
    if (syn.produced() > 0) {
      const Vector syn_scores = det->predict_score(syn.points);
      cell.synthesis.mean_base_score = syn_scores.mean();
      if (extras != nullptr) extras->syn_base_scores = syn_scores;
    }

    const AugmentedSet aug = augment(train, syn);
    ForestParams forest;
    forest.seed = mix_seed(seed, kind, tag, 3);
    if (aug.labels.sum() == 0) {
      throw HarnessError("synthesis produced no points; cannot enhance");
    }
    EnhancementClassifier clf = fit_enhancement(aug, forest);

    const Vector train_base = det->predict_score(train.features);
    const Vector train_clf = clf.predict_score(train.features);
    EnhancedDetector enhanced(det, std::move(clf), config.anchor_mode,
                              {train_base.minCoeff(), train_base.maxCoeff()},
                              {train_clf.minCoeff(), train_clf.maxCoeff()});

    const Vector base_scores = det->predict_score(test.features);
    const Vector fused_scores = enhanced.fused_score(test);
    cell.baseline = compute_metrics(base_scores, *test.labels);
    cell.enhanced = compute_metrics(fused_scores, *test.labels);

    if (extras != nullptr) {
      extras->test_base_scores = base_scores;
      extras->test_fused_scores = fused_scores;
      extras->test_labels = *test.labels;
    }
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      c = '_';
    }
  }
  return out;
}

void export_cell_scores(const CellResult& cell, const CellExtras& extras,
                        const std::filesystem::path& dir) {
  std::string name = "scores_" + sanitize(cell.dataset) + "_" +
                     to_string(cell.detector) + "_" + std::to_string(cell.seed) +
                     "_" + to_string(cell.tag) + ".csv";
  std::ofstream out(dir / name);
  if (!out) throw HarnessError("cannot write score export " + name);
  out << "score_base,score_fused,label,is_synth\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (Eigen::Index i = 0; i < extras.test_base_scores.size(); ++i) {
    out << num(extras.test_base_scores(i)) << ','
        << num(extras.test_fused_scores(i)) << ',' << extras.test_labels(i)
        << ",0\n";
  }
  for (Eigen::Index i = 0; i < extras.syn_base_scores.size(); ++i) {
    out << num(extras.syn_base_scores(i)) << ",,1,1\n";
  }
}

RunReport run_tags(const ExperimentConfig& config,
                   const std::vector<GeneratorTag>& tags) {
  config.validate();
  RunReport report;
  report.template_version = kPromptTemplateVersion;
  report.config_echo = "";

  std::vector<std::pair<CellResult, CellExtras>> exported;
  for (const auto& spec : config.datasets) {
    Dataset data = resolve_dataset(spec);  // fatal on failure by design
    for (DetectorKind kind : config.detectors) {
      for (std::uint64_t seed : config.seeds) {
        for (GeneratorTag tag : tags) {
          CellExtras extras;
          CellResult cell =
              run_cell(data, spec.name(), kind, seed, tag, config, std::nullopt,
                       config.export_scores ? &extras : nullptr);
          if (config.export_scores && cell.ok()) {
            exported.emplace_back(cell, std::move(extras));
          }
          report.cells.push_back(std::move(cell));
        }
      }
    }
  }

  // Aggregate AUC rows per (detector, tag) over every ok cell.
  std::map<AggregateKey, std::vector<std::pair<double, double>>> pr, roc;
  for (const auto& cell : report.cells) {
    if (!cell.ok()) continue;
    const AggregateKey key{cell.detector, cell.tag, cell.policy_kind};
    pr[key].emplace_back(cell.baseline->auc_pr, cell.enhanced->auc_pr);
    roc[key].emplace_back(cell.baseline->auc_roc, cell.enhanced->auc_roc);
  }
  for (const auto& [key, pairs] : pr) report.aggregates_pr[key] = aggregate(pairs);
  for (const auto& [key, pairs] : roc) report.aggregates_roc[key] = aggregate(pairs);

  if (config.export_scores) {
    std::filesystem::create_directories(config.out_dir);
    for (const auto& [cell, extras] : exported) {
      export_cell_scores(cell, extras, config.out_dir);
    }
  }
  return report;
}

}  // namespace

RunReport run_pipeline(const ExperimentConfig& config) {
  return run_tags(config, {config.synthesis});
}

RunReport run_synthesis_comparison(const ExperimentConfig& config) {
  return run_tags(config, {GeneratorTag::Das, GeneratorTag::Gaussian,
                           GeneratorTag::RandomUniform, GeneratorTag::Smote});
}

RunReport run_ablation(const ExperimentConfig& config) {
  return run_tags(config,
                  {GeneratorTag::Das, GeneratorTag::AblationGeneric,
                   GeneratorTag::AblationSimple, GeneratorTag::AblationRandom});
}

RunReport run_cross_detector(const ExperimentConfig& config,
                             DetectorKind base_kind,
                             const std::vector<DetectorKind>& policy_kinds) {
  config.validate();
  if (policy_kinds.empty()) {
    throw HarnessError("cross-detector: at least one policy kind required");
  }
  RunReport report;
  report.template_version = kPromptTemplateVersion;

  for (const auto& spec : config.datasets) {
    Dataset data = resolve_dataset(spec);
    for (std::uint64_t seed : config.seeds) {
      for (DetectorKind policy_kind : policy_kinds) {
        report.cells.push_back(run_cell(data, spec.name(), base_kind, seed,
                                        GeneratorTag::Das, config, policy_kind,
                                        nullptr));
      }
    }
  }

  std::map<AggregateKey, std::vector<std::pair<double, double>>> pr, roc;
  for (const auto& cell : report.cells) {
    if (!cell.ok()) continue;
    const AggregateKey key{cell.detector, cell.tag, cell.policy_kind};
    pr[key].emplace_back(cell.baseline->auc_pr, cell.enhanced->auc_pr);
    roc[key].emplace_back(cell.baseline->auc_roc, cell.enhanced->auc_roc);
  }
  for (const auto& [key, pairs] : pr) report.aggregates_pr[key] = aggregate(pairs);
  for (const auto& [key, pairs] : roc) report.aggregates_roc[key] = aggregate(pairs);
  return report;
}

// ---- emission ---------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string cells_csv(const RunReport& report) {
  std::ostringstream out;
  out << "dataset,detector,seed,tag,policy_kind,baseline_auc_pr,"
         "baseline_auc_roc,enhanced_auc_pr,enhanced_auc_roc,"
         "syn_requested,syn_produced,syn_failed_draws,syn_mean_base_score,"
         "syn_predict_score_calls,error\n";
  for (const auto& c : report.cells) {
    out << c.dataset << ',' << to_string(c.detector) << ',' << c.seed << ','
        << to_string(c.tag) << ','
        << (c.policy_kind ? to_string(*c.policy_kind) : "") << ',';
    if (c.ok()) {
      out << fmt(c.baseline->auc_pr) << ',' << fmt(c.baseline->auc_roc) << ','
          << fmt(c.enhanced->auc_pr) << ',' << fmt(c.enhanced->auc_roc);
    } else {
      out << ",,,";
    }
    out << ',' << c.synthesis.requested << ',' << c.synthesis.produced << ','
        << c.synthesis.failed_draws << ',' << fmt(c.synthesis.mean_base_score)
        << ',' << c.synthesis.predict_score_calls << ','
        << sanitize(c.error) << '\n';
  }
  return out.str();
}

std::string aggregates_csv(const RunReport& report) {
  std::ostringstream out;
  out << "metric,detector,tag,policy_kind,baseline_mean,improv_abs,improv_pct,"
         "win_count,total,p_value\n";
  auto rows = [&](const char* metric,
                  const std::map<AggregateKey, AggregateSummary>& aggs) {
    for (const auto& [key, s] : aggs) {
      out << metric << ',' << to_string(key.detector) << ','
          << to_string(key.tag) << ','
          << (key.policy_kind ? to_string(*key.policy_kind) : "") << ','
          << fmt(s.baseline_mean) << ',' << fmt(s.improv_abs) << ','
          << fmt(s.improv_pct) << ',' << s.win_count << ',' << s.total << ','
          << fmt(s.p_value) << '\n';
    }
  };
  rows("auc_pr", report.aggregates_pr);
  rows("auc_roc", report.aggregates_roc);
  return out.str();
}

std::string report_json(const RunReport& report) {
  json j;
  j["template_version"] = report.template_version;
  j["config_echo"] = report.config_echo;
  j["generated_at"] = static_cast<long>(std::time(nullptr));

  json cells = json::array();
  for (const auto& c : report.cells) {
    json cj;
    cj["dataset"] = c.dataset;
    cj["detector"] = to_string(c.detector);
    cj["seed"] = c.seed;
    cj["tag"] = to_string(c.tag);
    if (c.policy_kind) cj["policy_kind"] = to_string(*c.policy_kind);
    if (c.ok()) {
      cj["baseline"] = {{"auc_pr", c.baseline->auc_pr},
                        {"auc_roc", c.baseline->auc_roc},
                        {"n_pos", c.baseline->n_pos},
                        {"n_neg", c.baseline->n_neg}};
      cj["enhanced"] = {{"auc_pr", c.enhanced->auc_pr},
                        {"auc_roc", c.enhanced->auc_roc}};
    } else {
      cj["error"] = c.error;
    }
    cj["synthesis"] = {{"requested", c.synthesis.requested},
                       {"produced", c.synthesis.produced},
                       {"failed_draws", c.synthesis.failed_draws},
                       {"mean_base_score", c.synthesis.mean_base_score},
                       {"predict_score_calls", c.synthesis.predict_score_calls}};
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);

  auto aggs_json = [](const std::map<AggregateKey, AggregateSummary>& aggs) {
    json out = json::array();
    for (const auto& [key, s] : aggs) {
      json row;
      row["detector"] = to_string(key.detector);
      row["tag"] = to_string(key.tag);
      if (key.policy_kind) row["policy_kind"] = to_string(*key.policy_kind);
      row["baseline_mean"] = s.baseline_mean;
      row["improv_abs"] = s.improv_abs;
      row["improv_pct"] = s.improv_pct;
      row["win_count"] = s.win_count;
      row["total"] = s.total;
      row["p_value"] = s.p_value;
      out.push_back(std::move(row));
    }
    return out;
  };
  j["aggregates_auc_pr"] = aggs_json(report.aggregates_pr);
  j["aggregates_auc_roc"] = aggs_json(report.aggregates_roc);
  return j.dump(2);
}

void emit_report(const RunReport& report, const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path dir(config.out_dir);
  for (const auto& format : config.emit_formats) {
    if (format == "json") {
      std::ofstream out(dir / "report.json");
      if (!out) throw HarnessError("cannot write report.json");
      out << report_json(report);
    } else if (format == "csv") {
      std::ofstream cells(dir / "cells.csv");
      if (!cells) throw HarnessError("cannot write cells.csv");
      cells << cells_csv(report);
      std::ofstream aggs(dir / "aggregates.csv");
      if (!aggs) throw HarnessError("cannot write aggregates.csv");
      aggs << aggregates_csv(report);
    } else {
      throw HarnessError("unknown emit format: " + format);
    }
  }
}

}  // namespace das
