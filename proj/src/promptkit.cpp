#include "das/promptkit.hpp"

#include <cstdio>
#include <sstream>

namespace das {

namespace {

std::string detector_summary(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::IForest:
      return
          "Isolation Forest builds an ensemble of random binary trees. Each tree\n"
          "repeatedly picks a random feature and a random cut point between the\n"
          "feature's minimum and maximum within the node, until points are isolated\n"
          "or a height limit is reached. The anomaly score is 2^(-E[h(x)]/c(n)),\n"
          "where E[h(x)] is the average path length to isolate x and c(n) is the\n"
          "expected path length of an unsuccessful BST search. Points isolated with\n"
          "few axis-aligned splits (short paths) score as anomalies; points deep\n"
          "inside the data cloud need many splits and score as normal.\n";
    case DetectorKind::Pca:
      return
          "PCA anomaly detection centers the training data, computes the covariance\n"
          "eigendecomposition, and retains the leading principal components covering\n"
          "a target fraction of the variance. The anomaly score of a point is its\n"
          "squared reconstruction error from the retained subspace: points that lie\n"
          "close to the learned low-dimensional manifold score as normal, points\n"
          "far from it score as anomalous.\n";
    case DetectorKind::Ecod:
      return
          "ECOD estimates a per-feature empirical cumulative distribution from the\n"
          "training data. For each coordinate of a point it measures how extreme the\n"
          "value is in either tail of that feature's marginal distribution, takes\n"
          "the negative log tail probability, and sums across features. Points whose\n"
          "coordinates are marginally typical score as normal regardless of how the\n"
          "coordinates combine jointly.\n";
    case DetectorKind::Ocsvm:
      return
          "One-class SVM with an RBF kernel solves the nu-parameterized dual to\n"
          "find a small region enclosing the training data in feature space. The\n"
          "anomaly score is the negated decision value rho - sum_i alpha_i\n"
          "k(x_i, x): points inside the learned boundary score low, points outside\n"
          "score high. The boundary hugs the support of the normal data.\n";
  }
  return "";
}

}  // namespace

PromptBundle assemble_prompt(
    DetectorKind kind, const std::optional<std::string>& description_override) {
  PromptBundle bundle;
  const std::string name = to_string(kind);

  bundle.initial =
      "Provide a concise technical summary and pseudo-code of the " + name +
      " anomaly detection algorithm: how it is trained on normal samples, how\n"
      "it assigns an anomaly score to a new point, and which geometric or\n"
      "statistical assumption it relies on to separate anomalies from normal\n"
      "data.\n";

  if (description_override) {
    bundle.description = *description_override;
  } else {
    bundle.description =
        "=== Detector description (" + name + ") ===\n" + detector_summary(kind);
  }

  bundle.objective =
      "=== Objective ===\n"
      "Write a Python function that synthesizes hard-to-detect anomalies for the\n"
      "detector described above. Hard anomalies are factually anomalous points\n"
      "that the detector nevertheless scores similarly to normal training data.\n"
      "After the Python function is completed, users can provide the function\n"
      "with: a trained " + name + " model (model) that exposes predict_score(),\n"
      "the training samples (X_train), and the number of anomalies to generate\n"
      "(n_samples). These interfaces are symbolic placeholders: write a\n"
      "general-purpose program without access to any real data values.\n";

  bundle.requirements =
      "=== Requirements ===\n"
      "1. Signature: generate_hard_anomalies(n_samples: int, model, X_train)\n"
      "   returning an (n_samples, d) array.\n"
      "2. Identify 'borderline' normal training samples that lie near the\n"
      "   decision boundary (top percentile of model.predict_score on X_train)\n"
      "   and transform them into anomalies, unless a superior strategy exists\n"
      "   for this detector.\n"
      "3. Output three structured components: the synthesis policy as prose,\n"
      "   the executable program, and comments explaining each key step.\n"
      "4. Use only numpy and the provided interfaces; keep the code\n"
      "   deterministic given a seed.\n";

  return bundle;
}

// ---- policy documents -------------------------------------------------------

namespace {

void apply_key(SynthesisPolicy& p, PolicySpecDoc& doc, const std::string& key,
               const std::string& value, std::size_t line_no) {
  auto fail_range = [&](const std::string& allowed) {
    throw PromptError("value \"" + value + "\" out of range for key \"" + key +
                      "\" (allowed: " + allowed + ") at line " +
                      std::to_string(line_no));
  };
  auto as_double = [&]() {
    try {
      std::size_t pos = 0;
      const double v = std::stod(value, &pos);
      if (pos != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw PromptError("malformed number \"" + value + "\" for key \"" + key +
                        "\" at line " + std::to_string(line_no));
    }
  };

  if (key == "detector_kind") {
    const auto kind = detector_kind_from_string(value);
    if (!kind) fail_range("iforest|pca|ecod|ocsvm");
    doc.detector_kind = *kind;
  } else if (key == "seed_percentile") {
    const double v = as_double();
    if (!(v > 0.0 && v < 100.0)) fail_range("(0,100)");
    p.seed_percentile = v;
  } else if (key == "step_init") {
    const double v = as_double();
    if (!(v > 0.0)) fail_range("> 0");
    p.step_init = v;
  } else if (key == "step_growth") {
    const double v = as_double();
    if (!(v > 1.0)) fail_range("> 1");
    p.step_growth = v;
  } else if (key == "max_steps") {
    const double v = as_double();
    if (v < 1.0) fail_range(">= 1");
    p.max_steps = static_cast<int>(v);
  } else if (key == "score_band_lo") {
    const double v = as_double();
    if (v < 0.0 || v > 1.0) fail_range("[0,1]");
    p.score_band_lo = v;
  } else if (key == "score_band_hi") {
    const double v = as_double();
    if (v < 0.0 || v > 1.0) fail_range("[0,1]");
    p.score_band_hi = v;
  } else if (key == "min_seed_distance") {
    const double v = as_double();
    if (v < 0.0) fail_range(">= 0");
    p.min_seed_distance_scale = v;
  } else if (key == "direction_strategy") {
    const auto s = direction_strategy_from_string(value);
    if (!s) {
      fail_range(
          "auto|centroid_outward|principal_subspace|coordinate_swap|"
          "borderline_peer|random_unit");
    }
    p.direction_strategy = *s;
  } else if (key == "rng_seed") {
    p.rng_seed = static_cast<std::uint64_t>(as_double());
  } else if (key == "policy_text") {
    doc.policy_text = value;
  } else if (key == "explanation_text") {
    doc.explanation_text = value;
  } else {
    throw PromptError("unknown key \"" + key + "\" at line " +
                      std::to_string(line_no));
  }
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

std::pair<PolicySpecDoc, SynthesisPolicy> parse_policy_spec(
    const std::string& document) {
  PolicySpecDoc doc;
  SynthesisPolicy policy;
  bool saw_kind = false;

  std::istringstream in(document);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw PromptError("malformed line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw PromptError("empty key at line " + std::to_string(line_no));
    }
    apply_key(policy, doc, key, value, line_no);
    if (key == "detector_kind") saw_kind = true;
  }
  if (!saw_kind) throw PromptError("missing required key detector_kind");

  try {
    policy.validate();
  } catch (const SynthesisError& e) {
    throw PromptError(e.what());
  }
  doc.parameters = policy;
  return {doc, policy};
}

std::string serialize_policy_spec(const PolicySpecDoc& doc) {
  std::ostringstream out;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const SynthesisPolicy& p = doc.parameters;
  out << "detector_kind = " << to_string(doc.detector_kind) << '\n';
  if (!doc.policy_text.empty()) out << "policy_text = " << doc.policy_text << '\n';
  if (!doc.explanation_text.empty()) {
    out << "explanation_text = " << doc.explanation_text << '\n';
  }
  out << "seed_percentile = " << num(p.seed_percentile) << '\n'
      << "step_init = " << num(p.step_init) << '\n'
      << "step_growth = " << num(p.step_growth) << '\n'
      << "max_steps = " << p.max_steps << '\n'
      << "score_band_lo = " << num(p.score_band_lo) << '\n'
      << "score_band_hi = " << num(p.score_band_hi) << '\n'
      << "min_seed_distance = " << num(p.min_seed_distance_scale) << '\n'
      << "direction_strategy = " << to_string(p.direction_strategy) << '\n'
      << "rng_seed = " << p.rng_seed << '\n';
  return out.str();
}

std::string builtin_policy_document(DetectorKind kind) {
  std::ostringstream out;
  out << "# Built-in synthesis policy for " << to_string(kind) << "\n"
      << "detector_kind = " << to_string(kind) << "\n";
  switch (kind) {
    case DetectorKind::IForest:
      out << "policy_text = Extrapolate fringe seeds outward from the data "
             "centroid so axis-aligned isolation depth stays high\n"
          << "direction_strategy = centroid_outward\n";
      break;
    case DetectorKind::Pca:
      out << "policy_text = Displace seeds inside the retained principal "
             "subspace so reconstruction error stays near zero\n"
          << "direction_strategy = principal_subspace\n";
      break;
    case DetectorKind::Ecod:
      out << "policy_text = Recombine marginally typical coordinates from "
             "different rows so every marginal stays plausible while the "
             "joint point is inconsistent\n"
          << "direction_strategy = coordinate_swap\n";
      break;
    case DetectorKind::Ocsvm:
      out << "policy_text = Walk seeds tangentially toward nearby borderline "
             "peers so the kernel decision value stays near rho\n"
          << "direction_strategy = borderline_peer\n";
      break;
  }
  return out.str();
}

}  // namespace das
