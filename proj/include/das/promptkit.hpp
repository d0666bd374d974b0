#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "das/detector.hpp"
#include "das/synthesis.hpp"

namespace das {

struct PromptError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kPromptTemplateVersion = "prompt-templates/1";

/// The three-part code-generation prompt plus the priming prompt that elicits
/// the detector description. Rendering order is description, objective,
/// requirements. No dataset values ever appear in any field; this module
/// never touches a Dataset.
struct PromptBundle {
  std::string description;
  std::string objective;
  std::string requirements;
  std::string initial;
  std::string version = kPromptTemplateVersion;

  std::string render() const { return description + objective + requirements; }
};

/// Assemble the prompt for a detector kind. description_override replaces the
/// built-in summary; an empty override produces the Generic-ablation prompt
/// (detector principles removed, objective/requirements unchanged).
PromptBundle assemble_prompt(
    DetectorKind kind,
    const std::optional<std::string>& description_override = std::nullopt);

/// A parsed policy document: narrative sections plus the parameter table that
/// maps onto SynthesisPolicy.
struct PolicySpecDoc {
  DetectorKind detector_kind = DetectorKind::IForest;
  std::string policy_text;
  std::string explanation_text;
  SynthesisPolicy parameters;
};

/// Parse the flat key-value policy format: UTF-8, one `key = value` per line,
/// `#` comments. Unknown keys and out-of-range values are rejected with the
/// offending key and line number. Omitted parameters take their defaults.
std::pair<PolicySpecDoc, SynthesisPolicy> parse_policy_spec(
    const std::string& document);

std::string serialize_policy_spec(const PolicySpecDoc& doc);

/// The four shipped per-detector default policies, in document form.
std::string builtin_policy_document(DetectorKind kind);

}  // namespace das
