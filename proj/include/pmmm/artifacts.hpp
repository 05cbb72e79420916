#pragma once

// JSON artifacts written by the command-line driver. Every document carries
// `format_version` and the hash of the configuration that produced it.
// Readers are strict: a schema violation raises SchemaError whose path is a
// JSON pointer into the offending document.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pmmm/derive.hpp"
#include "pmmm/search.hpp"
#include "pmmm/targetnet.hpp"

namespace pmmm {

inline constexpr int kArtifactVersion = 1;

// alpha.json: searched logits of one run plus its summary.
struct AlphaArtifact {
  AlphaSnapshot alpha;
  std::uint64_t seed = 0;
  SearchMode mode = SearchMode::Partial;
  Task task = Task::Classification;
  double val_metric = 0.0;
  double val_loss = 0.0;
  std::string config_hash;

  friend bool operator==(const AlphaArtifact&, const AlphaArtifact&) = default;
};

AlphaArtifact alpha_artifact(const SearchOutcome& outcome, Task task, const std::string& config_hash);
std::string alpha_to_json(const AlphaArtifact& a);
AlphaArtifact alpha_from_json(const std::string& text);

// architecture.json. Relation names are resolved against `vocabulary` when
// given, otherwise against the document's own "relations" list.
std::string architecture_to_json(const MetaMultigraph& arch, const std::string& config_hash);
MetaMultigraph architecture_from_json(const std::string& text,
                                      std::optional<std::span<const std::string>> vocabulary = std::nullopt);
std::string architecture_config_hash(const std::string& text);

// eval_report.json.
std::string eval_report_to_json(const EvalReport& report, const std::string& config_hash);
EvalReport eval_report_from_json(const std::string& text);

std::string read_text(const std::filesystem::path& file);
// Writes through a temporary file and renames it into place.
void write_text(const std::filesystem::path& file, const std::string& text);

}  // namespace pmmm
