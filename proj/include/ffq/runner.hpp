#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace ffq {

// One schema problem, located by a JSON pointer into the spec document.
struct Diagnostic {
  std::string path;
  std::string message;
  std::string str() const { return path + ": " + message; }
};

const std::vector<std::string>& experiment_kinds();
// One-line description per kind, for list-kinds.
std::string experiment_kind_summary(const std::string& kind);

// Empty when the document is a valid experiment spec. Unknown keys are errors.
std::vector<Diagnostic> validate_spec(const nlohmann::json& spec);

// Valid spec with every default written out. Running the normalized spec
// gives the same outputs as running the original. Throws InvalidArgument
// listing the diagnostics when the spec is invalid.
nlohmann::json normalize_spec(const nlohmann::json& spec);

struct OutputFile {
  std::string name;
  std::string contents;
};

struct RunBundle {
  std::vector<OutputFile> files;  // data.csv first, metadata.json last
  nlohmann::json metadata;
};

// Deterministic in (spec, seed); jobs only changes the wall time.
RunBundle run_experiment(const nlohmann::json& spec, int jobs = 1);

void write_bundle(const RunBundle& bundle, const std::filesystem::path& directory);

std::string software_version();
nlohmann::json environment_snapshot();

}  // namespace ffq
