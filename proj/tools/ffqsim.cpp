// ffqsim: run, validate and list flip-flop qubit experiments.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ffq/runner.hpp"
#include "ffq/types.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

// Parse errors count as validation failures.
bool load(const std::string& path, nlohmann::json& out) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << path << ": cannot open\n";
    return false;
  }
  try {
    out = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    std::cerr << path << ": " << e.what() << "\n";
    return false;
  }
  return true;
}

bool report(const std::string& path, const nlohmann::json& spec) {
  const auto diagnostics = ffq::validate_spec(spec);
  for (const auto& d : diagnostics) std::cerr << path << ": " << d.str() << "\n";
  return diagnostics.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Donor flip-flop qubit experiment simulator"};
  app.set_version_flag("--version", ffq::software_version());
  app.require_subcommand(1);

  std::string spec_path, out_dir = "out";
  int jobs = 1;
  auto* run = app.add_subcommand("run", "Run an experiment spec and write its output bundle");
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
  run->add_option("-j,--jobs", jobs, "Worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check an experiment spec and print diagnostics");
  validate->add_option("spec", spec_path, "Experiment spec (JSON)")->required();

  auto* list = app.add_subcommand("list-kinds", "List the experiment kinds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  if (list->parsed()) {
    for (const auto& k : ffq::experiment_kinds()) std::cout << k << "\t" << ffq::experiment_kind_summary(k) << "\n";
    return kExitOk;
  }

  nlohmann::json spec;
  if (!load(spec_path, spec)) return kExitValidation;
  if (!report(spec_path, spec)) return kExitValidation;
  if (validate->parsed()) {
    std::cout << spec_path << ": ok\n";
    return kExitOk;
  }

  try {
    const auto bundle = ffq::run_experiment(spec, jobs);
    ffq::write_bundle(bundle, out_dir);
    for (const auto& f : bundle.files) std::cout << (std::filesystem::path(out_dir) / f.name).string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
