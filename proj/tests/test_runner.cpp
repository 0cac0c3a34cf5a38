#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ffq/runner.hpp"
#include "ffq/types.hpp"

using namespace ffq;
using nlohmann::json;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(FFQ_SOURCE_DIR) / "configs";

json load(const std::filesystem::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string file(const RunBundle& b, const std::string& name) {
  for (const auto& f : b.files) {
    if (f.name == name) return f.contents;
  }
  ADD_FAILURE() << "missing output " << name;
  return {};
}

std::vector<std::vector<double>> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

json small_t1e() {
  return {{"kind", "t1e"},
          {"seed", 42},
          {"environment", {{"t1e_s", 6.45}, {"t1ff_s", 173}}},
          {"readout", {{"symmetric_fidelity", 0.99}}},
          {"sweep", {{"wait_s", {{"start", 0}, {"stop", 20}, {"points", 5}}}}},
          {"shots", 200}};
}

bool has_path(const std::vector<Diagnostic>& d, const std::string& path) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.path == path; });
}

}  // namespace

TEST(Validate, ShippedConfigsAreValid) {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    const auto d = validate_spec(load(e.path()));
    EXPECT_TRUE(d.empty()) << e.path() << ": " << (d.empty() ? "" : d.front().str());
    ++n;
  }
  EXPECT_GE(n, 12);
}

TEST(Validate, EveryKindHasAShippedConfig) {
  for (const auto& k : experiment_kinds()) {
    EXPECT_TRUE(std::filesystem::exists(kConfigs / (k + ".json"))) << k;
    EXPECT_FALSE(experiment_kind_summary(k).empty());
  }
}

TEST(Validate, MissingSeedGivesOneErrorNamingTheField) {
  json s = small_t1e();
  s.erase("seed");
  const auto d = validate_spec(s);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].path, "/seed");
  EXPECT_NE(d[0].message.find("required"), std::string::npos);
}

TEST(Validate, UnknownKindListsAllowedKinds) {
  json s = small_t1e();
  s["kind"] = "tomography";
  const auto d = validate_spec(s);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].path, "/kind");
  for (const auto& k : experiment_kinds()) EXPECT_NE(d[0].message.find(k), std::string::npos) << k;
}

TEST(Validate, UnknownKeysAreRejectedAtEveryLevel) {
  json s = small_t1e();
  s["colour"] = "blue";
  s["environment"]["t2e_s"] = 1.0;
  s["sweep"]["wait_ms"] = {1, 2};
  const auto d = validate_spec(s);
  EXPECT_TRUE(has_path(d, "/colour"));
  EXPECT_TRUE(has_path(d, "/environment/t2e_s"));
  EXPECT_TRUE(has_path(d, "/sweep/wait_ms"));
}

TEST(Validate, TypesAndRanges) {
  json s = small_t1e();
  s["seed"] = -3;
  s["environment"]["t1e_s"] = "forever";
  s["readout"]["reload_error"] = 1.5;
  s["shots"] = 0;
  const auto d = validate_spec(s);
  EXPECT_TRUE(has_path(d, "/seed"));
  EXPECT_TRUE(has_path(d, "/environment/t1e_s"));
  EXPECT_TRUE(has_path(d, "/readout/reload_error"));
  EXPECT_TRUE(has_path(d, "/shots"));
}

TEST(Validate, SweepRules) {
  json s = small_t1e();
  s.erase("sweep");
  EXPECT_TRUE(has_path(validate_spec(s), "/sweep"));

  s["sweep"] = {{"wait_s", json::array()}};
  EXPECT_TRUE(has_path(validate_spec(s), "/sweep/wait_s"));

  s["sweep"] = {{"wait_s", {-1, 2}}};
  EXPECT_TRUE(has_path(validate_spec(s), "/sweep/wait_s"));

  json e = load(kConfigs / "endor-fidelity.json");
  e["sweep"] = {{"wait_s", {1}}};
  EXPECT_TRUE(has_path(validate_spec(e), "/sweep"));

  json c = load(kConfigs / "chevron.json");
  c["shots"] = 10;
  EXPECT_TRUE(has_path(validate_spec(c), "/shots"));

  json p = load(kConfigs / "t1ff-pump.json");
  p["sweep"]["wait_s"] = {0, 100};
  EXPECT_TRUE(has_path(validate_spec(p), "/sweep/wait_s"));
}

TEST(Validate, TriangulateNeedsExactlyOneDataSource) {
  json t = load(kConfigs / "triangulate.json");
  t["parameters"]["measurements"] = {{{"swept", "LS"}, {"reference", "FD"}, {"slope", -0.2}},
                                     {{"swept", "RS"}, {"reference", "FD"}, {"slope", -2.0}}};
  EXPECT_TRUE(has_path(validate_spec(t), "/parameters"));
  t["parameters"]["geometry"] = {{"extent_nm", {10, 10, 10}}};
  EXPECT_TRUE(has_path(validate_spec(t), "/parameters/geometry"));
}

TEST(Validate, NonObjectDocument) {
  EXPECT_EQ(validate_spec(json::array()).size(), 1u);
}

TEST(Normalize, FillsDefaultsAndIsIdempotent) {
  const json n = normalize_spec(small_t1e());
  EXPECT_EQ(n["readout"]["n_shots"], 20);
  EXPECT_EQ(n["environment"]["t1n_s"], "inf");
  EXPECT_EQ(n["evolution"]["integrator"], "piecewise-exponential");
  EXPECT_EQ(normalize_spec(n), n);
  EXPECT_TRUE(validate_spec(n).empty());
}

TEST(Normalize, InvalidSpecThrowsWithDiagnostics) {
  json s = small_t1e();
  s.erase("seed");
  try {
    normalize_spec(s);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("/seed"), std::string::npos);
  }
}

TEST(Run, SameSpecAndSeedGiveByteIdenticalOutputs) {
  const RunBundle a = run_experiment(small_t1e());
  const RunBundle b = run_experiment(small_t1e());
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t i = 0; i < a.files.size(); ++i) {
    EXPECT_EQ(a.files[i].name, b.files[i].name);
    EXPECT_EQ(a.files[i].contents, b.files[i].contents) << a.files[i].name;
  }
  EXPECT_EQ(a.files.front().name, "data.csv");
  EXPECT_EQ(a.files.back().name, "metadata.json");
}

TEST(Run, DifferentSeedChangesShotData) {
  json s = small_t1e();
  s["seed"] = 43;
  EXPECT_NE(file(run_experiment(small_t1e()), "data.csv"), file(run_experiment(s), "data.csv"));
}

TEST(Run, ThreadCountDoesNotChangeResults) {
  json endor = load(kConfigs / "endor-fidelity.json");
  endor["shots"] = 2000;
  json rabi = load(kConfigs / "rabi.json");
  rabi["sweep"]["duration_us"] = {{"start", 0}, {"stop", 10}, {"points", 9}};
  rabi["shots"] = 50;
  for (const json& s : {small_t1e(), endor, rabi}) {
    EXPECT_EQ(file(run_experiment(s, 1), "data.csv"), file(run_experiment(s, 3), "data.csv")) << s["kind"];
  }
}

TEST(Run, MetadataReproducesTheRun) {
  const RunBundle a = run_experiment(small_t1e());
  EXPECT_EQ(a.metadata["software"]["name"], "ffqsim");
  EXPECT_EQ(a.metadata["software"]["version"], software_version());
  EXPECT_TRUE(a.metadata["environment"].contains("compiler"));
  EXPECT_TRUE(a.metadata["environment"].contains("eigen"));
  const RunBundle b = run_experiment(a.metadata["config"]);
  EXPECT_EQ(file(a, "data.csv"), file(b, "data.csv"));
  EXPECT_EQ(file(a, "metadata.json"), file(b, "metadata.json"));
}

TEST(Run, WriteBundleCreatesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "ffq_runner_bundle";
  std::filesystem::remove_all(dir);
  const RunBundle a = run_experiment(load(kConfigs / "calibrate-attenuation.json"));
  write_bundle(a, dir);
  for (const auto& f : a.files) {
    std::ifstream in(dir / f.name, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), f.contents) << f.name;
  }
  std::filesystem::remove_all(dir);
}

TEST(Run, ChevronMatchesTwoLevelFormula) {
  const RunBundle b = run_experiment(load(kConfigs / "chevron.json"));
  const double rabi = b.metadata["summary"]["rabi_mhz"];
  // Stark-driven flip-flop Rabi frequency at 0.4 V and 512 kHz/V, halved by the drive convention.
  EXPECT_NEAR(rabi, 0.4 * 0.512 / 2, 1e-3);
  const auto rows = parse_csv(file(b, "data.csv"));
  ASSERT_EQ(rows.size(), 41u * 41u);
  double worst = 0;
  for (const auto& r : rows) {
    const double det = r[2], t = r[3];
    const double w = std::sqrt(rabi * rabi + det * det);
    const double s = std::sin(M_PI * w * t);
    const double p = rabi * rabi / (w * w) * s * s;
    worst = std::max(worst, std::abs(r[4] - p));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Run, PumpedFlipFlopDecayReturnsInputT1ff) {
  json s = load(kConfigs / "t1ff-pump.json");
  s["shots"] = 4000;
  const RunBundle b = run_experiment(s);
  const json& sum = b.metadata["summary"];
  const double t1ff = sum["t1ff_s"], sigma = sum["t1ff_sigma_s"];
  EXPECT_NEAR(t1ff, 173.0, std::max(3 * sigma, 0.1 * 173.0));
  EXPECT_GT(sum["trace"]["min"].get<double>(), 0.2);
  EXPECT_LT(sum["trace"]["max"].get<double>(), 0.8);
  EXPECT_FALSE(file(b, "trace.csv").empty());
}

TEST(Run, AttenuationKind) {
  const RunBundle b = run_experiment(load(kConfigs / "calibrate-attenuation.json"));
  EXPECT_NEAR(b.metadata["summary"]["rabi_stark"]["db"].get<double>(), 20 * std::log10(0.125), 1e-9);
  EXPECT_NEAR(b.metadata["summary"]["coulomb_peak"]["db"].get<double>(), 20 * std::log10(0.05 / 0.46), 1e-9);
}

TEST(Run, ExplicitLayoutMatchesBuiltInReducedLayout) {
  json file_spec = load(kConfigs / "triangulate-layout.json");
  json builtin = file_spec;
  builtin["parameters"]["geometry"] = "reduced";
  EXPECT_EQ(file(run_experiment(file_spec), "data.csv"), file(run_experiment(builtin), "data.csv"));
}

TEST(Run, SlopeForUnknownGateIsARuntimeError) {
  json t = load(kConfigs / "triangulate-layout.json");
  t["parameters"]["measurements"][0]["swept"] = "NOPE";
  EXPECT_TRUE(validate_spec(t).empty());
  EXPECT_THROW(run_experiment(t), Error);
}
