#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "floqscat/error.hpp"
#include "floqscat/experiment.hpp"

using namespace floqscat;
using nlohmann::json;

namespace {

const std::string kConfigs = std::string(FLOQSCAT_SOURCE_DIR) + "/configs/";

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigInvalid) return e.what();
    return "other error";
  }
  return "";
}

json z1_inline() { return json{{"dimension", 1}, {"vertices", {"o"}}, {"edges", {{"o", "o", {1}}}}}; }

}  // namespace

TEST_CASE("shipped configs validate") {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(kConfigs)) {
    if (e.path().extension() != ".json") continue;
    CAPTURE(e.path().string());
    const json r = validate_config(load_config(e.path().string()));
    CHECK(r.at("graph").is_object());
    ++n;
  }
  CHECK(n >= 10);
}

TEST_CASE("config errors name the field") {
  json cfg = {{"kind", "scattering"}, {"graph", z1_inline()}, {"L", -3}};
  CHECK(message_of([&] { validate_config(cfg); }).find("L: must be positive") != std::string::npos);
  cfg["L"] = 10;
  CHECK(message_of([&] { validate_config(cfg); }).empty());
  CHECK(message_of([&] { validate_config({{"kind", "spectroscopy"}, {"graph", z1_inline()}}); }).find("kind") !=
        std::string::npos);
  CHECK(message_of([&] { validate_config(cfg, "bands"); }).find("kind") != std::string::npos);
  cfg["n_periodz"] = 3;
  CHECK(message_of([&] { validate_config(cfg); }).find("n_periodz") != std::string::npos);
  cfg.erase("n_periodz");
  cfg["fields"] = {{"v", {{"family", "power-decay-sinusoidal"}, {"A", 1.0}, {"tau", 2.0}}}};
  CHECK(message_of([&] { validate_config(cfg); }).find("fields.v.tau") != std::string::npos);
  cfg["fields"] = {{"v", {{"family", "no-such-family"}}}};
  CHECK(message_of([&] { validate_config(cfg); }).find("fields.v") != std::string::npos);
  cfg["fields"] = {{"v", "missing/file.json"}};
  CHECK(message_of([&] { validate_config(cfg); }).find("file not found") != std::string::npos);
  cfg.erase("fields");
  cfg["packet"] = {{"center", {0.0, 0.0}}};
  CHECK(message_of([&] { validate_config(cfg); }).find("packet.center") != std::string::npos);
  cfg.erase("packet");
  cfg["gauge_compare"] = true;
  CHECK(message_of([&] { validate_config(cfg); }).find("fields.q") != std::string::npos);
  CHECK(message_of([&] { validate_config({{"kind", "bands"}}); }).find("graph: required") != std::string::npos);
}

TEST_CASE("overrides use dotted paths") {
  json cfg = {{"kind", "bands"}, {"graph", "builtin:z1"}};
  apply_override(cfg, "n_k=64");
  apply_override(cfg, "potential.family=constant");
  apply_override(cfg, "potential.value=0.5");
  CHECK(cfg.at("n_k") == 64);
  CHECK(cfg.at("potential").at("value") == 0.5);
  CHECK(cfg.at("potential").at("family") == "constant");
  CHECK(message_of([&] { apply_override(cfg, "novalue"); }).find("override") != std::string::npos);
  const auto r = run_experiment(validate_config(cfg));
  CHECK(r.summary.find("σ=[0.500000,2.500000]") != std::string::npos);
}

TEST_CASE("bands on Z^1 from the shipped config") {
  const auto r = run_experiment(validate_config(load_config(kConfigs + "ac01_bands_z1.json")));
  CHECK(r.exit_code == 0);
  CHECK(r.summary.find("σ=[0.000000,2.000000]") != std::string::npos);
  const std::string& csv = r.artifacts.at("bands.csv");
  CHECK(csv.rfind("k_1,lambda_1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 257);
}

TEST_CASE("scattering with zero driving passes with vanishing defects, deterministically") {
  const json cfg = {{"kind", "scattering"}, {"graph", "builtin:z1"}, {"L", 60}, {"n_periods", 10},
                    {"steps_per_period", 8}, {"packet", {{"sigma", 3.0}}}};
  const json resolved = validate_config(cfg);
  const auto a = run_experiment(resolved);
  const auto b = run_experiment(resolved);
  CHECK(a.verdict == "pass");
  CHECK(a.exit_code == 0);
  const json j = json::parse(a.artifacts.at("scattering.json"));
  for (double d : j.at("decrements")) CHECK(d <= 1e-12);
  for (double d : j.at("isometry_defects")) CHECK(d <= 1e-12);
  CHECK(a.artifacts == b.artifacts);

  const auto dir = std::filesystem::temp_directory_path() / "floqscat_test_out";
  std::filesystem::remove_all(dir);
  write_outputs(dir.string(), make_manifest(resolved, a), a);
  for (const char* f : {"manifest.json", "summary.txt", "scattering.csv", "scattering.json"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream in(dir / "manifest.json");
  const json m = json::parse(in);
  CHECK(m.at("config").at("L") == 60);
  CHECK(m.at("versions").contains("eigen"));
  CHECK(m.at("exit_code") == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("not converged maps to exit code 2") {
  const json cfg = {{"kind", "scattering"}, {"graph", "builtin:z1"}, {"L", 40},
                    {"potential", {{"family", "defect"}, {"offset", {0}}, {"vertex", "o"}, {"value", 3.0}}},
                    {"n_periods", 10}, {"steps_per_period", 8}, {"probe", "adjoint"},
                    {"initial", "localized-eigenvector"}};
  const auto r = run_experiment(validate_config(cfg));
  CHECK(r.verdict == "not-converged");
  CHECK(r.exit_code == 2);
}
