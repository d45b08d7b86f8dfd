#include <CLI11.hpp>

#include <iostream>

#include "floqscat/error.hpp"
#include "floqscat/experiment.hpp"

using namespace floqscat;

namespace {

struct Args {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
};

nlohmann::json prepare(const Args& a, const std::string& kind) {
  nlohmann::json cfg = load_config(a.config);
  for (const auto& o : a.overrides) apply_override(cfg, o);
  return validate_config(cfg, kind);
}

int run(const Args& a, const std::string& kind) {
  const nlohmann::json resolved = prepare(a, kind);
  const ExperimentResult r = run_experiment(resolved);
  const std::string dir = a.out.empty() ? "out/" + kind : a.out;
  write_outputs(dir, make_manifest(resolved, r), r);
  std::cout << r.summary << "outputs: " << dir << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven lattice Hamiltonians: bands, quasienergies, gauge checks, scattering"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("floqscat ") + FLOQSCAT_VERSION);
  Args args;
  std::string active;
  for (const auto& kind : experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run a " + kind + " experiment");
    sub->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--override", args.overrides, "key=value, dotted paths into the config");
    sub->add_option("--out", args.out, "output directory (default out/<kind>)");
    sub->callback([&active, kind] { active = kind; });
  }
  std::string validate_kind;
  auto* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  val->add_option("--override", args.overrides, "key=value, dotted paths into the config");
  val->add_option("--kind", validate_kind, "experiment kind, if the config does not name one");
  val->callback([&active] { active = "validate"; });

  CLI11_PARSE(app, argc, argv);
  try {
    if (active == "validate") {
      const auto r = prepare(args, validate_kind);
      std::cout << "valid: " << r.at("kind").get<std::string>() << "\n";
      return 0;
    }
    return run(args, active);
  } catch (const Error& e) {
    std::cerr << "error [" << active << "] " << e.what() << "\n";
    return e.code() == ErrorCode::BoundaryContamination ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error [" << active << "] " << e.what() << "\n";
    return 1;
  }
}
