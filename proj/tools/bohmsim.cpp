// bohmsim: scenario runner for the Bohmian Dirac-electron engine.
//
//   bohmsim simulate --config scenarios/circular.json --out out/circ
//   bohmsim ensemble --config scenarios/packet.json --seed 7 --threads 8
//   bohmsim sigma    --config scenarios/perturbed_circular.json
//   bohmsim perturb  --config scenarios/circular.json
//   bohmsim validate
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 runtime physics (node, degenerate
// density, lost trajectories), 4 internal.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "bohm/bohm.h"

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kPhysics = 3, kInternal = 4 };

int exitCodeFor(bohm_status s) {
  switch (s) {
  case BOHM_OK: return kOk;
  case BOHM_E_CONFIG: return kConfig;
  case BOHM_E_NEAR_NODE:
  case BOHM_E_DEGENERATE_DENSITY:
  case BOHM_E_TOO_MANY_LOST: return kPhysics;
  default: return kInternal;
  }
}

int fail(bohm_status s) {
  std::cerr << "bohmsim: " << bohm_status_name(s) << ": " << bohm_last_error() << "\n";
  return exitCodeFor(s);
}

struct Options {
  std::string config;
  std::string out;
  long long seed = -1;
  unsigned threads = 0;
  bool quiet = false;
};

int runScenario(const std::string& sub, const Options& o) {
  bohm_scenario* sc = nullptr;
  if (bohm_status s = bohm_scenario_load(o.config.c_str(), &sc); s != BOHM_OK)
    return fail(s);
  if (o.seed >= 0)
    bohm_scenario_set_seed(sc, static_cast<uint64_t>(o.seed));
  bohm_scenario_set_threads(sc, o.threads);
  char* summary = nullptr;
  const bohm_status s =
      bohm_scenario_run(sc, sub.c_str(), o.out.empty() ? nullptr : o.out.c_str(), &summary);
  const std::string outDir = o.out.empty() ? bohm_scenario_output_dir(sc) : o.out;
  bohm_scenario_free(sc);
  if (s != BOHM_OK)
    return fail(s);
  if (!o.quiet) {
    const auto j = nlohmann::json::parse(summary);
    std::cout << sub << ": wrote " << outDir << "/summary.json (scenario "
              << j["scenario_hash"].get<std::string>() << ", "
              << j["timing"]["wall_seconds"].get<double>() << " s)\n";
    const auto& r = j["result"];
    if (r.contains("verdict"))
      std::cout << "verdict: " << r["verdict"].get<std::string>() << "\n";
    if (r.contains("transverse_fraction"))
      std::cout << "transverse fraction: " << r["transverse_fraction"].get<double>() << "\n";
    if (r.contains("speed_c_fractions"))
      for (const auto& f : r["speed_c_fractions"])
        std::cout << "eps " << f["epsilon"].get<double>() << ": fraction "
                  << f["fraction"].get<double>() << "\n";
  }
  bohm_string_free(summary);
  return kOk;
}

int runValidate(const Options& o) {
  char* report = nullptr;
  int ok = 0;
  const uint64_t seed = o.seed >= 0 ? static_cast<uint64_t>(o.seed) : 20240611u;
  if (bohm_status s = bohm_validate(seed, o.threads, &report, &ok); s != BOHM_OK)
    return fail(s);
  if (!o.quiet) {
    const auto j = nlohmann::json::parse(report);
    for (const auto& c : j["checks"])
      std::cout << (c["passed"].get<bool>() ? "PASS  " : "FAIL  ") << c["name"].get<std::string>()
                << "  (" << c["detail"].get<std::string>() << ")\n";
  }
  bohm_string_free(report);
  return ok ? kOk : kPhysics;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bohmian trajectories and speed-of-light diagnostics for a free Dirac electron",
               "bohmsim"};
  app.set_version_flag("--version", std::string(bohm_version()));
  Options o;

  auto addCommon = [&](CLI::App* sub, bool needsConfig) {
    auto* cfg = sub->add_option("--config", o.config, "scenario config (JSON)");
    if (needsConfig)
      cfg->required();
    sub->add_option("--out", o.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", o.seed, "RNG seed override")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    sub->add_flag("--quiet", o.quiet, "suppress console output");
  };

  const char* names[] = {"simulate", "ensemble", "sigma", "perturb"};
  const char* help[] = {"integrate Bohmian trajectories from the listed start positions",
                        "|psi|^2 ensemble: speed-c fractions and equivariance",
                        "locate the speed-c set Sigma in a spacetime box",
                        "random four-wave perturbations of the model"};
  for (int i = 0; i < 4; ++i)
    addCommon(app.add_subcommand(names[i], help[i]), true);
  addCommon(app.add_subcommand("validate", "run the invariant suite"), false);
  app.require_subcommand(1);

  if (argc <= 1) {
    std::cout << app.help();
    return kUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "validate")
    return runValidate(o);
  return runScenario(sub, o);
}
