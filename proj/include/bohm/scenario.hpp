#pragma once

// Scenario configuration (strict JSON schema) and the scenario-level runs the
// CLI exposes: simulate, ensemble, sigma, perturb.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohm/dynamics.hpp"
#include "bohm/ensemble.hpp"
#include "bohm/transversality.hpp"

namespace bohm {

inline constexpr const char* kVersion = "0.1.0";

struct ModelPerturbation {
  double amplitude = 1e-3;
  std::uint64_t seed = 1;
  int trial = 0;
  double waveNumber = 1.0;
};

struct ModelConfig {
  std::string kind;  // circular | plane_waves | gaussian_packet | speed_c_four_waves
  double omega = 1.0;
  double mass = 1.0;
  std::vector<PlaneWaveSpec> waves;
  GaussianPacketSpec packet;
  double waveNumber = 1.0;
  SpacetimePoint event;
  Spinor target = Spinor::Zero();
  std::optional<ModelPerturbation> perturbation;
};

struct SimulateConfig {
  double t1 = 0.0;
  double t2 = 1.0;
  std::vector<Vec3> positions;
};

struct EquivarianceConfig {
  std::vector<double> times;
  HistogramSpec histogram;
  double maxLostFraction = 0.1;
};

struct EnsembleConfig {
  double t1 = 0.0;
  double t2 = 1.0;
  SamplingRegion region;
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3, 1e-4};
  SamplingOptions sampling;
  std::optional<EquivarianceConfig> equivariance;
  bool dumpTrajectories = false;
};

struct SigmaConfig {
  CompactBox box;
  SigmaOptions options;
  bool pointsCsv = true;
};

struct ScenarioConfig {
  ModelConfig model;
  IntegratorOptions integrator;
  std::optional<SimulateConfig> simulate;
  std::optional<EnsembleConfig> ensemble;
  std::optional<SigmaConfig> sigma;
  std::optional<PerturbationSpec> perturb;
  std::filesystem::path outputDir = "out";
  std::string sourceText;  // raw config, hashed into the run summary
};

/// Parses and validates. Throws Error(Config) with a JSON-pointer location.
ScenarioConfig parseScenario(const std::string& text);
ScenarioConfig loadScenario(const std::filesystem::path& path);

ModelPtr buildModel(const ModelConfig& cfg);

/// --seed override: replaces the ensemble and perturbation seeds.
void overrideSeed(ScenarioConfig& cfg, std::uint64_t seed);
void overrideThreads(ScenarioConfig& cfg, unsigned threads);

/// FNV-1a of the config text, as 16 hex digits.
std::string scenarioHash(const std::string& text);

nlohmann::json toJson(const Trajectory& traj, bool includeSamples = false);
nlohmann::json eventsJson(const Trajectory& traj);
nlohmann::json toJson(const TransversalityReport& r);
nlohmann::json toJson(const PerturbationStats& s);
void writeTrajectoryCsv(const Trajectory& traj, const std::filesystem::path& path);
void writeSigmaCsv(const TransversalityReport& r, const std::filesystem::path& path);

/// Each run writes its report file(s) into `outDir` and returns the
/// deterministic report JSON (no timing information).
nlohmann::json runSimulate(const ScenarioConfig& cfg, const std::filesystem::path& outDir);
nlohmann::json runEnsemble(const ScenarioConfig& cfg, const std::filesystem::path& outDir);
nlohmann::json runSigma(const ScenarioConfig& cfg, const std::filesystem::path& outDir);
nlohmann::json runPerturb(const ScenarioConfig& cfg, const std::filesystem::path& outDir);

/// Dispatches by subcommand name, wraps the report in a run summary with an
/// isolated "timing" block and writes summary.json.
nlohmann::json runSubcommand(const std::string& subcommand, const ScenarioConfig& cfg,
                             const std::filesystem::path& outDir);

/// Serialization used for every report file.
std::string dumpJson(const nlohmann::json& j);

} // namespace bohm
