#include "bohm/bohm.h"

#include <cstring>
#include <string>

#include "bohm/dynamics.hpp"
#include "bohm/error.hpp"
#include "bohm/scenario.hpp"
#include "bohm/validation.hpp"

struct bohm_model {
  bohm::ModelPtr model;
};

struct bohm_trajectory {
  bohm::Trajectory traj;
};

struct bohm_scenario {
  bohm::ScenarioConfig cfg;
  std::string outputDir;
};

namespace {

thread_local std::string lastError;

bohm_status statusOf(bohm::ErrorCode code) {
  using bohm::ErrorCode;
  switch (code) {
  case ErrorCode::NearNode: return BOHM_E_NEAR_NODE;
  case ErrorCode::NotUnit: return BOHM_E_NOT_UNIT;
  case ErrorCode::ZeroSpinor: return BOHM_E_ZERO_SPINOR;
  case ErrorCode::ZeroWaveVector: return BOHM_E_ZERO_WAVE_VECTOR;
  case ErrorCode::MixedMass: return BOHM_E_MIXED_MASS;
  case ErrorCode::NodeAtOrigin: return BOHM_E_NODE_AT_ORIGIN;
  case ErrorCode::SingularSystem: return BOHM_E_SINGULAR_SYSTEM;
  case ErrorCode::StepFailure: return BOHM_E_STEP_FAILURE;
  case ErrorCode::DegenerateDensity: return BOHM_E_DEGENERATE_DENSITY;
  case ErrorCode::TooManyLost: return BOHM_E_TOO_MANY_LOST;
  case ErrorCode::InvalidArgument: return BOHM_E_INVALID_ARGUMENT;
  case ErrorCode::Config: return BOHM_E_CONFIG;
  case ErrorCode::Internal: return BOHM_E_INTERNAL;
  }
  return BOHM_E_INTERNAL;
}

template <class Fn>
bohm_status guard(Fn&& fn) {
  try {
    fn();
    lastError.clear();
    return BOHM_OK;
  } catch (const bohm::Error& e) {
    lastError = e.what();
    return statusOf(e.code());
  } catch (const std::exception& e) {
    lastError = e.what();
    return BOHM_E_INTERNAL;
  } catch (...) {
    lastError = "unknown exception";
    return BOHM_E_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok)
    throw bohm::Error(bohm::ErrorCode::InvalidArgument, what);
}

bohm::Spinor toSpinor(const double* p) {
  require(p != nullptr, "null spinor");
  bohm::Spinor s;
  for (int i = 0; i < 4; ++i)
    s(i) = bohm::cplx(p[2 * i], p[2 * i + 1]);
  return s;
}

void fromSpinor(const bohm::Spinor& s, double* out) {
  for (int i = 0; i < 4; ++i) {
    out[2 * i] = s(i).real();
    out[2 * i + 1] = s(i).imag();
  }
}

bohm::Vec3 toVec(const double* q) {
  require(q != nullptr, "null vector");
  return {q[0], q[1], q[2]};
}

char* copyString(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

bohm_status newModel(bohm::ModelPtr m, bohm_model** out) {
  *out = new bohm_model{std::move(m)};
  return BOHM_OK;
}

} // namespace

extern "C" {

const char* bohm_version(void) { return bohm::kVersion; }

const char* bohm_last_error(void) { return lastError.c_str(); }

const char* bohm_status_name(bohm_status status) {
  switch (status) {
  case BOHM_OK: return "OK";
  case BOHM_E_INVALID_ARGUMENT: return "InvalidArgument";
  case BOHM_E_CONFIG: return "Config";
  case BOHM_E_NEAR_NODE: return "NearNode";
  case BOHM_E_DEGENERATE_DENSITY: return "DegenerateDensity";
  case BOHM_E_TOO_MANY_LOST: return "TooManyLost";
  case BOHM_E_NOT_UNIT: return "NotUnit";
  case BOHM_E_ZERO_SPINOR: return "ZeroSpinor";
  case BOHM_E_ZERO_WAVE_VECTOR: return "ZeroWaveVector";
  case BOHM_E_MIXED_MASS: return "MixedMass";
  case BOHM_E_NODE_AT_ORIGIN: return "NodeAtOrigin";
  case BOHM_E_SINGULAR_SYSTEM: return "SingularSystem";
  case BOHM_E_STEP_FAILURE: return "StepFailure";
  case BOHM_E_INTERNAL: return "Internal";
  }
  return "Unknown";
}

void bohm_string_free(char* s) { delete[] s; }

bohm_status bohm_current(const double psi[8], double j[4]) {
  return guard([&] {
    require(j != nullptr, "null output");
    const bohm::FourVector v = bohm::current(toSpinor(psi));
    j[0] = v.t;
    j[1] = v.space.x();
    j[2] = v.space.y();
    j[3] = v.space.z();
  });
}

bohm_status bohm_bohm_velocity(const double psi[8], double psi_floor, double v[3]) {
  return guard([&] {
    require(v != nullptr, "null output");
    const bohm::Vec3 u = bohm::bohmVelocity(toSpinor(psi), psi_floor);
    v[0] = u.x();
    v[1] = u.y();
    v[2] = u.z();
  });
}

bohm_status bohm_lorentz_invariants(const double psi[8], double* s, double* p) {
  return guard([&] {
    require(s && p, "null output");
    const auto li = bohm::lorentzInvariants(toSpinor(psi));
    *s = li.scalar;
    *p = li.pseudoscalar;
  });
}

bohm_status bohm_s_deviation(const double psi[8], double* out) {
  return guard([&] {
    require(out != nullptr, "null output");
    *out = bohm::sDeviation(toSpinor(psi));
  });
}

bohm_status bohm_model_circular(double omega, bohm_model** out) {
  return guard([&] {
    require(out != nullptr, "null output");
    newModel(std::make_shared<const bohm::CircularExample>(omega), out);
  });
}

bohm_status bohm_model_plane_waves(double mass, size_t n, const double* k, const int* branch,
                                   const double* amplitude, bohm_model** out) {
  return guard([&] {
    require(out != nullptr, "null output");
    require(n == 0 || (k && branch && amplitude), "null wave arrays");
    std::vector<bohm::PlaneWaveSpec> specs;
    for (size_t i = 0; i < n; ++i)
      specs.push_back({bohm::Vec3(k[3 * i], k[3 * i + 1], k[3 * i + 2]), branch[i],
                       bohm::cplx(amplitude[2 * i], amplitude[2 * i + 1]), mass});
    newModel(std::make_shared<const bohm::Superposition>(std::move(specs), mass), out);
  });
}

bohm_status bohm_model_gaussian_packet(double mass, const double center_k[3], double width_k,
                                       int branch, int nodes_per_axis, double radius,
                                       bohm_model** out) {
  return guard([&] {
    require(out != nullptr, "null output");
    bohm::GaussianPacketSpec spec;
    spec.mass = mass;
    spec.centerK = toVec(center_k);
    spec.widthK = width_k;
    spec.branch = branch;
    spec.quadrature.nodesPerAxis = nodes_per_axis;
    spec.quadrature.radius = radius;
    newModel(bohm::gaussianPacketBuild(spec), out);
  });
}

bohm_status bohm_model_from_json(const char* json, bohm_model** out) {
  return guard([&] {
    require(json && out, "null argument");
    const bohm::ScenarioConfig cfg = bohm::parseScenario(std::string("{\"model\": ") + json + "}");
    newModel(bohm::buildModel(cfg.model), out);
  });
}

void bohm_model_free(bohm_model* model) { delete model; }

bohm_status bohm_model_evaluate(const bohm_model* model, double t, const double q[3],
                                double psi[8]) {
  return guard([&] {
    require(model && psi, "null argument");
    fromSpinor(model->model->evaluate({t, toVec(q)}), psi);
  });
}

bohm_status bohm_model_gradient(const bohm_model* model, double t, const double q[3],
                                double grad[32]) {
  return guard([&] {
    require(model && grad, "null argument");
    const auto g = model->model->gradient({t, toVec(q)});
    for (std::size_t mu = 0; mu < 4; ++mu)
      fromSpinor(g[mu], grad + 8 * mu);
  });
}

bohm_status bohm_model_dirac_residual(const bohm_model* model, double t, const double q[3],
                                      double* out) {
  return guard([&] {
    require(model && out, "null argument");
    *out = bohm::diracResidual(*model->model, {t, toVec(q)});
  });
}

bohm_status bohm_model_velocity(const bohm_model* model, double t, const double q[3],
                                double psi_floor, double v[3]) {
  return guard([&] {
    require(model && v, "null argument");
    const bohm::Vec3 u = bohm::velocityField(*model->model, t, toVec(q), psi_floor);
    v[0] = u.x();
    v[1] = u.y();
    v[2] = u.z();
  });
}

void bohm_integrator_options_default(bohm_integrator_options* opts) {
  if (!opts)
    return;
  const bohm::IntegratorOptions d;
  opts->rel_tol = d.relTol;
  opts->abs_tol = d.absTol;
  opts->max_step = 0.0;
  opts->psi_floor = d.psiFloor;
  opts->speed_event_epsilon = d.speedEventEpsilon;
  opts->max_samples = d.maxSamples;
  opts->fixed_step_rk4 = d.fixedStepRk4 ? 1 : 0;
  opts->fixed_step = d.fixedStep;
}

bohm_status bohm_integrate(const bohm_model* model, const double q0[3], double t1, double t2,
                           const bohm_integrator_options* opts, bohm_trajectory** out) {
  return guard([&] {
    require(model && out, "null argument");
    bohm::IntegratorOptions o;
    if (opts) {
      o.relTol = opts->rel_tol;
      o.absTol = opts->abs_tol;
      if (opts->max_step > 0.0)
        o.maxStep = opts->max_step;
      o.psiFloor = opts->psi_floor;
      o.speedEventEpsilon = opts->speed_event_epsilon;
      o.maxSamples = opts->max_samples;
      o.fixedStepRk4 = opts->fixed_step_rk4 != 0;
      o.fixedStep = opts->fixed_step;
    }
    *out = new bohm_trajectory{bohm::integrate(model->model, toVec(q0), t1, t2, o)};
  });
}

void bohm_trajectory_free(bohm_trajectory* traj) { delete traj; }

size_t bohm_trajectory_size(const bohm_trajectory* traj) {
  return traj ? traj->traj.samples().size() : 0;
}

bohm_status bohm_trajectory_sample(const bohm_trajectory* traj, size_t index, double row[10]) {
  return guard([&] {
    require(traj && row, "null argument");
    require(index < traj->traj.samples().size(), "sample index out of range");
    const auto& s = traj->traj.samples()[index];
    const double vals[10] = {s.t, s.q.x(), s.q.y(), s.q.z(), s.v.x(), s.v.y(), s.v.z(),
                             s.speed, s.sDev, s.density};
    std::memcpy(row, vals, sizeof vals);
  });
}

bohm_status bohm_trajectory_position_at(const bohm_trajectory* traj, double t, double q[3]) {
  return guard([&] {
    require(traj && q, "null argument");
    const bohm::Vec3 p = traj->traj.positionAt(t);
    q[0] = p.x();
    q[1] = p.y();
    q[2] = p.z();
  });
}

bohm_status bohm_trajectory_write_csv(const bohm_trajectory* traj, const char* path) {
  return guard([&] {
    require(traj && path, "null argument");
    bohm::writeTrajectoryCsv(traj->traj, path);
  });
}

bohm_status bohm_trajectory_events_json(const bohm_trajectory* traj, char** json) {
  return guard([&] {
    require(traj && json, "null argument");
    *json = copyString(bohm::eventsJson(traj->traj).dump());
  });
}

bohm_status bohm_trajectory_speed_c_intervals(const bohm_trajectory* traj, double epsilon,
                                              char** json) {
  return guard([&] {
    require(traj && json, "null argument");
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& iv : bohm::detectSpeedCEvents(traj->traj, epsilon))
      arr.push_back({iv.start, iv.end});
    *json = copyString(arr.dump());
  });
}

bohm_status bohm_scenario_load(const char* path, bohm_scenario** out) {
  return guard([&] {
    require(path && out, "null argument");
    bohm::ScenarioConfig cfg = bohm::loadScenario(path);
    const std::string dir = cfg.outputDir.string();
    *out = new bohm_scenario{std::move(cfg), dir};
  });
}

bohm_status bohm_scenario_parse(const char* text, bohm_scenario** out) {
  return guard([&] {
    require(text && out, "null argument");
    bohm::ScenarioConfig cfg = bohm::parseScenario(text);
    const std::string dir = cfg.outputDir.string();
    *out = new bohm_scenario{std::move(cfg), dir};
  });
}

void bohm_scenario_free(bohm_scenario* scenario) { delete scenario; }

bohm_status bohm_scenario_set_seed(bohm_scenario* scenario, uint64_t seed) {
  return guard([&] {
    require(scenario != nullptr, "null scenario");
    bohm::overrideSeed(scenario->cfg, seed);
  });
}

bohm_status bohm_scenario_set_threads(bohm_scenario* scenario, unsigned threads) {
  return guard([&] {
    require(scenario != nullptr, "null scenario");
    bohm::overrideThreads(scenario->cfg, threads);
  });
}

const char* bohm_scenario_output_dir(const bohm_scenario* scenario) {
  return scenario ? scenario->outputDir.c_str() : "";
}

bohm_status bohm_scenario_run(const bohm_scenario* scenario, const char* subcommand,
                              const char* out_dir, char** summary_json) {
  return guard([&] {
    require(scenario && subcommand, "null argument");
    const std::filesystem::path dir = out_dir ? out_dir : scenario->cfg.outputDir;
    const nlohmann::json summary = bohm::runSubcommand(subcommand, scenario->cfg, dir);
    if (summary_json)
      *summary_json = copyString(bohm::dumpJson(summary));
  });
}

bohm_status bohm_validate(uint64_t seed, unsigned threads, char** report_json, int* all_passed) {
  return guard([&] {
    const bohm::ValidationReport r =
        bohm::runValidation(bohm::DiracAlgebra::standard(), seed, threads);
    if (report_json)
      *report_json = copyString(bohm::dumpJson(r.toJson()));
    if (all_passed)
      *all_passed = r.allPassed() ? 1 : 0;
  });
}

} // extern "C"
