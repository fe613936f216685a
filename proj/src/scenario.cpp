#include "bohm/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "bohm/error.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

using nlohmann::json;

namespace {

[[noreturn]] void configError(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::Config, "config error at " + (where.empty() ? "/" : where) + ": " + what);
}

// Strict object reader: every key must be consumed, unknown keys are errors.
class Reader {
public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object())
      configError(path_, "expected an object");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() == 0)
      for (auto it = j_.begin(); it != j_.end(); ++it)
        if (!seen_.count(it.key()))
          configError(path_ + "/" + it.key(), "unknown key");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string at(const std::string& key) const { return path_ + "/" + key; }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key))
      configError(at(key), "required key is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number())
      configError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
      configError(at(key), "expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (seen_.insert(key), fallback);
  }
  double positive(const std::string& key, double fallback) {
    const double d = number(key, fallback);
    if (!(d > 0.0))
      configError(at(key), "must be > 0");
    return d;
  }

  std::int64_t integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer())
      configError(at(key), "expected an integer");
    return v.get<std::int64_t>();
  }
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    return has(key) ? integer(key) : (seen_.insert(key), fallback);
  }
  std::int64_t atLeast(const std::string& key, std::int64_t fallback, std::int64_t min) {
    const std::int64_t v = integer(key, fallback);
    if (v < min)
      configError(at(key), "must be >= " + std::to_string(min));
    return v;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    const json& v = raw(key);
    if (!v.is_boolean())
      configError(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string())
      configError(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::size_t exactSize = 0) {
    const json& v = raw(key);
    if (!v.is_array())
      configError(at(key), "expected an array of numbers");
    if (exactSize && v.size() != exactSize)
      configError(at(key), "expected exactly " + std::to_string(exactSize) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>()))
        configError(at(key) + "/" + std::to_string(i), "expected a finite number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Vec3 vec3(const std::string& key) {
    const auto v = numbers(key, 3);
    return {v[0], v[1], v[2]};
  }

  cplx complex(const std::string& key) {
    const auto v = numbers(key, 2);
    return {v[0], v[1]};
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Box3 readBox(Reader& r, const std::string& where) {
  Box3 b{r.vec3("lo"), r.vec3("hi")};
  if (!(b.lo.array() < b.hi.array()).all())
    configError(where, "needs lo < hi on every axis");
  return b;
}

int readBranch(Reader& r) {
  const auto b = r.integer("branch", 1);
  if (b != 1 && b != 2)
    configError(r.at("branch"), "must be 1 or 2");
  return static_cast<int>(b);
}

double readMass(Reader& r) {
  const double m = r.number("mass", 1.0);
  if (!(m >= 0.0))
    configError(r.at("mass"), "must be >= 0");
  return m;
}

ModelConfig readModel(const json& j, const std::string& path) {
  Reader r(j, path);
  ModelConfig m;
  m.kind = r.string("kind");
  if (m.kind == "circular") {
    m.omega = r.positive("omega", 1.0);
    m.mass = m.omega;
  } else if (m.kind == "plane_waves") {
    m.mass = readMass(r);
    const json& waves = r.raw("waves");
    if (!waves.is_array())
      configError(r.at("waves"), "expected an array of waves");
    for (std::size_t i = 0; i < waves.size(); ++i) {
      const std::string wp = r.at("waves") + "/" + std::to_string(i);
      Reader w(waves[i], wp);
      PlaneWaveSpec s;
      s.k = w.vec3("k");
      if (!(s.k.norm() > 0.0))
        configError(w.at("k"), "wave vector must be nonzero");
      s.branch = readBranch(w);
      s.amplitude = w.has("amplitude") ? w.complex("amplitude") : cplx(1.0, 0.0);
      s.mass = m.mass;
      m.waves.push_back(s);
    }
  } else if (m.kind == "gaussian_packet") {
    m.mass = readMass(r);
    m.packet.mass = m.mass;
    m.packet.centerK = r.vec3("center_k");
    m.packet.widthK = r.positive("width_k", 0.2);
    m.packet.branch = readBranch(r);
    if (r.has("quadrature")) {
      Reader q(r.raw("quadrature"), r.at("quadrature"));
      m.packet.quadrature.nodesPerAxis = static_cast<int>(q.atLeast("nodes_per_axis", 9, 1));
      m.packet.quadrature.radius = q.positive("radius", 4.0 * m.packet.widthK);
      m.packet.quadrature.maxTotalNodes =
          static_cast<std::size_t>(q.atLeast("max_total_nodes", 1 << 20, 1));
    } else {
      m.packet.quadrature.radius = 4.0 * m.packet.widthK;
    }
  } else if (m.kind == "speed_c_four_waves") {
    m.mass = readMass(r);
    m.waveNumber = r.positive("k", 1.0);
    const auto ev = r.numbers("event", 4);
    m.event = {ev[0], Vec3(ev[1], ev[2], ev[3])};
    const json& target = r.raw("target");
    if (!target.is_array() || target.size() != 4)
      configError(r.at("target"), "expected 4 [re, im] pairs");
    for (std::size_t i = 0; i < 4; ++i) {
      const json& c = target[i];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        configError(r.at("target") + "/" + std::to_string(i), "expected [re, im]");
      m.target(static_cast<Eigen::Index>(i)) = cplx(c[0].get<double>(), c[1].get<double>());
    }
  } else {
    configError(r.at("kind"),
                "unknown model kind '" + m.kind +
                    "' (expected circular, plane_waves, gaussian_packet, speed_c_four_waves)");
  }

  if (r.has("perturbation")) {
    Reader p(r.raw("perturbation"), r.at("perturbation"));
    ModelPerturbation mp;
    mp.amplitude = p.number("amplitude");
    if (!(mp.amplitude >= 0.0))
      configError(p.at("amplitude"), "must be >= 0");
    mp.seed = static_cast<std::uint64_t>(p.atLeast("seed", 1, 0));
    mp.trial = static_cast<int>(p.atLeast("trial", 0, 0));
    mp.waveNumber = p.positive("k", 1.0);
    m.perturbation = mp;
  }
  return m;
}

IntegratorOptions readIntegrator(const json& j, const std::string& path) {
  Reader r(j, path);
  IntegratorOptions o;
  o.relTol = r.positive("rel_tol", o.relTol);
  o.absTol = r.positive("abs_tol", o.absTol);
  if (r.has("max_step"))
    o.maxStep = r.positive("max_step", 1.0);
  o.psiFloor = r.positive("psi_floor", o.psiFloor);
  o.speedEventEpsilon = r.positive("speed_event_epsilon", o.speedEventEpsilon);
  if (!(o.speedEventEpsilon < 1.0))
    configError(r.at("speed_event_epsilon"), "must be < 1");
  o.maxSamples = static_cast<std::size_t>(r.atLeast("max_samples", 1'000'000, 2));
  o.fixedStepRk4 = r.boolean("fixed_step_rk4", false);
  o.fixedStep = r.positive("fixed_step", o.fixedStep);
  if (r.has("domain")) {
    Reader d(r.raw("domain"), r.at("domain"));
    o.domain = readBox(d, r.at("domain"));
  }
  return o;
}

std::pair<double, double> readInterval(Reader& r) {
  const double t1 = r.number("t1", 0.0);
  const double t2 = r.number("t2");
  if (!(t1 < t2))
    configError(r.at("t2"), "must be > t1");
  return {t1, t2};
}

SimulateConfig readSimulate(const json& j, const std::string& path) {
  Reader r(j, path);
  SimulateConfig s;
  std::tie(s.t1, s.t2) = readInterval(r);
  const json& pos = r.raw("positions");
  if (!pos.is_array() || pos.empty())
    configError(r.at("positions"), "expected a non-empty array of [x, y, z]");
  for (std::size_t i = 0; i < pos.size(); ++i) {
    const json& p = pos[i];
    if (!p.is_array() || p.size() != 3 ||
        !std::all_of(p.begin(), p.end(), [](const json& v) { return v.is_number(); }))
      configError(r.at("positions") + "/" + std::to_string(i), "expected [x, y, z]");
    s.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return s;
}

EnsembleConfig readEnsemble(const json& j, const std::string& path) {
  Reader r(j, path);
  EnsembleConfig e;
  std::tie(e.t1, e.t2) = readInterval(r);
  e.region.n = static_cast<std::size_t>(r.atLeast("n", 1000, 1));
  e.region.seed = static_cast<std::uint64_t>(r.atLeast("seed", 1, 0));
  {
    Reader b(r.raw("region"), r.at("region"));
    e.region.box = readBox(b, r.at("region"));
  }
  if (r.has("epsilons")) {
    e.epsilons = r.numbers("epsilons");
    for (std::size_t i = 0; i < e.epsilons.size(); ++i)
      if (!(e.epsilons[i] > 0.0 && e.epsilons[i] < 1.0))
        configError(r.at("epsilons") + "/" + std::to_string(i), "must lie in (0, 1)");
  }
  e.sampling.scanResolution = static_cast<int>(r.atLeast("scan_resolution", 64, 2));
  e.sampling.envelopeFactor = r.number("envelope_factor", 1.2);
  if (!(e.sampling.envelopeFactor >= 1.0))
    configError(r.at("envelope_factor"), "must be >= 1");
  e.dumpTrajectories = r.boolean("dump_trajectories", false);
  if (r.has("equivariance")) {
    Reader q(r.raw("equivariance"), r.at("equivariance"));
    EquivarianceConfig eq;
    eq.times = q.numbers("times");
    if (eq.times.empty())
      configError(q.at("times"), "expected at least one time");
    eq.maxLostFraction = q.number("max_lost_fraction", 0.1);
    Reader h(q.raw("histogram"), q.at("histogram"));
    eq.histogram.box = readBox(h, q.at("histogram"));
    const auto bins = h.numbers("bins", 3);
    for (std::size_t a = 0; a < 3; ++a) {
      if (bins[a] < 1 || bins[a] != std::floor(bins[a]))
        configError(h.at("bins"), "bins must be positive integers");
      eq.histogram.bins[a] = static_cast<int>(bins[a]);
    }
    eq.histogram.subSamples = static_cast<int>(h.atLeast("sub_samples", 2, 1));
    e.equivariance = eq;
  }
  return e;
}

SigmaConfig readSigma(const json& j, const std::string& path) {
  Reader r(j, path);
  SigmaConfig s;
  {
    Reader b(r.raw("box"), r.at("box"));
    const auto t = b.numbers("t", 2);
    s.box.t1 = t[0];
    s.box.t2 = t[1];
    if (!(s.box.t1 < s.box.t2))
      configError(b.at("t"), "needs t1 < t2");
    const Box3 space = readBox(b, r.at("box"));
    s.box.lo = space.lo;
    s.box.hi = space.hi;
    if (b.has("resolution")) {
      const auto res = b.numbers("resolution", 4);
      for (std::size_t a = 0; a < 4; ++a) {
        if (res[a] < 2 || res[a] != std::floor(res[a]))
          configError(b.at("resolution"), "resolution must be integers >= 2");
        s.box.resolution[a] = static_cast<int>(res[a]);
      }
    }
  }
  auto& o = s.options;
  o.newtonTol = r.positive("newton_tol", o.newtonTol);
  o.maxIter = static_cast<int>(r.atLeast("max_iter", o.maxIter, 1));
  o.marginTol = r.positive("margin_tol", o.marginTol);
  o.degenerateTol = r.positive("degenerate_tol", o.degenerateTol);
  o.degenerateFraction = r.positive("degenerate_fraction", o.degenerateFraction);
  if (!(o.degenerateFraction < 1.0))
    configError(r.at("degenerate_fraction"), "must be < 1");
  o.seedFraction = r.number("seed_fraction", o.seedFraction);
  o.maxSeeds = static_cast<std::size_t>(r.atLeast("max_seeds", 4096, 1));
  o.dedupTol = r.positive("dedup_tol", o.dedupTol);
  o.psiFloor = r.positive("psi_floor", o.psiFloor);
  s.pointsCsv = r.boolean("points_csv", true);
  return s;
}

PerturbationSpec readPerturb(const json& j, const std::string& path) {
  Reader r(j, path);
  PerturbationSpec p;
  p.amplitude = r.number("amplitude", p.amplitude);
  if (!(p.amplitude >= 0.0))
    configError(r.at("amplitude"), "must be >= 0");
  p.trials = static_cast<int>(r.atLeast("trials", 50, 1));
  p.seed = static_cast<std::uint64_t>(r.atLeast("seed", 1, 0));
  p.waveNumber = r.positive("k", 1.0);
  return p;
}

} // namespace

ScenarioConfig parseScenario(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.what() carries "line L, column C".
    throw Error(ErrorCode::Config, std::string("config parse error: ") + e.what());
  }
  ScenarioConfig cfg;
  cfg.sourceText = text;
  Reader r(root, "");
  cfg.model = readModel(r.raw("model"), "/model");
  if (r.has("integrator"))
    cfg.integrator = readIntegrator(r.raw("integrator"), "/integrator");
  if (r.has("simulate"))
    cfg.simulate = readSimulate(r.raw("simulate"), "/simulate");
  if (r.has("ensemble"))
    cfg.ensemble = readEnsemble(r.raw("ensemble"), "/ensemble");
  if (r.has("sigma"))
    cfg.sigma = readSigma(r.raw("sigma"), "/sigma");
  if (r.has("perturb"))
    cfg.perturb = readPerturb(r.raw("perturb"), "/perturb");
  if (r.has("output")) {
    Reader o(r.raw("output"), "/output");
    cfg.outputDir = o.string("dir");
  }
  return cfg;
}

ScenarioConfig loadScenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::Config, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseScenario(ss.str());
}

ModelPtr buildModel(const ModelConfig& cfg) {
  ModelPtr model;
  if (cfg.kind == "circular") {
    model = std::make_shared<const CircularExample>(cfg.omega);
  } else if (cfg.kind == "plane_waves") {
    model = std::make_shared<const Superposition>(cfg.waves, cfg.mass);
  } else if (cfg.kind == "gaussian_packet") {
    model = gaussianPacketBuild(cfg.packet);
  } else if (cfg.kind == "speed_c_four_waves") {
    const auto c = speedCCoefficients(cfg.event, cfg.target, cfg.waveNumber, cfg.mass);
    model = std::make_shared<const Superposition>(fourWaves(cfg.waveNumber, cfg.mass, c), cfg.mass);
  } else {
    throw Error(ErrorCode::Config, "unknown model kind " + cfg.kind);
  }
  if (cfg.perturbation) {
    const auto& p = *cfg.perturbation;
    model = perturbedModel(model, {p.amplitude, 1, p.seed, p.waveNumber}, p.trial);
  }
  return model;
}

void overrideSeed(ScenarioConfig& cfg, std::uint64_t seed) {
  if (cfg.ensemble)
    cfg.ensemble->region.seed = seed;
  if (cfg.perturb)
    cfg.perturb->seed = seed;
}

void overrideThreads(ScenarioConfig& cfg, unsigned threads) {
  if (cfg.ensemble)
    cfg.ensemble->sampling.threads = threads;
  if (cfg.sigma)
    cfg.sigma->options.threads = threads;
}

std::string scenarioHash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string dumpJson(const json& j) { return j.dump(2) + "\n"; }

namespace {

void writeText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::Internal, "cannot write " + path.string());
  out << text;
}

void ensureDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorCode::Internal, "cannot create output directory " + dir.string());
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json vecJson(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string indexedName(const char* stem, std::size_t i, const char* ext) {
  std::ostringstream os;
  os << stem << '_' << std::setw(3) << std::setfill('0') << i << ext;
  return os.str();
}

} // namespace

json eventsJson(const Trajectory& traj) {
  json events = json::array();
  for (const auto& e : traj.events())
    events.push_back({{"kind", toString(e.kind)}, {"t_start", e.tStart}, {"t_end", e.tEnd}});
  return events;
}

json toJson(const Trajectory& traj, bool includeSamples) {
  json j{{"samples", traj.samples().size()},
         {"termination", toString(traj.termination())},
         {"max_speed", traj.maxSpeed()},
         {"t_end", traj.samples().back().t},
         {"q_end", vecJson(traj.samples().back().q)},
         {"events", eventsJson(traj)}};
  if (includeSamples) {
    json s = json::array();
    for (const auto& p : traj.samples())
      s.push_back(json::array({p.t, p.q.x(), p.q.y(), p.q.z(), p.v.x(), p.v.y(), p.v.z(),
                               p.speed, p.sDev, p.density}));
    j["sample_rows"] = s;
  }
  return j;
}

void writeTrajectoryCsv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "t,x,y,z,vx,vy,vz,speed,sdev,density\n";
  for (const auto& s : traj.samples()) {
    os << fmt17(s.t) << ',' << fmt17(s.q.x()) << ',' << fmt17(s.q.y()) << ',' << fmt17(s.q.z())
       << ',' << fmt17(s.v.x()) << ',' << fmt17(s.v.y()) << ',' << fmt17(s.v.z()) << ','
       << fmt17(s.speed) << ',' << fmt17(s.sDev) << ',' << fmt17(s.density) << '\n';
  }
  writeText(path, os.str());
}

json toJson(const TransversalityReport& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({{"t", p.x.t}, {"x", p.x.q.x()}, {"y", p.x.q.y()}, {"z", p.x.q.z()},
                   {"residual", p.residual}, {"margin", p.margin}, {"psi_norm", p.psiNorm},
                   {"rank", p.rank}});
  return {{"verdict", toString(r.verdict)},
          {"min_margin", r.minMargin},
          {"seed_count", r.seedCount},
          {"converged_count", r.convergedCount},
          {"point_count", r.points.size()},
          {"degenerate_grid_fraction", r.degenerateGridFraction},
          {"grid_zero_count", r.gridZeroCount},
          {"points", pts}};
}

void writeSigmaCsv(const TransversalityReport& r, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "t,x,y,z,residual,margin,psi_norm,rank\n";
  for (const auto& p : r.points)
    os << fmt17(p.x.t) << ',' << fmt17(p.x.q.x()) << ',' << fmt17(p.x.q.y()) << ','
       << fmt17(p.x.q.z()) << ',' << fmt17(p.residual) << ',' << fmt17(p.margin) << ','
       << fmt17(p.psiNorm) << ',' << p.rank << '\n';
  writeText(path, os.str());
}

json toJson(const PerturbationStats& s) {
  json trials = json::array();
  for (const auto& t : s.trials) {
    json coeffs = json::array();
    for (const auto& c : t.coefficients)
      coeffs.push_back(json::array({c.real(), c.imag()}));
    trials.push_back({{"verdict", toString(t.verdict)},
                      {"min_margin", t.minMargin},
                      {"points", t.points},
                      {"min_rank", t.minRank},
                      {"max_rank", t.maxRank},
                      {"degenerate_grid_fraction", t.degenerateGridFraction},
                      {"coefficients", coeffs}});
  }
  return {{"amplitude", s.amplitude},
          {"base_verdict", toString(s.baseVerdict)},
          {"base_degenerate_grid_fraction", s.baseDegenerateGridFraction},
          {"transverse_fraction", s.transverseFraction},
          {"mean_degenerate_grid_fraction", s.meanDegenerateGridFraction},
          {"trials", trials}};
}

json runSimulate(const ScenarioConfig& cfg, const std::filesystem::path& outDir) {
  if (!cfg.simulate)
    throw Error(ErrorCode::Config, "config error at /simulate: section required for simulate");
  const auto& sim = *cfg.simulate;
  const ModelPtr model = buildModel(cfg.model);
  ensureDir(outDir);
  json runs = json::array();
  for (std::size_t i = 0; i < sim.positions.size(); ++i) {
    const Vec3& q0 = sim.positions[i];
    Trajectory traj;
    try {
      traj = integrate(model, q0, sim.t1, sim.t2, cfg.integrator);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NearNode)
        throw;
      std::ostringstream os;
      os << "start position " << i << " (" << q0.x() << ", " << q0.y() << ", " << q0.z()
         << ") is at a node: " << e.what();
      throw Error(ErrorCode::NearNode, os.str());
    }
    const std::string csv = indexedName("trajectory", i, ".csv");
    const std::string ev = indexedName("events", i, ".json");
    writeTrajectoryCsv(traj, outDir / csv);
    writeText(outDir / ev, dumpJson(eventsJson(traj)));
    json j = toJson(traj);
    j["q0"] = vecJson(q0);
    j["csv"] = csv;
    j["events_file"] = ev;
    runs.push_back(j);
  }
  json report{{"t1", sim.t1}, {"t2", sim.t2}, {"trajectories", runs}};
  writeText(outDir / "simulate_report.json", dumpJson(report));
  return report;
}

json runEnsemble(const ScenarioConfig& cfg, const std::filesystem::path& outDir) {
  if (!cfg.ensemble)
    throw Error(ErrorCode::Config, "config error at /ensemble: section required for ensemble");
  const auto& e = *cfg.ensemble;
  const ModelPtr model = buildModel(cfg.model);
  ensureDir(outDir);

  SamplingStats stats;
  const std::vector<Vec3> starts = samplePositions(*model, e.t1, e.region, e.sampling, &stats);

  // One shared transport feeds both the speed-c fractions and the
  // equivariance snapshots. Equivariance ignores the integrator domain, so a
  // domain forces separate passes.
  const bool shared = e.equivariance && !cfg.integrator.domain &&
                      std::all_of(e.equivariance->times.begin(), e.equivariance->times.end(),
                                  [&](double t) { return t >= e.t1; });
  std::vector<double> snapshotTimes;
  if (shared)
    snapshotTimes = e.equivariance->times;
  EnsembleTransport transport;
  if (shared)
    transport = transportEnsemble(model, e.t1, e.t2, starts, e.epsilons, snapshotTimes,
                                  cfg.integrator, e.sampling.threads);
  else
    transport.speed = speedCFractionFrom(model, e.t1, e.t2, starts, e.epsilons, cfg.integrator,
                                         e.sampling.threads);
  const SpeedCFractionResult& frac = transport.speed;

  json fractions = json::array();
  for (const auto& f : frac.fractions)
    fractions.push_back({{"epsilon", f.epsilon}, {"fraction", f.fraction}});

  json report{{"n", e.region.n},
              {"seed", e.region.seed},
              {"t1", e.t1},
              {"t2", e.t2},
              {"n_accepted", frac.n - frac.nearNodeCount},
              {"near_node_count", frac.nearNodeCount},
              {"max_speed", frac.maxSpeed},
              {"speed_c_fractions", fractions},
              {"sampling", {{"envelope", stats.envelope},
                            {"proposals", stats.proposals},
                            {"envelope_violations", stats.envelopeViolations}}}};

  if (e.equivariance) {
    const auto& eq = *e.equivariance;
    const std::vector<char> none(starts.size(), 0);
    const EquivarianceResult control = equivarianceFromEndpoints(
        *model, e.t1, starts, none, eq.histogram, e.sampling.threads, eq.maxLostFraction);
    json rows = json::array();
    for (std::size_t k = 0; k < eq.times.size(); ++k) {
      const double t = eq.times[k];
      const EquivarianceResult r =
          shared ? equivarianceFromEndpoints(*model, t, transport.snapshots[k].positions,
                                             transport.snapshots[k].lost, eq.histogram,
                                             e.sampling.threads, eq.maxLostFraction)
                 : equivarianceDistance(model, starts, e.t1, t, eq.histogram, cfg.integrator,
                                        e.sampling.threads, eq.maxLostFraction);
      rows.push_back({{"t", t},
                      {"distance", r.distance},
                      {"control", control.distance},
                      {"excluded_fraction", r.excludedFraction},
                      {"n_used", r.nUsed},
                      {"n_near_node", r.nNearNode},
                      {"n_outside", r.nOutside}});
    }
    report["equivariance"] = rows;
  }

  if (e.dumpTrajectories) {
    std::ostringstream os;
    os << "index,x0,y0,z0,max_speed\n";
    for (std::size_t i = 0; i < starts.size(); ++i)
      os << i << ',' << fmt17(starts[i].x()) << ',' << fmt17(starts[i].y()) << ','
         << fmt17(starts[i].z()) << ',' << fmt17(frac.trajectoryMaxSpeeds[i]) << '\n';
    writeText(outDir / "ensemble_trajectories.csv", os.str());
  }
  writeText(outDir / "ensemble_report.json", dumpJson(report));
  return report;
}

json runSigma(const ScenarioConfig& cfg, const std::filesystem::path& outDir) {
  if (!cfg.sigma)
    throw Error(ErrorCode::Config, "config error at /sigma: section required for sigma");
  const ModelPtr model = buildModel(cfg.model);
  ensureDir(outDir);
  const TransversalityReport r = transversalityReport(*model, cfg.sigma->box, cfg.sigma->options);
  const json report = toJson(r);
  writeText(outDir / "sigma_report.json", dumpJson(report));
  if (cfg.sigma->pointsCsv)
    writeSigmaCsv(r, outDir / "sigma_points.csv");
  return report;
}

json runPerturb(const ScenarioConfig& cfg, const std::filesystem::path& outDir) {
  if (!cfg.perturb)
    throw Error(ErrorCode::Config, "config error at /perturb: section required for perturb");
  if (!cfg.sigma)
    throw Error(ErrorCode::Config, "config error at /sigma: perturb needs the sigma box");
  const ModelPtr model = buildModel(cfg.model);
  ensureDir(outDir);
  const PerturbationStats st =
      perturbAndCompare(model, *cfg.perturb, cfg.sigma->box, cfg.sigma->options);
  const json report = toJson(st);
  writeText(outDir / "perturb_report.json", dumpJson(report));
  return report;
}

json runSubcommand(const std::string& subcommand, const ScenarioConfig& cfg,
                   const std::filesystem::path& outDir) {
  const auto start = std::chrono::steady_clock::now();
  json result;
  if (subcommand == "simulate")
    result = runSimulate(cfg, outDir);
  else if (subcommand == "ensemble")
    result = runEnsemble(cfg, outDir);
  else if (subcommand == "sigma")
    result = runSigma(cfg, outDir);
  else if (subcommand == "perturb")
    result = runPerturb(cfg, outDir);
  else
    throw Error(ErrorCode::InvalidArgument, "unknown subcommand " + subcommand);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json summary{{"scenario_hash", scenarioHash(cfg.sourceText)},
               {"version", kVersion},
               {"subcommand", subcommand},
               {"result", result},
               {"timing", {{"wall_seconds", wall}, {"timestamp", stamp}}}};
  writeText(outDir / "summary.json", dumpJson(summary));
  return summary;
}

} // namespace bohm
