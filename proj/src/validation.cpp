#include "bohm/validation.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "bohm/dynamics.hpp"
#include "bohm/ensemble.hpp"
#include "bohm/error.hpp"
#include "bohm/wavefunction.hpp"

namespace bohm {

bool ValidationReport::allPassed() const {
  for (const auto& c : checks)
    if (!c.passed)
      return false;
  return !checks.empty();
}

nlohmann::json ValidationReport::toJson() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return {{"all_passed", allPassed()}, {"checks", arr}};
}

namespace {

struct Sweep {
  std::mt19937_64 rng;
  std::normal_distribution<double> normal{0.0, 1.0};

  Spinor spinor() {
    Spinor s;
    for (int i = 0; i < 4; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      s(i) = cplx(re, im);
    }
    return s;
  }
  Direction direction() {
    for (;;) {
      const double x = normal(rng), y = normal(rng), z = normal(rng);
      const Vec3 v(x, y, z);
      if (v.norm() > 1e-6)
        return Direction::normalized(v);
    }
  }
};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

// The check body returns (passed, detail); exceptions count as failure.
void run(ValidationReport& report, const std::string& name,
         const std::function<std::pair<bool, std::string>()>& body) {
  ValidationCheck c{name, false, ""};
  try {
    std::tie(c.passed, c.detail) = body();
  } catch (const std::exception& e) {
    c.passed = false;
    c.detail = std::string("exception: ") + e.what();
  }
  report.checks.push_back(std::move(c));
}

double fdGradientError(const WaveFunctionModel& model, const SpacetimePoint& x, double h) {
  const SpinorGradient g = model.gradient(x);
  double worst = 0.0;
  for (int mu = 0; mu < 4; ++mu) {
    SpacetimePoint a = x, b = x;
    if (mu == 0) {
      a.t += h;
      b.t -= h;
    } else {
      a.q[mu - 1] += h;
      b.q[mu - 1] -= h;
    }
    const Spinor fd = (model.evaluate(a) - model.evaluate(b)) / (2.0 * h);
    const double scale = std::max(g[static_cast<std::size_t>(mu)].norm(), model.evaluate(x).norm());
    worst = std::max(worst, (fd - g[static_cast<std::size_t>(mu)]).norm() / scale);
  }
  return worst;
}

} // namespace

ValidationReport runValidation(const DiracAlgebra& alg, std::uint64_t seed, unsigned threads) {
  ValidationReport report;
  const Mat4c id = Mat4c::Identity();

  run(report, "alpha anticommutation", [&] {
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const auto& a = alg.alpha[static_cast<std::size_t>(i)];
        const auto& b = alg.alpha[static_cast<std::size_t>(j)];
        worst = std::max(worst, (a * b + b * a - 2.0 * (i == j ? 1.0 : 0.0) * id).norm());
      }
    return std::pair{worst < 1e-14, "max deviation " + fmt(worst)};
  });

  run(report, "gamma5 squares to I and anticommutes with gamma0", [&] {
    const double sq = (alg.gamma5 * alg.gamma5 - id).norm();
    const double ac = (alg.gamma0 * alg.gamma5 + alg.gamma5 * alg.gamma0).norm();
    return std::pair{sq < 1e-14 && ac < 1e-14, "|g5^2 - I| " + fmt(sq) + ", |{g0,g5}| " + fmt(ac)};
  });

  run(report, "current identity j.j = s^2 + p^2 (1e5 spinors)", [&] {
    Sweep sw{substream(seed, 1)};
    double worst = 0.0;
    for (int n = 0; n < 100000; ++n) {
      const Spinor psi = sw.spinor();
      const FourVector j = alg.current(psi);
      const LorentzInvariants li = alg.invariants(psi);
      const double rho2 = psi.squaredNorm() * psi.squaredNorm();
      worst = std::max(worst, std::abs(j.minkowskiNormSquared() -
                                       (li.scalar * li.scalar + li.pseudoscalar * li.pseudoscalar)) /
                                  rho2);
    }
    return std::pair{worst < 1e-10, "max relative deviation " + fmt(worst)};
  });

  run(report, "causal current and speed bound (1e5 spinors)", [&] {
    Sweep sw{substream(seed, 2)};
    double minNorm = 1.0, maxSpeed = 0.0;
    bool positive = true;
    for (int n = 0; n < 100000; ++n) {
      const Spinor psi = sw.spinor();
      const FourVector j = alg.current(psi);
      const double rho = psi.squaredNorm();
      minNorm = std::min(minNorm, j.minkowskiNormSquared() / (rho * rho));
      maxSpeed = std::max(maxSpeed, j.space.norm() / j.t);
      positive = positive && j.t >= 0.0;
    }
    return std::pair{positive && minNorm >= -1e-12 && maxSpeed <= 1.0 + 1e-12,
                     "min j.j/rho^2 " + fmt(minNorm) + ", max speed " + fmt(maxSpeed)};
  });

  run(report, "eigenspace velocity (100 directions)", [&] {
    Sweep sw{substream(seed, 3)};
    double worstV = 0.0, worstS = 0.0;
    for (int n = 0; n < 100; ++n) {
      const Direction w = sw.direction();
      const Spinor psi = eigenProjector(w, +1) * sw.spinor();
      const FourVector j = alg.current(psi);
      worstV = std::max(worstV, (j.space / j.t - w.vec()).norm());
      const LorentzInvariants li = alg.invariants(psi);
      worstS = std::max(worstS, std::hypot(li.scalar, li.pseudoscalar) / psi.squaredNorm());
    }
    return std::pair{worstV < 1e-10 && worstS < 1e-10,
                     "velocity error " + fmt(worstV) + ", sDeviation " + fmt(worstS)};
  });

  run(report, "dF surjective on S (1e4 points)", [&] {
    Sweep sw{substream(seed, 4)};
    const Mat4c ms = alg.scalarMatrix(), mp = alg.pseudoscalarMatrix();
    double minSigma = 1e300;
    for (int n = 0; n < 10000; ++n) {
      Spinor psi = eigenProjector(sw.direction(), +1) * sw.spinor();
      psi /= psi.norm();
      // Real 2x8 Jacobian of psi -> (psi^dag M psi) over (Re, Im) coordinates.
      Eigen::Matrix<double, 2, 8> jac;
      for (int c = 0; c < 4; ++c) {
        Spinor e = Spinor::Zero();
        e(c) = 1.0;
        for (int part = 0; part < 2; ++part) {
          const Spinor d = part == 0 ? e : Spinor(cplx(0, 1) * e);
          jac(0, 2 * c + part) = 2.0 * psi.dot(ms * d).real();
          jac(1, 2 * c + part) = 2.0 * psi.dot(mp * d).real();
        }
      }
      Eigen::JacobiSVD<Eigen::Matrix<double, 2, 8>> svd(jac);
      minSigma = std::min(minSigma, svd.singularValues()(1));
    }
    return std::pair{minSigma > 1e-6, "min sigma_2 " + fmt(minSigma)};
  });

  run(report, "Dirac residual of bundled models", [&] {
    Sweep sw{substream(seed, 5)};
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
      const SpacetimePoint x{u(sw.rng), Vec3(u(sw.rng), u(sw.rng), u(sw.rng))};
      const Vec3 k(u(sw.rng), u(sw.rng), u(sw.rng));
      const double m = 0.5 + 0.1 * std::abs(u(sw.rng));
      const Superposition wave({{k, 1 + n % 2, cplx(1.0, 0.5), m}}, m);
      worst = std::max(worst, diracResidual(wave, x));
      worst = std::max(worst, diracResidual(CircularExample(m), x));
    }
    return std::pair{worst < 1e-10, "max residual " + fmt(worst)};
  });

  run(report, "analytic gradients match finite differences", [&] {
    Sweep sw{substream(seed, 6)};
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const std::array<cplx, 4> c{cplx(1, 0.2), cplx(-0.3, 0.7), cplx(0.5, -0.1), cplx(0.2, 0.9)};
    const Superposition four(fourWaves(1.3, 1.0, c), 1.0);
    const CircularExample circ(1.0);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
      const SpacetimePoint x{u(sw.rng), Vec3(u(sw.rng), u(sw.rng), u(sw.rng))};
      worst = std::max({worst, fdGradientError(four, x, 1e-4), fdGradientError(circ, x, 1e-4)});
    }
    return std::pair{worst < 1e-6, "max relative error " + fmt(worst)};
  });

  run(report, "four-wave values linearly independent (100 events)", [&] {
    Sweep sw{substream(seed, 7)};
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    double minSv = 1e300;
    for (int n = 0; n < 100; ++n) {
      const SpacetimePoint x{u(sw.rng), Vec3(u(sw.rng), u(sw.rng), u(sw.rng))};
      Eigen::JacobiSVD<Mat4c> svd(fourWaveMatrix(1.0, 1.0, x));
      minSv = std::min(minSv, svd.singularValues()(3));
    }
    return std::pair{minSv > 1e-8, "min singular value " + fmt(minSv)};
  });

  run(report, "circular trajectory stays on its circle", [&] {
    const ModelPtr circ = std::make_shared<const CircularExample>(1.0);
    const Trajectory traj = integrate(circ, Vec3(0.0, 0.5, 0.0), 0.0, 2.0 * M_PI);
    double radial = 0.0, speed = 0.0;
    for (const auto& s : traj.samples()) {
      radial = std::max(radial, std::abs(std::hypot(s.q.y(), s.q.z()) - 0.5));
      speed = std::max(speed, std::abs(s.speed - 1.0));
    }
    return std::pair{radial < 1e-6 && speed < 1e-9,
                     "radial deviation " + fmt(radial) + ", |speed - 1| " + fmt(speed)};
  });

  run(report, "trajectory invariant under psi -> lambda psi", [&] {
    const std::array<cplx, 4> c{cplx(1, 0), cplx(0.3, 0.2), cplx(-0.4, 0.1), cplx(0.2, -0.6)};
    const ModelPtr base = std::make_shared<const Superposition>(fourWaves(1.0, 1.0, c), 1.0);
    const ModelPtr scaled = std::make_shared<const ScaledModel>(base, cplx(-3.0, 2.0));
    IntegratorOptions o;
    o.fixedStepRk4 = true;
    o.fixedStep = 1e-2;
    const Trajectory a = integrate(base, Vec3(0.1, 0.2, 0.3), 0.0, 2.0, o);
    const Trajectory b = integrate(scaled, Vec3(0.1, 0.2, 0.3), 0.0, 2.0, o);
    double worst = a.samples().size() == b.samples().size() ? 0.0 : 1.0;
    for (std::size_t i = 0; i < std::min(a.samples().size(), b.samples().size()); ++i)
      worst = std::max(worst, (a.samples()[i].q - b.samples()[i].q).norm());
    return std::pair{worst < 1e-10, "max sample difference " + fmt(worst)};
  });

  run(report, "sampling is seed-deterministic", [&] {
    const CircularExample circ(1.0);
    SamplingRegion region{{Vec3::Constant(-1.0), Vec3::Constant(1.0)}, 200, seed};
    SamplingOptions so;
    so.scanResolution = 8;
    so.threads = threads;
    const auto a = samplePositions(circ, 0.0, region, so);
    so.threads = 1;
    const auto b = samplePositions(circ, 0.0, region, so);
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
      same = a[i] == b[i];
    return std::pair{same, same ? "identical" : "sample sets differ"};
  });

  return report;
}

} // namespace bohm
