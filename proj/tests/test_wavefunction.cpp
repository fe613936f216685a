#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "testing.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "bohm/error.hpp"
#include "bohm/quadrature.hpp"
#include "bohm/wavefunction.hpp"
#include "support.hpp"

using namespace bohm;

namespace {

// Same spinor as a plane wave but with the time phase flipped; not a solution.
class WrongSignWave final : public WaveFunctionModel {
public:
  explicit WrongSignWave(PlaneWaveSpec s) : s_(s) {}
  Spinor evaluate(const SpacetimePoint& x) const override {
    const double e = planeWaveEnergy(s_.k, s_.mass);
    return std::polar(1.0, -e * x.t + s_.k.dot(x.q)) * planeWaveSpinor(s_.k, s_.branch, s_.mass);
  }
  ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const override {
    const double e = planeWaveEnergy(s_.k, s_.mass);
    ValueAndGradient out;
    out.value = evaluate(x);
    const cplx i(0.0, 1.0);
    out.gradient = {-i * e * out.value, i * s_.k.x() * out.value, i * s_.k.y() * out.value,
                    i * s_.k.z() * out.value};
    return out;
  }
  double mass() const override { return s_.mass; }

private:
  PlaneWaveSpec s_;
};

std::vector<PlaneWaveSpec> randomWaves(std::mt19937_64& rng, int n, double mass) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<PlaneWaveSpec> out;
  for (int i = 0; i < n; ++i)
    out.push_back({Vec3(g(rng), g(rng), g(rng)), 1 + i % 2, cplx(g(rng), g(rng)), mass});
  return out;
}

double relGradError(const WaveFunctionModel& m, const SpacetimePoint& x) {
  const SpinorGradient a = m.gradient(x);
  const SpinorGradient fd = test::finiteDifference(m, x);
  double num = 0.0, den = 0.0;
  for (std::size_t mu = 0; mu < 4; ++mu) {
    num = std::max(num, (a[mu] - fd[mu]).norm());
    den = std::max(den, a[mu].norm());
  }
  return num / std::max(den, 1e-300);
}

} // namespace

TEST_CASE("gauss-legendre rules integrate polynomials exactly") {
  for (int n : {1, 2, 5, 9, 16}) {
    const auto r = gaussLegendre(n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        s += r.weights[static_cast<std::size_t>(i)] * std::pow(r.nodes[static_cast<std::size_t>(i)], p);
      const double exact = p % 2 ? 0.0 : 2.0 / (p + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
  CHECK_THROWS_AS(gaussLegendre(0), Error);
}

TEST_CASE("plane wave spinor shape along z") {
  const double m = 1.0, k = 1.5;
  const double e = std::sqrt(m * m + k * k);
  const double ap = std::sqrt(1 + m / e), am = std::sqrt(1 - m / e);
  const Spinor u = planeWaveEvaluate({Vec3(0, 0, k), 1, 1.0, m}, {0.7, Vec3(0.1, 0.2, 0.3)});
  // proportional to (a-, 0, -a+, 0)
  const cplx phase = u[0] / am;
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-14);
  CHECK((u - phase * Spinor(am, 0, -ap, 0)).norm() < 1e-14);
}

TEST_CASE("massless plane waves are lightlike everywhere") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) {
    const PlaneWaveSpec s{test::randomUnit(rng) * 2.0, 1 + i % 2, 1.0, 0.0};
    const Spinor u = planeWaveSpinor(s.k, s.branch, 0.0);
    CHECK(std::abs(u.squaredNorm() - 2.0) < 1e-14);
    CHECK(sDeviation(planeWaveEvaluate(s, test::randomPoint(rng))) < 1e-12);
  }
}

TEST_CASE("massive plane wave velocity is k/E in magnitude, along -k") {
  const Spinor u = planeWaveEvaluate({Vec3(0, 0, 1), 1, 1.0, 1.0}, {});
  const Vec3 v = bohmVelocity(u);
  CHECK(v.norm() == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(std::abs(v.x()) < 1e-15);
  CHECK(std::abs(v.y()) < 1e-15);
  CHECK(v.z() < 0.0);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Vec3 k = test::randomUnit(rng) * 0.8;
    for (int b : {1, 2}) {
      const Vec3 w = bohmVelocity(planeWaveSpinor(k, b, 1.0));
      CHECK((w + k / planeWaveEnergy(k, 1.0)).norm() < 1e-14);
    }
  }
}

TEST_CASE("plane wave errors") {
  CHECK_THROWS_AS(planeWaveSpinor(Vec3::Zero(), 1, 1.0), Error);
  try {
    planeWaveEvaluate({Vec3::Zero(), 1, 1.0, 1.0}, {});
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::ZeroWaveVector));
  }
  CHECK_THROWS_AS(planeWaveSpinor(Vec3::UnitX(), 3, 1.0), Error);
  CHECK_THROWS_AS(planeWaveSpinor(Vec3::UnitX(), 1, -1.0), Error);
}

TEST_CASE("superposition basics") {
  const SpacetimePoint x{0.4, Vec3(1, -2, 0.5)};
  CHECK(superpositionEvaluate({}, x).norm() == 0.0);
  const PlaneWaveSpec s{Vec3(0.3, 0.1, -0.7), 2, cplx(0.5, 1.0), 1.0};
  CHECK((superpositionEvaluate(std::vector{s}, x) - planeWaveEvaluate(s, x)).norm() < 1e-15);
  const Superposition empty({}, 2.0);
  CHECK(empty.mass() == 2.0);
  CHECK(empty.evaluate(x).norm() == 0.0);
  try {
    Superposition bad({s, PlaneWaveSpec{Vec3(1, 0, 0), 1, 1.0, 2.0}}, 1.0);
    FAIL("expected MixedMass");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::MixedMass));
  }
}

TEST_CASE("circular example values and current") {
  const double w = 1.3;
  const cplx i(0.0, 1.0);
  CHECK((circularExampleEvaluate(w, {0.0, Vec3(5, 6, 7)}) - Spinor(1, 1, 1, -1)).norm() < 1e-15);
  const Spinor quarter = circularExampleEvaluate(w, {std::numbers::pi / (2 * w), Vec3::Zero()});
  CHECK((quarter - Spinor(-i, -i, i, -i)).norm() < 1e-15);
  auto j = current(quarter);
  CHECK(j.t == doctest::Approx(4.0));
  CHECK((j.space - Vec3(0, 0, -4)).norm() < 1e-14);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int k = 0; k < 1000; ++k) {
    const double t = u(rng);
    j = current(circularExampleEvaluate(w, {t, Vec3(u(rng), u(rng), u(rng))}));
    CHECK(std::abs(j.t - 4.0) < 1e-12);
    CHECK((j.space - 4.0 * Vec3(0, -std::sin(2 * w * t), std::cos(2 * w * t))).norm() < 1e-12);
  }
  CHECK_THROWS_AS(CircularExample(0.0), Error);
}

TEST_CASE("dirac residual vanishes for bundled models") {
  std::mt19937_64 rng(12);
  const CircularExample circ(0.8);
  const Superposition waves(randomWaves(rng, 7, 1.0), 1.0);
  const Superposition massless(randomWaves(rng, 5, 0.0), 0.0);
  GaussianPacketSpec ps;
  ps.quadrature.nodesPerAxis = 5;
  const auto packet = gaussianPacketBuild(ps);
  for (int i = 0; i < 100; ++i) {
    const auto x = test::randomPoint(rng);
    CHECK(diracResidual(circ, x) < 1e-10);
    CHECK(diracResidual(waves, x) < 1e-10);
    CHECK(diracResidual(massless, x) < 1e-10);
    CHECK(diracResidual(*packet, x) < 1e-10);
  }
}

TEST_CASE("wrong-sign time phase fails the residual") {
  const WrongSignWave bad({Vec3(0.2, -0.4, 0.9), 1, 1.0, 1.0});
  std::mt19937_64 rng(3);
  double least = 1e300;
  for (int i = 0; i < 20; ++i)
    least = std::min(least, diracResidual(bad, test::randomPoint(rng)));
  CHECK(least > 0.1);
}

TEST_CASE("analytic gradients match finite differences") {
  std::mt19937_64 rng(31);
  const CircularExample circ(1.1);
  const Superposition waves(randomWaves(rng, 6, 1.0), 1.0);
  GaussianPacketSpec ps;
  ps.quadrature.nodesPerAxis = 5;
  const auto packet = gaussianPacketBuild(ps);
  const auto circPtr = std::make_shared<const CircularExample>(1.1);
  const SumModel sum({circPtr, std::make_shared<const Superposition>(randomWaves(rng, 3, 1.1), 1.1)});
  const ScaledModel scaled(circPtr, cplx(0.0, -2.5));
  const std::vector<const WaveFunctionModel*> models{&circ, &waves, packet.get(), &sum, &scaled};
  for (const auto* m : models)
    for (int i = 0; i < 100; ++i)
      CHECK(relGradError(*m, test::randomPoint(rng, 2.0)) < 1e-6);
}

TEST_CASE("sum and scaled models") {
  const auto a = std::make_shared<const CircularExample>(1.0);
  const auto b = std::make_shared<const Superposition>(
      std::vector<PlaneWaveSpec>{{Vec3(0, 0, 1), 1, 1.0, 1.0}}, 1.0);
  const SumModel s({a, b});
  const ScaledModel sc(a, cplx(2.0, 1.0));
  const SpacetimePoint x{0.3, Vec3(1, 2, 3)};
  CHECK((s.evaluate(x) - a->evaluate(x) - b->evaluate(x)).norm() < 1e-15);
  CHECK((sc.evaluate(x) - cplx(2.0, 1.0) * a->evaluate(x)).norm() < 1e-15);
  const auto c = std::make_shared<const CircularExample>(2.0);
  CHECK_THROWS_AS(SumModel({a, c}), Error);
}

TEST_CASE("packet agrees with the equivalent generic superposition") {
  GaussianPacketSpec ps;
  ps.centerK = Vec3(0.3, -0.2, 1.0);
  ps.widthK = 0.3;
  ps.quadrature.nodesPerAxis = 6;
  ps.quadrature.radius = 0.9;
  const auto packet = gaussianPacketBuild(ps);
  CHECK(packet->size() == 216);
  const Superposition generic(packet->specs(), 1.0);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    const auto x = test::randomPoint(rng, 4.0);
    const Spinor a = packet->evaluate(x);
    CHECK((a - generic.evaluate(x)).norm() < 1e-13 * std::max(1.0, a.norm()));
    const auto ga = packet->evaluateWithGradient(x);
    const auto gb = generic.evaluateWithGradient(x);
    for (std::size_t mu = 0; mu < 4; ++mu)
      CHECK((ga.gradient[mu] - gb.gradient[mu]).norm() < 1e-12);
  }
  CHECK(normSquared(packet->evaluate({})) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("single-node packet is a single plane wave") {
  GaussianPacketSpec ps;
  ps.centerK = Vec3(0.1, 0.2, 0.9);
  ps.widthK = 1e-3;
  ps.quadrature.nodesPerAxis = 1;
  const auto packet = gaussianPacketBuild(ps);
  REQUIRE(packet->size() == 1);
  std::mt19937_64 rng(9);
  const Spinor ref0 = planeWaveEvaluate({ps.centerK, 1, 1.0, 1.0}, {});
  for (int i = 0; i < 10; ++i) {
    const auto x = test::randomPoint(rng);
    const Spinor expect = planeWaveEvaluate({ps.centerK, 1, 1.0, 1.0}, x) / ref0.norm();
    CHECK((packet->evaluate(x) - expect).norm() < 1e-14);
  }
}

TEST_CASE("packet is subluminal at its center and converged in the quadrature") {
  GaussianPacketSpec ps;  // k = (0,0,1), width 0.2
  ps.quadrature.nodesPerAxis = 9;
  const auto coarse = gaussianPacketBuild(ps);
  ps.quadrature.nodesPerAxis = 17;
  const auto fine = gaussianPacketBuild(ps);
  const double vc = bohmVelocity(coarse->evaluate({})).norm();
  const double vf = bohmVelocity(fine->evaluate({})).norm();
  CHECK(vc < 1.0 - 1e-6);
  CHECK(vf < 1.0 - 1e-6);
  CHECK(std::abs(vc - vf) < 1e-3);
}

TEST_CASE("doubling the quadrature nodes changes values by under 1e-6") {
  GaussianPacketSpec ps;
  ps.quadrature.nodesPerAxis = 16;
  const auto a = gaussianPacketBuild(ps);
  ps.quadrature.nodesPerAxis = 32;
  const auto b = gaussianPacketBuild(ps);
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    // points in the packet core: |q| up to 1/width, |t| up to 1
    const SpacetimePoint x{u(rng), 5.0 * Vec3(u(rng), u(rng), u(rng)) / std::sqrt(3.0)};
    const Spinor va = a->evaluate(x), vb = b->evaluate(x);
    CHECK((va - vb).norm() < 1e-6 * vb.norm());
  }
}

TEST_CASE("packet construction errors") {
  GaussianPacketSpec ps;
  ps.centerK = Vec3::Zero();
  ps.quadrature.nodesPerAxis = 3;  // the middle node sits on k = 0
  try {
    gaussianPacketBuild(ps);
    FAIL("expected NodeAtOrigin");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::NodeAtOrigin));
  }
  ps.centerK = Vec3::UnitZ();
  ps.widthK = 0.0;
  CHECK_THROWS_AS(gaussianPacketBuild(ps), Error);
  ps.widthK = 0.2;
  ps.quadrature.nodesPerAxis = 200;
  CHECK_THROWS_AS(gaussianPacketBuild(ps), Error);  // over the node cap
}

TEST_CASE("four-wave values are independent") {
  std::mt19937_64 rng(14);
  double minSigma = 1e300;
  for (int i = 0; i < 100; ++i) {
    const Mat4c m = fourWaveMatrix(1.0, 1.0, test::randomPoint(rng, 10.0));
    minSigma = std::min(minSigma, Eigen::JacobiSVD<Mat4c>(m).singularValues()[3]);
  }
  CHECK(minSigma > 0.1);
}

TEST_CASE("speed-c coefficients reproduce the target") {
  const Spinor target(1, 0, 1, 0);
  const auto c0 = speedCCoefficients({}, target, 1.0, 1.0);
  const Superposition m0(fourWaves(1.0, 1.0, c0), 1.0);
  CHECK((m0.evaluate({}) - target).norm() < 1e-10);
  CHECK(sDeviation(m0.evaluate({})) < 1e-10);
  CHECK(bohmVelocity(m0.evaluate({})).isApprox(Vec3(0, 0, 1), 1e-10));

  const SpacetimePoint shifted{0.5, Vec3(0.3, -1.0, 2.0)};
  const auto c1 = speedCCoefficients(shifted, target, 1.0, 1.0);
  const Superposition m1(fourWaves(1.0, 1.0, c1), 1.0);
  CHECK((m1.evaluate(shifted) - target).norm() < 1e-10);
  double diff = 0.0;
  for (int j = 0; j < 4; ++j)
    diff += std::abs(c0[static_cast<std::size_t>(j)] - c1[static_cast<std::size_t>(j)]);
  CHECK(diff > 1e-3);

  CHECK_THROWS_AS(speedCCoefficients({}, Spinor(1, 0, 0, 0), 1.0, 1.0), Error);
}
