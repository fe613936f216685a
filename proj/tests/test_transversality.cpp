#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "testing.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "bohm/error.hpp"
#include "bohm/transversality.hpp"
#include "support.hpp"

using namespace bohm;

namespace {

constexpr double kPi = std::numbers::pi;

CompactBox piBox(int res) {
  CompactBox b;
  b.t1 = 0.0;
  b.t2 = kPi;
  b.lo = Vec3::Constant(-kPi);
  b.hi = Vec3::Constant(kPi);
  b.resolution = {res, res, res, res};
  return b;
}

ModelPtr circular() { return std::make_shared<const CircularExample>(1.0); }

ModelPtr massivePlaneWave() {
  return std::make_shared<const Superposition>(
      std::vector<PlaneWaveSpec>{{Vec3(0, 0, 1), 1, 1.0, 1.0}}, 1.0);
}

ModelPtr perturbedCircular(int trial) {
  PerturbationSpec spec;
  return perturbedModel(circular(), spec, trial);
}

ConstraintJacobian finiteDifferenceJacobian(const WaveFunctionModel& m, const SpacetimePoint& x,
                                            double h = 1e-5) {
  ConstraintJacobian j;
  for (int mu = 0; mu < 4; ++mu) {
    SpacetimePoint a = x, b = x;
    if (mu == 0) {
      a.t += h;
      b.t -= h;
    } else {
      a.q[mu - 1] += h;
      b.q[mu - 1] -= h;
    }
    const auto fa = constraintValue(m, a), fb = constraintValue(m, b);
    j(0, mu) = (fa[0] - fb[0]) / (2 * h);
    j(1, mu) = (fa[1] - fb[1]) / (2 * h);
  }
  return j;
}

} // namespace

TEST_CASE("constraint values on the reference models") {
  std::mt19937_64 rng(1);
  const auto circ = circular();
  const auto pw = massivePlaneWave();
  const Spinor u = pw->evaluate({});
  const double jj = current(u).minkowskiNormSquared();
  REQUIRE(jj > 0.0);
  for (int i = 0; i < 100; ++i) {
    const auto x = test::randomPoint(rng, 5.0);
    const auto fc = constraintValue(*circ, x);
    CHECK(std::hypot(fc[0], fc[1]) < 1e-14);
    const auto fp = constraintValue(*pw, x);
    CHECK(fp[0] * fp[0] + fp[1] * fp[1] == doctest::Approx(jj).epsilon(1e-12));
  }
  const Superposition zero({}, 1.0);
  try {
    constraintValue(zero, {});
    FAIL("expected ZeroSpinor");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::ZeroSpinor));
  }
}

TEST_CASE("speed-c data built at an event lies on the constraint set there") {
  const SpacetimePoint x{0.4, Vec3(1.0, -0.5, 2.0)};
  const auto c = speedCCoefficients(x, Spinor(1, 0, 1, 0), 1.0, 1.0);
  const Superposition m(fourWaves(1.0, 1.0, c), 1.0);
  const auto f = constraintValue(m, x);
  CHECK(std::hypot(f[0], f[1]) < 1e-10);
}

TEST_CASE("constraint jacobian vanishes where the constraint is constant") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto x = test::randomPoint(rng);
    CHECK(constraintJacobian(*circular(), x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(constraintJacobian(*massivePlaneWave(), x).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("constraint jacobian matches finite differences") {
  SUBCASE("at located points of a perturbed model") {
    const auto m = perturbedCircular(1);
    const auto found = locateSigma(*m, piBox(9));
    REQUIRE(found.points.size() >= 10);
    for (std::size_t i = 0; i < std::min<std::size_t>(found.points.size(), 50); ++i) {
      const auto& x = found.points[i].x;
      const ConstraintJacobian a = constraintJacobian(*m, x);
      CHECK((a - finiteDifferenceJacobian(*m, x)).norm() < 1e-6 * a.norm());
    }
  }
  SUBCASE("at random points of a random four-wave sum") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::array<cplx, 4> c;
    for (auto& ci : c)
      ci = cplx(g(rng), g(rng));
    const Superposition m(fourWaves(1.0, 1.0, c), 1.0);
    for (int i = 0; i < 100; ++i) {
      const auto x = test::randomPoint(rng);
      const ConstraintJacobian a = constraintJacobian(m, x);
      CHECK((a - finiteDifferenceJacobian(m, x)).norm() < 1e-6 * a.norm());
    }
  }
}

TEST_CASE("the four-wave family alone only depends on z - x") {
  // all cross terms carry exp(i (z - x)), so d/dt = 0 and d/dx = -d/dz
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(0.0, 1.0);
  std::array<cplx, 4> c;
  for (auto& ci : c)
    ci = cplx(g(rng), g(rng));
  const Superposition m(fourWaves(1.0, 1.0, c), 1.0);
  for (int i = 0; i < 20; ++i) {
    const ConstraintJacobian j = constraintJacobian(m, test::randomPoint(rng));
    CHECK(j.col(0).norm() < 1e-12 * j.norm());
    CHECK(j.col(2).norm() < 1e-12 * j.norm());
    CHECK((j.col(1) + j.col(3)).norm() < 1e-12 * j.norm());
  }
}

TEST_CASE("massive plane wave has no Sigma points") {
  const auto r = transversalityReport(*massivePlaneWave(), piBox(9));
  CHECK(r.points.empty());
  CHECK(r.verdict == Verdict::Empty);
  CHECK(r.minMargin == 0.0);
}

TEST_CASE("circular example is degenerate") {
  const auto r = transversalityReport(*circular(), piBox(9));
  CHECK(r.verdict == Verdict::Degenerate);
  CHECK(r.degenerateGridFraction > 0.01);
  CHECK(r.convergedCount == r.seedCount);
}

TEST_CASE("perturbed circular example has a transverse codimension-2 Sigma") {
  const auto m = perturbedCircular(0);
  const CompactBox box = piBox(11);
  const SigmaOptions o;
  const auto r = transversalityReport(*m, box, o);
  CHECK(r.verdict == Verdict::TransverseCodim2);
  REQUIRE(!r.points.empty());
  CHECK(r.minMargin > o.marginTol);
  for (const auto& p : r.points) {
    CHECK(p.rank == 2);
    CHECK(p.residual < o.newtonTol);
    CHECK(p.psiNorm > o.psiFloor);
    CHECK(p.margin > 0.0);
    CHECK(p.x.t >= box.t1);
    CHECK(p.x.t <= box.t2);
    CHECK((p.x.q.array() >= box.lo.array() - 1e-12).all());
    CHECK((p.x.q.array() <= box.hi.array() + 1e-12).all());
    // the 2x4 Jacobian has a 2-dimensional null space: two nonzero singular values
    const ConstraintJacobian j = constraintJacobian(*m, p.x) / p.psiNorm;
    const Eigen::JacobiSVD<ConstraintJacobian> svd(j, Eigen::ComputeFullV);
    CHECK(svd.singularValues()[1] > o.marginTol);
    const Eigen::Matrix4d v = svd.matrixV();
    CHECK((j * v.col(2)).norm() < 1e-10);
    CHECK((j * v.col(3)).norm() < 1e-10);
  }
}

TEST_CASE("verdicts are invariant under rescaling") {
  const auto base = perturbedCircular(3);
  const ScaledModel scaled(base, cplx(0.0, 40.0));
  const auto a = transversalityReport(*base, piBox(9));
  const auto b = transversalityReport(scaled, piBox(9));
  CHECK(a.verdict == b.verdict);
  CHECK(a.points.size() == b.points.size());
  CHECK(a.minMargin == doctest::Approx(b.minMargin).epsilon(1e-6));
  const ScaledModel tiny(circular(), cplx(1e-3, 0.0));
  CHECK(transversalityReport(tiny, piBox(7)).verdict == Verdict::Degenerate);
}

TEST_CASE("perturbation experiments") {
  PerturbationSpec spec;
  spec.trials = 5;
  SUBCASE("zero amplitude reproduces the base verdict") {
    spec.amplitude = 0.0;
    const auto st = perturbAndCompare(circular(), spec, piBox(7));
    CHECK(st.baseVerdict == Verdict::Degenerate);
    for (const auto& t : st.trials)
      CHECK(t.verdict == Verdict::Degenerate);
  }
  SUBCASE("a massive plane wave stays empty under small perturbations") {
    const auto st = perturbAndCompare(massivePlaneWave(), spec, piBox(7));
    CHECK(st.baseVerdict == Verdict::Empty);
    for (const auto& t : st.trials)
      CHECK(t.verdict == Verdict::Empty);
  }
  SUBCASE("the circular example becomes transverse and the run is reproducible") {
    const auto a = perturbAndCompare(circular(), spec, piBox(9));
    const auto b = perturbAndCompare(circular(), spec, piBox(9));
    CHECK(a.transverseFraction == 1.0);
    REQUIRE(a.trials.size() == b.trials.size());
    for (std::size_t i = 0; i < a.trials.size(); ++i) {
      CHECK(a.trials[i].coefficients == b.trials[i].coefficients);
      CHECK(a.trials[i].minMargin == b.trials[i].minMargin);
      CHECK(a.trials[i].points == b.trials[i].points);
      CHECK(a.trials[i].minRank == 2);
      CHECK(a.trials[i].maxRank == 2);
      CHECK(std::abs(a.trials[i].coefficients[0]) < 1e-2);
    }
  }
}

TEST_CASE("invalid boxes and options") {
  CompactBox b = piBox(5);
  b.t2 = b.t1;
  CHECK_THROWS_AS(transversalityReport(*circular(), b), Error);
  b = piBox(5);
  b.resolution[2] = 1;
  CHECK_THROWS_AS(transversalityReport(*circular(), b), Error);
  SigmaOptions o;
  o.degenerateFraction = 1.5;
  CHECK_THROWS_AS(transversalityReport(*circular(), piBox(5), o), Error);
  PerturbationSpec p;
  p.amplitude = -1.0;
  CHECK_THROWS_AS(perturbedModel(circular(), p, 0), Error);
}
