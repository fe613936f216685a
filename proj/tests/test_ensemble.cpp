#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "testing.hpp"

#include <algorithm>
#include <cmath>

#include "bohm/ensemble.hpp"
#include "bohm/error.hpp"
#include "bohm/quadrature.hpp"
#include "support.hpp"

using namespace bohm;

namespace {

ModelPtr packet(int nodes = 5) {
  GaussianPacketSpec ps;
  ps.centerK = Vec3(0.2, 0.0, 1.0);
  ps.widthK = 0.3;
  ps.quadrature.nodesPerAxis = nodes;
  ps.quadrature.radius = 0.9;
  return gaussianPacketBuild(ps);
}

ModelPtr planeWave() {
  return std::make_shared<const Superposition>(
      std::vector<PlaneWaveSpec>{{Vec3(0.0, 0.6, 0.8), 1, 1.0, 1.0}}, 1.0);
}

double ksUniform(std::vector<double> x, double lo, double hi) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = (x[i] - lo) / (hi - lo);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

} // namespace

TEST_CASE("substreams are reproducible and distinct") {
  auto a = substream(42, 7), b = substream(42, 7), c = substream(42, 8), d = substream(43, 7);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}

TEST_CASE("constant density samples uniformly") {
  const CircularExample circ(1.0);
  const SamplingRegion region{Box3{Vec3(-1, -2, 0), Vec3(1, 2, 5)}, 4000, 3};
  SamplingStats st;
  const auto pts = samplePositions(circ, 0.7, region, {}, &st);
  REQUIRE(pts.size() == 4000);
  CHECK(st.envelopeViolations == 0);
  CHECK(st.envelope == doctest::Approx(1.2 * 4.0));
  const double crit = 1.63 / std::sqrt(4000.0);
  for (int a = 0; a < 3; ++a) {
    std::vector<double> x;
    for (const auto& p : pts) {
      REQUIRE(region.box.contains(p));
      x.push_back(p[a]);
    }
    CHECK(ksUniform(x, region.box.lo[a], region.box.hi[a]) < crit);
  }
}

TEST_CASE("packet sample mean matches the quadrature mean") {
  const auto m = packet();
  const Box3 box{Vec3::Constant(-9.0), Vec3::Constant(9.0)};
  // reference moments of psi^dag psi over the box
  const auto rule = gaussLegendre(40);
  const Vec3 half = 0.5 * (box.hi - box.lo), mid = 0.5 * (box.hi + box.lo);
  double mass = 0.0;
  Vec3 first = Vec3::Zero(), second = Vec3::Zero();
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    for (std::size_t j = 0; j < rule.nodes.size(); ++j)
      for (std::size_t l = 0; l < rule.nodes.size(); ++l) {
        const Vec3 q = mid + half.cwiseProduct(Vec3(rule.nodes[i], rule.nodes[j], rule.nodes[l]));
        const double w = rule.weights[i] * rule.weights[j] * rule.weights[l] *
                         m->evaluate({0.0, q}).squaredNorm();
        mass += w;
        first += w * q;
        second += w * q.cwiseProduct(q);
      }
  const Vec3 mean = first / mass;
  const Vec3 sd = (second / mass - mean.cwiseProduct(mean)).cwiseSqrt();

  const std::size_t n = 20000;
  const auto pts = samplePositions(*m, 0.0, {box, n, 11});
  Vec3 avg = Vec3::Zero();
  for (const auto& p : pts)
    avg += p;
  avg /= static_cast<double>(n);
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(avg[a] - mean[a]) < 3.0 * sd[a] / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("single sample lies in the region") {
  const Box3 box{Vec3(2, 2, 2), Vec3(3, 3, 3)};
  const auto pts = samplePositions(*packet(), 0.0, {box, 1, 5});
  REQUIRE(pts.size() == 1);
  CHECK(box.contains(pts[0]));
}

TEST_CASE("sampling is deterministic and independent of thread count") {
  const auto m = packet();
  const SamplingRegion region{Box3{Vec3::Constant(-6.0), Vec3::Constant(6.0)}, 300, 77};
  SamplingOptions one, four;
  one.threads = 1;
  four.threads = 4;
  const auto a = samplePositions(*m, 0.0, region, one);
  const auto b = samplePositions(*m, 0.0, region, four);
  const auto c = samplePositions(*m, 0.0, region, one);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i] == c[i]);
  }
  SamplingRegion other = region;
  other.seed = 78;
  CHECK(samplePositions(*m, 0.0, other, one)[0] != a[0]);
}

TEST_CASE("sampling errors") {
  const Superposition zero({}, 1.0);
  try {
    samplePositions(zero, 0.0, {Box3{}, 10, 1});
    FAIL("expected DegenerateDensity");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::DegenerateDensity));
  }
  CHECK_THROWS_AS(samplePositions(*packet(), 0.0, {Box3{}, 0, 1}), Error);
  CHECK_THROWS_AS(samplePositions(*packet(), 0.0, {Box3{Vec3::Zero(), Vec3(1, 0, 1)}, 5, 1}),
                  Error);
  SamplingOptions o;
  o.envelopeFactor = 0.5;
  CHECK_THROWS_AS(samplePositions(*packet(), 0.0, {Box3{}, 5, 1}, o), Error);
}

TEST_CASE("equivariance control and transport for a packet") {
  const auto m = packet(7);
  const Box3 box{Vec3::Constant(-9.0), Vec3::Constant(9.0)};
  const auto pts = samplePositions(*m, 0.0, {box, 20000, 21});
  HistogramSpec h;
  h.box = box;
  h.bins = {10, 10, 10};
  IntegratorOptions o;
  o.relTol = 1e-8;
  o.absTol = 1e-10;
  const auto control = equivarianceDistance(m, pts, 0.0, 0.0, h, o);
  const auto moved = equivarianceDistance(m, pts, 0.0, 1.0, h, o);
  CHECK(control.nUsed + control.nNearNode + control.nOutside == control.nTotal);
  CHECK(moved.nUsed + moved.nNearNode + moved.nOutside == moved.nTotal);
  // n = 2e4 over 1000 bins: both sit at the sampling noise level
  CHECK(control.distance < 0.08);
  CHECK(moved.distance < 2.0 * control.distance);
  CHECK(std::abs(moved.distance - control.distance) < 0.02);
}

TEST_CASE("plane wave transport is a rigid shift") {
  const auto m = planeWave();
  const Vec3 v = velocityField(*m, 0.0, Vec3::Zero());
  const Box3 box{Vec3::Constant(-1.0), Vec3::Constant(1.0)};
  const auto pts = samplePositions(*m, 0.0, {box, 5000, 4});
  HistogramSpec h0, h1;
  h0.box = box;
  h0.bins = {8, 8, 8};
  h1 = h0;
  h1.box = Box3{box.lo + 2.0 * v, box.hi + 2.0 * v};
  const auto control = equivarianceDistance(m, pts, 0.0, 0.0, h0, {});
  const auto moved = equivarianceDistance(m, pts, 0.0, 2.0, h1, {});
  CHECK(moved.nOutside == 0);
  CHECK(std::abs(moved.distance - control.distance) < 1e-3);
}

TEST_CASE("too many lost trajectories is an error") {
  const auto m = planeWave();
  const auto pts = samplePositions(*m, 0.0, {Box3{}, 200, 4});
  HistogramSpec h;
  h.box = Box3{Vec3::Constant(5.0), Vec3::Constant(6.0)};
  try {
    equivarianceDistance(m, pts, 0.0, 1.0, h, {});
    FAIL("expected TooManyLost");
  } catch (const Error& e) {
    CHECK((e.code() == ErrorCode::TooManyLost));
  }
}

TEST_CASE("speed-c fractions") {
  const std::vector<double> eps{0.5, 1e-2, 1e-4, 1e-8};
  SUBCASE("circular example is always at speed c") {
    const auto r = speedCFraction(std::make_shared<const CircularExample>(1.0), 0.0, 2.0,
                                  {Box3{}, 200, 1}, eps, {});
    for (const auto& f : r.fractions)
      CHECK(f.fraction == 1.0);
  }
  SUBCASE("massive plane wave never is") {
    const auto m = planeWave();
    const double v = velocityField(*m, 0.0, Vec3::Zero()).norm();
    const std::vector<double> small{0.5 * (1.0 - v), 1e-3};
    const auto r = speedCFraction(m, 0.0, 2.0, {Box3{}, 200, 1}, small, {});
    for (const auto& f : r.fractions)
      CHECK(f.fraction == 0.0);
    CHECK(r.maxSpeed == doctest::Approx(v));
  }
  SUBCASE("generic packet is monotone and vanishes at small epsilon") {
    IntegratorOptions o;
    o.relTol = 1e-8;
    o.absTol = 1e-10;
    const std::vector<double> many{0.9, 0.5, 0.3, 0.1, 1e-2, 1e-4};
    const auto r = speedCFraction(packet(), 0.0, 1.0,
                                  {Box3{Vec3::Constant(-6.0), Vec3::Constant(6.0)}, 1000, 9}, many, o);
    for (std::size_t i = 1; i < r.fractions.size(); ++i)
      CHECK(r.fractions[i].fraction <= r.fractions[i - 1].fraction);
    CHECK(r.fractions.back().fraction == 0.0);
    CHECK(r.fractions.front().fraction > 0.0);
    CHECK(r.n == 1000);
    CHECK(r.maxSpeed <= 1.0 + 1e-9);
  }
  CHECK_THROWS_AS(speedCFraction(planeWave(), 0.0, 1.0, {Box3{}, 5, 1}, std::vector<double>{1.5}, {}),
                  Error);
}

TEST_CASE("shared transport agrees with the separate estimators") {
  const auto m = packet();
  const auto pts = samplePositions(*m, 0.0, {Box3{Vec3::Constant(-6.0), Vec3::Constant(6.0)}, 300, 2});
  const std::vector<double> eps{0.3, 0.1};
  const std::vector<double> times{0.5, 1.5};
  HistogramSpec h;
  h.box = Box3{Vec3::Constant(-8.0), Vec3::Constant(8.0)};
  h.bins = {6, 6, 6};
  const auto shared = transportEnsemble(m, 0.0, 1.0, pts, eps, times, {});
  const auto sep = speedCFractionFrom(m, 0.0, 1.0, pts, eps, {});
  REQUIRE(shared.speed.fractions.size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(shared.speed.fractions[i].fraction == sep.fractions[i].fraction);
  CHECK(shared.speed.maxSpeed == doctest::Approx(sep.maxSpeed).epsilon(1e-6));
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto a = equivarianceFromEndpoints(*m, times[k], shared.snapshots[k].positions,
                                             shared.snapshots[k].lost, h);
    const auto b = equivarianceDistance(m, pts, 0.0, times[k], h, {});
    CHECK(a.distance == doctest::Approx(b.distance).epsilon(1e-9));
  }
}
