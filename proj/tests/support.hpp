#pragma once

#include <random>

#include "bohm/wavefunction.hpp"

namespace bohm::test {

inline Spinor randomSpinor(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Spinor s;
  for (int i = 0; i < 4; ++i)
    s[i] = cplx(n(rng), n(rng));
  return s;
}

inline Vec3 randomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

inline SpacetimePoint randomPoint(std::mt19937_64& rng, double scale = 3.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), Vec3(u(rng), u(rng), u(rng))};
}

// Central differences of psi along t, x, y, z.
inline SpinorGradient finiteDifference(const WaveFunctionModel& m, const SpacetimePoint& x,
                                       double h = 1e-4) {
  SpinorGradient g;
  for (int mu = 0; mu < 4; ++mu) {
    SpacetimePoint a = x, b = x;
    if (mu == 0) {
      a.t += h;
      b.t -= h;
    } else {
      a.q[mu - 1] += h;
      b.q[mu - 1] -= h;
    }
    g[static_cast<std::size_t>(mu)] = (m.evaluate(a) - m.evaluate(b)) / (2.0 * h);
  }
  return g;
}

inline double maxAbs(const Mat4c& m) { return m.cwiseAbs().maxCoeff(); }

} // namespace bohm::test
