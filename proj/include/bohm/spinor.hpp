#pragma once

// Dirac-representation matrix algebra and pointwise spinor functionals.
// Natural units: hbar = c = 1, speeds are fractions of c.

#include <array>
#include <complex>

#include <Eigen/Core>

namespace bohm {

using cplx = std::complex<double>;
using Spinor = Eigen::Vector4cd;
using Mat4c = Eigen::Matrix4cd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kDefaultPsiFloor = 1e-24;

/// Minkowski vector with metric diag(1,-1,-1,-1).
struct FourVector {
  double t = 0.0;
  Vec3 space = Vec3::Zero();

  double minkowskiNormSquared() const { return t * t - space.squaredNorm(); }
};

/// Unit vector in R^3. Construction checks the norm to within 1e-12.
class Direction {
public:
  explicit Direction(const Vec3& v);

  static Direction normalized(const Vec3& v);

  const Vec3& vec() const { return v_; }

private:
  Vec3 v_;
};

struct LorentzInvariants {
  double scalar = 0.0;       // s = psibar psi
  double pseudoscalar = 0.0; // p = i psibar gamma5 psi
};

/// The gamma-matrix set. `standard()` is the Dirac representation; other
/// instances exist only so the validation suite can be fed a broken algebra.
struct DiracAlgebra {
  std::array<Mat4c, 3> alpha;
  Mat4c gamma0;
  Mat4c gamma5;

  static const DiracAlgebra& standard();

  /// gamma^mu = gamma0 * (I, alpha_k).
  Mat4c gamma(int mu) const;

  /// Returns psi^dagger M psi, with the imaginary part kept.
  static cplx bilinear(const Spinor& psi, const Mat4c& m) {
    return psi.dot(m * psi);
  }

  /// Throws Internal if a component has a non-negligible imaginary part.
  FourVector current(const Spinor& psi) const;
  LorentzInvariants invariants(const Spinor& psi) const;

  /// Hermitian matrices whose expectation values are s and p.
  Mat4c scalarMatrix() const { return gamma0; }
  Mat4c pseudoscalarMatrix() const { return cplx(0.0, 1.0) * gamma0 * gamma5; }
};

double normSquared(const Spinor& psi);

FourVector current(const Spinor& psi);

/// dQ/dt = psi^dag alpha psi / psi^dag psi. Throws NearNode below `floor`.
Vec3 bohmVelocity(const Spinor& psi, double floor = kDefaultPsiFloor);

LorentzInvariants lorentzInvariants(const Spinor& psi);

Mat4c alphaOmega(const Direction& omega);

/// (I + sign * alpha_omega) / 2, sign = +1 or -1.
Mat4c eigenProjector(const Direction& omega, int sign);

/// sqrt(s^2 + p^2) / psi^dag psi; zero exactly on the speed-c set S,
/// equal to 1 - |v|^2 otherwise. Throws ZeroSpinor for psi = 0.
double sDeviation(const Spinor& psi);

} // namespace bohm
