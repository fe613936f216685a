#include "bohm/spinor.hpp"

#include <cmath>
#include <sstream>

#include "bohm/error.hpp"

namespace bohm {

std::string_view toString(ErrorCode code) noexcept {
  switch (code) {
  case ErrorCode::NearNode: return "NearNode";
  case ErrorCode::NotUnit: return "NotUnit";
  case ErrorCode::ZeroSpinor: return "ZeroSpinor";
  case ErrorCode::ZeroWaveVector: return "ZeroWaveVector";
  case ErrorCode::MixedMass: return "MixedMass";
  case ErrorCode::NodeAtOrigin: return "NodeAtOrigin";
  case ErrorCode::SingularSystem: return "SingularSystem";
  case ErrorCode::StepFailure: return "StepFailure";
  case ErrorCode::DegenerateDensity: return "DegenerateDensity";
  case ErrorCode::TooManyLost: return "TooManyLost";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::Config: return "Config";
  case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

Direction::Direction(const Vec3& v) : v_(v) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "direction is not a unit vector (|w| = " << v.norm() << ")";
    throw Error(ErrorCode::NotUnit, os.str());
  }
}

Direction Direction::normalized(const Vec3& v) {
  double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCode::NotUnit, "cannot normalize a zero or non-finite vector");
  return Direction(v / n);
}

namespace {

Mat4c offDiagonal(const Eigen::Matrix2cd& s) {
  Mat4c m = Mat4c::Zero();
  m.topRightCorner<2, 2>() = s;
  m.bottomLeftCorner<2, 2>() = s;
  return m;
}

DiracAlgebra makeStandard() {
  const cplx i(0.0, 1.0);
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, -i, i, 0;
  sz << 1, 0, 0, -1;

  DiracAlgebra a;
  a.alpha = {offDiagonal(sx), offDiagonal(sy), offDiagonal(sz)};
  a.gamma0 = Mat4c::Zero();
  a.gamma0.diagonal() << 1, 1, -1, -1;
  a.gamma5 = offDiagonal(Eigen::Matrix2cd::Identity());
  return a;
}

// Imaginary parts of Hermitian bilinears are rounding noise; anything larger
// means the algebra is broken.
double realPart(cplx z, double scale, const char* what) {
  if (std::abs(z.imag()) > 1e-12 * std::max(1.0, scale)) {
    std::ostringstream os;
    os << what << " has imaginary part " << z.imag();
    throw Error(ErrorCode::Internal, os.str());
  }
  return z.real();
}

} // namespace

const DiracAlgebra& DiracAlgebra::standard() {
  static const DiracAlgebra algebra = makeStandard();
  return algebra;
}

Mat4c DiracAlgebra::gamma(int mu) const {
  if (mu == 0)
    return gamma0;
  return gamma0 * alpha.at(static_cast<std::size_t>(mu - 1));
}

FourVector DiracAlgebra::current(const Spinor& psi) const {
  const double rho = psi.squaredNorm();
  FourVector j;
  j.t = rho;
  for (int k = 0; k < 3; ++k)
    j.space[k] = realPart(bilinear(psi, alpha[static_cast<std::size_t>(k)]), rho,
                          "current component");
  return j;
}

LorentzInvariants DiracAlgebra::invariants(const Spinor& psi) const {
  const double rho = psi.squaredNorm();
  return {realPart(bilinear(psi, scalarMatrix()), rho, "scalar invariant"),
          realPart(bilinear(psi, pseudoscalarMatrix()), rho, "pseudoscalar invariant")};
}

double normSquared(const Spinor& psi) { return psi.squaredNorm(); }

FourVector current(const Spinor& psi) {
  return DiracAlgebra::standard().current(psi);
}

Vec3 bohmVelocity(const Spinor& psi, double floor) {
  const FourVector j = current(psi);
  if (!(j.t > floor)) {
    std::ostringstream os;
    os << "psi^dagger psi = " << j.t << " is below the node floor " << floor;
    throw Error(ErrorCode::NearNode, os.str());
  }
  return j.space / j.t;
}

LorentzInvariants lorentzInvariants(const Spinor& psi) {
  return DiracAlgebra::standard().invariants(psi);
}

Mat4c alphaOmega(const Direction& omega) {
  const auto& a = DiracAlgebra::standard().alpha;
  const Vec3& w = omega.vec();
  return w.x() * a[0] + w.y() * a[1] + w.z() * a[2];
}

Mat4c eigenProjector(const Direction& omega, int sign) {
  if (sign != 1 && sign != -1)
    throw Error(ErrorCode::InvalidArgument, "projector sign must be +1 or -1");
  return 0.5 * (Mat4c::Identity() + static_cast<double>(sign) * alphaOmega(omega));
}

double sDeviation(const Spinor& psi) {
  const double rho = psi.squaredNorm();
  if (!(rho > 0.0))
    throw Error(ErrorCode::ZeroSpinor, "sDeviation of the zero spinor");
  const LorentzInvariants li = lorentzInvariants(psi);
  return std::hypot(li.scalar, li.pseudoscalar) / rho;
}

} // namespace bohm
