#include "bohm/wavefunction.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "bohm/error.hpp"
#include "bohm/quadrature.hpp"

namespace bohm {

namespace {

constexpr cplx kI{0.0, 1.0};

void checkMass(double mass) {
  if (!(mass >= 0.0) || !std::isfinite(mass))
    throw Error(ErrorCode::InvalidArgument, "mass must be finite and >= 0");
}

bool sameMass(double a, double b) {
  return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a));
}

} // namespace

double planeWaveEnergy(const Vec3& k, double mass) {
  return std::sqrt(mass * mass + k.squaredNorm());
}

Spinor planeWaveSpinor(const Vec3& k, int branch, double mass) {
  checkMass(mass);
  const double kn = k.norm();
  if (!(kn > 0.0))
    throw Error(ErrorCode::ZeroWaveVector, "plane wave with k = 0");
  if (branch != 1 && branch != 2)
    throw Error(ErrorCode::InvalidArgument, "plane-wave branch must be 1 or 2");
  const double energy = planeWaveEnergy(k, mass);
  const double aPlus = std::sqrt(1.0 + mass / energy);
  const double aMinus = std::sqrt(std::max(0.0, 1.0 - mass / energy));
  Spinor u;
  if (branch == 1)
    u << aMinus, 0.0, -aPlus * k.z() / kn, -aPlus * cplx(k.x(), k.y()) / kn;
  else
    u << 0.0, aMinus, -aPlus * cplx(k.x(), -k.y()) / kn, aPlus * k.z() / kn;
  return u;
}

Spinor planeWaveEvaluate(const PlaneWaveSpec& spec, const SpacetimePoint& x) {
  const double energy = planeWaveEnergy(spec.k, spec.mass);
  const double phase = energy * x.t + spec.k.dot(x.q);
  return spec.amplitude * std::polar(1.0, phase) *
         planeWaveSpinor(spec.k, spec.branch, spec.mass);
}

Superposition::Superposition(std::vector<PlaneWaveSpec> specs, double mass)
    : specs_(std::move(specs)), mass_(mass) {
  checkMass(mass_);
  terms_.reserve(specs_.size());
  for (const auto& s : specs_) {
    if (!sameMass(s.mass, mass_)) {
      std::ostringstream os;
      os << "superposition mixes masses " << mass_ << " and " << s.mass;
      throw Error(ErrorCode::MixedMass, os.str());
    }
    terms_.push_back({s.amplitude * planeWaveSpinor(s.k, s.branch, s.mass), s.k,
                      planeWaveEnergy(s.k, s.mass)});
  }
}

Spinor Superposition::evaluate(const SpacetimePoint& x) const {
  Spinor psi = Spinor::Zero();
  for (const auto& term : terms_)
    psi += std::polar(1.0, term.energy * x.t + term.k.dot(x.q)) * term.weighted;
  return psi;
}

ValueAndGradient Superposition::evaluateWithGradient(const SpacetimePoint& x) const {
  ValueAndGradient out;
  out.value.setZero();
  for (auto& g : out.gradient)
    g.setZero();
  for (const auto& term : terms_) {
    const Spinor v = std::polar(1.0, term.energy * x.t + term.k.dot(x.q)) * term.weighted;
    const Spinor iv = kI * v;
    out.value += v;
    out.gradient[0] += term.energy * iv;
    for (int a = 0; a < 3; ++a)
      out.gradient[static_cast<std::size_t>(a + 1)] += term.k[a] * iv;
  }
  return out;
}

Spinor superpositionEvaluate(std::span<const PlaneWaveSpec> specs, const SpacetimePoint& x) {
  if (specs.empty())
    return Spinor::Zero();
  return Superposition({specs.begin(), specs.end()}, specs.front().mass).evaluate(x);
}

CircularExample::CircularExample(double omega) : omega_(omega) {
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw Error(ErrorCode::InvalidArgument, "circular example needs omega > 0");
}

namespace {

const Spinor& circularCos() {
  static const Spinor v = (Spinor() << 1.0, 1.0, 1.0, -1.0).finished();
  return v;
}

const Spinor& circularSin() {
  static const Spinor v = (Spinor() << -kI, -kI, kI, -kI).finished();
  return v;
}

} // namespace

Spinor circularExampleEvaluate(double omega, const SpacetimePoint& x) {
  return std::cos(omega * x.t) * circularCos() + std::sin(omega * x.t) * circularSin();
}

Spinor CircularExample::evaluate(const SpacetimePoint& x) const {
  return circularExampleEvaluate(omega_, x);
}

ValueAndGradient CircularExample::evaluateWithGradient(const SpacetimePoint& x) const {
  const double c = std::cos(omega_ * x.t), s = std::sin(omega_ * x.t);
  ValueAndGradient out;
  out.value = c * circularCos() + s * circularSin();
  out.gradient[0] = omega_ * (-s * circularCos() + c * circularSin());
  for (int a = 1; a < 4; ++a)
    out.gradient[static_cast<std::size_t>(a)].setZero();
  return out;
}

SumModel::SumModel(std::vector<ModelPtr> parts) : parts_(std::move(parts)) {
  if (parts_.empty())
    throw Error(ErrorCode::InvalidArgument, "sum of zero models");
  mass_ = parts_.front()->mass();
  for (const auto& p : parts_)
    if (!sameMass(p->mass(), mass_))
      throw Error(ErrorCode::MixedMass, "sum model parts have different masses");
}

Spinor SumModel::evaluate(const SpacetimePoint& x) const {
  Spinor psi = Spinor::Zero();
  for (const auto& p : parts_)
    psi += p->evaluate(x);
  return psi;
}

ValueAndGradient SumModel::evaluateWithGradient(const SpacetimePoint& x) const {
  ValueAndGradient out = parts_.front()->evaluateWithGradient(x);
  for (std::size_t i = 1; i < parts_.size(); ++i) {
    const ValueAndGradient vg = parts_[i]->evaluateWithGradient(x);
    out.value += vg.value;
    for (std::size_t a = 0; a < 4; ++a)
      out.gradient[a] += vg.gradient[a];
  }
  return out;
}

ScaledModel::ScaledModel(ModelPtr base, cplx factor) : base_(std::move(base)), factor_(factor) {}

Spinor ScaledModel::evaluate(const SpacetimePoint& x) const {
  return factor_ * base_->evaluate(x);
}

ValueAndGradient ScaledModel::evaluateWithGradient(const SpacetimePoint& x) const {
  ValueAndGradient out = base_->evaluateWithGradient(x);
  out.value *= factor_;
  for (auto& g : out.gradient)
    g *= factor_;
  return out;
}

GaussianPacket::GaussianPacket(std::vector<double> kx, std::vector<double> ky,
                               std::vector<double> kz, std::vector<cplx> amplitudes, int branch,
                               double mass)
    : kx_(std::move(kx)), ky_(std::move(ky)), kz_(std::move(kz)),
      amplitudes_(std::move(amplitudes)), branch_(branch), mass_(mass) {
  static std::atomic<std::uint64_t> nextId{1};
  id_ = nextId.fetch_add(1);
  checkMass(mass_);
  if (amplitudes_.size() != kx_.size() * ky_.size() * kz_.size())
    throw Error(ErrorCode::InvalidArgument, "packet amplitude grid has the wrong size");
  weighted_.reserve(amplitudes_.size());
  energy_.reserve(amplitudes_.size());
  std::size_t n = 0;
  for (double a : kx_)
    for (double b : ky_)
      for (double c : kz_) {
        const Vec3 k(a, b, c);
        weighted_.push_back(amplitudes_[n++] * planeWaveSpinor(k, branch_, mass_));
        energy_.push_back(planeWaveEnergy(k, mass_));
      }
}

std::vector<PlaneWaveSpec> GaussianPacket::specs() const {
  std::vector<PlaneWaveSpec> out;
  out.reserve(amplitudes_.size());
  std::size_t n = 0;
  for (double a : kx_)
    for (double b : ky_)
      for (double c : kz_)
        out.push_back({Vec3(a, b, c), branch_, amplitudes_[n++], mass_});
  return out;
}

// Layout per node: re0, im0, re1, im1, ..., re3, im3.
const std::vector<double>& GaussianPacket::timeWeighted(double t) const {
  struct Cache {
    std::uint64_t id = 0;
    double t = 0.0;
    std::vector<double> values;
  };
  thread_local Cache cache;
  if (cache.id != id_ || cache.t != t || cache.values.size() != 8 * weighted_.size()) {
    cache.values.resize(8 * weighted_.size());
    for (std::size_t n = 0; n < weighted_.size(); ++n) {
      const double pr = std::cos(energy_[n] * t), pi = std::sin(energy_[n] * t);
      for (int c = 0; c < 4; ++c) {
        const double wr = weighted_[n][c].real(), wi = weighted_[n][c].imag();
        cache.values[8 * n + 2 * c] = pr * wr - pi * wi;
        cache.values[8 * n + 2 * c + 1] = pr * wi + pi * wr;
      }
    }
    cache.id = id_;
    cache.t = t;
  }
  return cache.values;
}

namespace {

void axisPhases(const std::vector<double>& k, double x, std::vector<double>& re,
                std::vector<double>& im) {
  re.resize(k.size());
  im.resize(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    re[i] = std::cos(k[i] * x);
    im[i] = std::sin(k[i] * x);
  }
}

// acc += (er + i ei) * v for 4 complex components stored interleaved.
inline void axpy8(double er, double ei, const double* v, double* acc) {
  for (int c = 0; c < 4; ++c) {
    const double vr = v[2 * c], vi = v[2 * c + 1];
    acc[2 * c] += er * vr - ei * vi;
    acc[2 * c + 1] += er * vi + ei * vr;
  }
}

} // namespace

Spinor GaussianPacket::evaluate(const SpacetimePoint& x) const {
  const std::vector<double>& w = timeWeighted(x.t);
  thread_local std::vector<double> exr, exi, eyr, eyi, ezr, ezi;
  axisPhases(kx_, x.q.x(), exr, exi);
  axisPhases(ky_, x.q.y(), eyr, eyi);
  axisPhases(kz_, x.q.z(), ezr, ezi);
  const std::size_t nx = kx_.size(), ny = ky_.size(), nz = kz_.size();
  double total[8] = {};
  const double* node = w.data();
  for (std::size_t i = 0; i < nx; ++i) {
    double sx[8] = {};
    for (std::size_t j = 0; j < ny; ++j) {
      double sy[8] = {};
      for (std::size_t l = 0; l < nz; ++l, node += 8)
        axpy8(ezr[l], ezi[l], node, sy);
      axpy8(eyr[j], eyi[j], sy, sx);
    }
    axpy8(exr[i], exi[i], sx, total);
  }
  Spinor out;
  for (int c = 0; c < 4; ++c)
    out[c] = cplx(total[2 * c], total[2 * c + 1]);
  return out;
}

ValueAndGradient GaussianPacket::evaluateWithGradient(const SpacetimePoint& x) const {
  const std::vector<double>& w = timeWeighted(x.t);
  ValueAndGradient out;
  out.value.setZero();
  for (auto& g : out.gradient)
    g.setZero();
  std::size_t n = 0;
  for (double a : kx_)
    for (double b : ky_)
      for (double c : kz_) {
        Spinor wn;
        for (int m = 0; m < 4; ++m)
          wn[m] = cplx(w[8 * n + 2 * m], w[8 * n + 2 * m + 1]);
        const Spinor v = std::polar(1.0, a * x.q.x() + b * x.q.y() + c * x.q.z()) * wn;
        const Spinor iv = cplx(0.0, 1.0) * v;
        out.value += v;
        out.gradient[0] += energy_[n] * iv;
        out.gradient[1] += a * iv;
        out.gradient[2] += b * iv;
        out.gradient[3] += c * iv;
        ++n;
      }
  return out;
}

std::shared_ptr<const GaussianPacket> gaussianPacketBuild(const GaussianPacketSpec& spec) {
  const auto& quad = spec.quadrature;
  if (!(spec.widthK > 0.0))
    throw Error(ErrorCode::InvalidArgument, "packet width must be > 0");
  if (quad.nodesPerAxis < 1)
    throw Error(ErrorCode::InvalidArgument, "quadrature needs at least 1 node per axis");
  if (!(quad.radius > 0.0))
    throw Error(ErrorCode::InvalidArgument, "quadrature radius must be > 0");
  const auto n = static_cast<std::size_t>(quad.nodesPerAxis);
  if (n * n * n > quad.maxTotalNodes) {
    std::ostringstream os;
    os << "quadrature grid has " << n * n * n << " nodes, cap is " << quad.maxTotalNodes;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }

  const GaussLegendreRule rule = gaussLegendre(quad.nodesPerAxis);
  std::array<std::vector<double>, 3> axes;
  for (int a = 0; a < 3; ++a)
    for (double u : rule.nodes)
      axes[static_cast<std::size_t>(a)].push_back(spec.centerK[a] + quad.radius * u);

  const double originTol = 1e-9 * std::max(1.0, spec.centerK.norm() + quad.radius);
  const double twoVar = 2.0 * spec.widthK * spec.widthK;
  std::vector<cplx> amplitudes;
  amplitudes.reserve(n * n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < n; ++l) {
        const Vec3 k(axes[0][i], axes[1][j], axes[2][l]);
        if (k.norm() < originTol)
          throw Error(ErrorCode::NodeAtOrigin, "packet quadrature grid contains k = 0");
        const double w = rule.weights[i] * rule.weights[j] * rule.weights[l] *
                         std::exp(-(k - spec.centerK).squaredNorm() / twoVar);
        amplitudes.emplace_back(w, 0.0);
      }

  const GaussianPacket raw(axes[0], axes[1], axes[2], amplitudes, spec.branch, spec.mass);
  const double norm = raw.evaluate({}).norm();
  if (!(norm > 0.0))
    throw Error(ErrorCode::InvalidArgument, "packet vanishes at its reference event");
  for (auto& a : amplitudes)
    a /= norm;
  return std::make_shared<const GaussianPacket>(axes[0], axes[1], axes[2], std::move(amplitudes),
                                                spec.branch, spec.mass);
}

std::vector<PlaneWaveSpec> fourWaves(double k, double mass, std::span<const cplx, 4> coefficients) {
  if (!(k > 0.0))
    throw Error(ErrorCode::ZeroWaveVector, "four-wave family needs k > 0");
  const Vec3 kz(0.0, 0.0, k), kx(k, 0.0, 0.0);
  return {{kz, 1, coefficients[0], mass},
          {kz, 2, coefficients[1], mass},
          {kx, 1, coefficients[2], mass},
          {kx, 2, coefficients[3], mass}};
}

Mat4c fourWaveMatrix(double k, double mass, const SpacetimePoint& x) {
  const std::array<cplx, 4> ones{1.0, 1.0, 1.0, 1.0};
  const auto waves = fourWaves(k, mass, ones);
  Mat4c m;
  for (int c = 0; c < 4; ++c)
    m.col(c) = planeWaveEvaluate(waves[static_cast<std::size_t>(c)], x);
  return m;
}

std::array<cplx, 4> speedCCoefficients(const SpacetimePoint& x, const Spinor& target,
                                       double k, double mass) {
  const double tn = target.norm();
  if (!(tn > 0.0))
    throw Error(ErrorCode::ZeroSpinor, "speed-c target spinor is zero");
  const Mat4c plus = eigenProjector(Direction(Vec3::UnitZ()), +1);
  if ((plus * target - target).norm() > 1e-12 * tn)
    throw Error(ErrorCode::InvalidArgument, "speed-c target is not in the +1 eigenspace of alpha_z");

  const Mat4c m = fourWaveMatrix(k, mass, x);
  Eigen::JacobiSVD<Mat4c> svd(m);
  const auto& sv = svd.singularValues();
  if (!(sv(3) > 1e-12 * sv(0)))
    throw Error(ErrorCode::SingularSystem, "four-wave value matrix is singular");
  const Eigen::Vector4cd c = m.fullPivLu().solve(target);
  return {c(0), c(1), c(2), c(3)};
}

double diracResidual(const WaveFunctionModel& model, const SpacetimePoint& x, double floor) {
  static const std::array<Mat4c, 4> gammas = [] {
    const auto& alg = DiracAlgebra::standard();
    return std::array<Mat4c, 4>{alg.gamma(0), alg.gamma(1), alg.gamma(2), alg.gamma(3)};
  }();
  const ValueAndGradient vg = model.evaluateWithGradient(x);
  Spinor lhs = Spinor::Zero();
  for (std::size_t mu = 0; mu < 4; ++mu)
    lhs += gammas[mu] * vg.gradient[mu];
  const Spinor r = kI * lhs - model.mass() * vg.value;
  return r.norm() / std::max(vg.value.norm(), floor);
}

} // namespace bohm
