#pragma once

// Analytic solutions of the free Dirac equation i gamma^mu d_mu psi = m psi.
//
// Plane-wave convention: the branch spinors are multiplied by
// exp(i (E t + k.q)), E = sqrt(m^2 + |k|^2). This is the sign choice for which
// the Dirac residual vanishes; the resulting Bohmian velocity is -k/E, so a
// wave labelled by k travels along -k. Downstream code never assumes the
// direction of motion from k; it always goes through bohmVelocity.

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bohm/spinor.hpp"

namespace bohm {

struct SpacetimePoint {
  double t = 0.0;
  Vec3 q = Vec3::Zero();
};

/// d_t psi, d_x psi, d_y psi, d_z psi.
using SpinorGradient = std::array<Spinor, 4>;

struct ValueAndGradient {
  Spinor value;
  SpinorGradient gradient;
};

class WaveFunctionModel {
public:
  virtual ~WaveFunctionModel() = default;

  virtual Spinor evaluate(const SpacetimePoint& x) const = 0;
  virtual ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const = 0;
  virtual double mass() const = 0;

  SpinorGradient gradient(const SpacetimePoint& x) const {
    return evaluateWithGradient(x).gradient;
  }
};

using ModelPtr = std::shared_ptr<const WaveFunctionModel>;

struct PlaneWaveSpec {
  Vec3 k = Vec3::UnitZ();
  int branch = 1;
  cplx amplitude{1.0, 0.0};
  double mass = 1.0;
};

/// Branch spinor (a_-, 0, -a_+ k3/|k|, -a_+(k1 + i k2)/|k|) or its branch-2
/// partner, without amplitude or phase.
Spinor planeWaveSpinor(const Vec3& k, int branch, double mass);

double planeWaveEnergy(const Vec3& k, double mass);

Spinor planeWaveEvaluate(const PlaneWaveSpec& spec, const SpacetimePoint& x);

/// Finite sum of plane waves of a common mass. Also backs Gaussian packets.
class Superposition final : public WaveFunctionModel {
public:
  /// `mass` is used when `specs` is empty; otherwise every spec must carry it.
  Superposition(std::vector<PlaneWaveSpec> specs, double mass);

  Spinor evaluate(const SpacetimePoint& x) const override;
  ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const override;
  double mass() const override { return mass_; }

  const std::vector<PlaneWaveSpec>& specs() const { return specs_; }
  std::size_t size() const { return specs_.size(); }

private:
  struct Term {
    Spinor weighted;  // amplitude * branch spinor
    Vec3 k;
    double energy;
  };

  std::vector<PlaneWaveSpec> specs_;
  std::vector<Term> terms_;
  double mass_;
};

Spinor superpositionEvaluate(std::span<const PlaneWaveSpec> specs, const SpacetimePoint& x);

/// cos(w t) (1,1,1,-1) + sin(w t) (-i,-i,i,-i); solves the free equation with
/// m = w and is lightlike everywhere.
class CircularExample final : public WaveFunctionModel {
public:
  explicit CircularExample(double omega);

  Spinor evaluate(const SpacetimePoint& x) const override;
  ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const override;
  double mass() const override { return omega_; }
  double omega() const { return omega_; }

private:
  double omega_;
};

Spinor circularExampleEvaluate(double omega, const SpacetimePoint& x);

/// Sum of models sharing one mass.
class SumModel final : public WaveFunctionModel {
public:
  explicit SumModel(std::vector<ModelPtr> parts);

  Spinor evaluate(const SpacetimePoint& x) const override;
  ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const override;
  double mass() const override { return mass_; }

private:
  std::vector<ModelPtr> parts_;
  double mass_;
};

/// lambda * model.
class ScaledModel final : public WaveFunctionModel {
public:
  ScaledModel(ModelPtr base, cplx factor);

  Spinor evaluate(const SpacetimePoint& x) const override;
  ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const override;
  double mass() const override { return base_->mass(); }

private:
  ModelPtr base_;
  cplx factor_;
};

struct QuadratureSpec {
  int nodesPerAxis = 9;
  double radius = 0.8;            // half-width of the k-space cube
  std::size_t maxTotalNodes = 1u << 20;
};

struct GaussianPacketSpec {
  Vec3 centerK = Vec3::UnitZ();
  double widthK = 0.2;
  int branch = 1;
  double mass = 1.0;
  QuadratureSpec quadrature;
};

/// Plane-wave superposition on a tensor grid of wave vectors,
/// k_ijl = (kx_i, ky_j, kz_l). Same values as the equivalent Superposition;
/// the spatial phase factorizes per axis and the time phases are cached per
/// thread for the last evaluated t, so repeated evaluations at one time cost
/// O(n^3) multiply-adds without trigonometry.
class GaussianPacket final : public WaveFunctionModel {
public:
  GaussianPacket(std::vector<double> kx, std::vector<double> ky, std::vector<double> kz,
                 std::vector<cplx> amplitudes, int branch, double mass);

  Spinor evaluate(const SpacetimePoint& x) const override;
  ValueAndGradient evaluateWithGradient(const SpacetimePoint& x) const override;
  double mass() const override { return mass_; }

  std::size_t size() const { return energy_.size(); }
  /// The same waves as a generic superposition.
  std::vector<PlaneWaveSpec> specs() const;

private:
  const std::vector<double>& timeWeighted(double t) const;

  std::vector<double> kx_, ky_, kz_;
  std::vector<cplx> amplitudes_;   // flat index (i * ny + j) * nz + l
  std::vector<Spinor> weighted_;   // amplitude * branch spinor
  std::vector<double> energy_;
  int branch_;
  double mass_;
  std::uint64_t id_;
};

/// Gauss-Legendre tensor grid over the cube |k_i - centerK_i| <= radius with
/// weights exp(-|k - centerK|^2 / (2 widthK^2)). Normalized so that
/// psi^dag psi = 1 at t = 0, q = 0.
std::shared_ptr<const GaussianPacket> gaussianPacketBuild(const GaussianPacketSpec& spec);

/// The four waves psi1_(0,0,k), psi2_(0,0,k), psi1_(k,0,0), psi2_(k,0,0).
std::vector<PlaneWaveSpec> fourWaves(double k, double mass, std::span<const cplx, 4> coefficients);

/// 4x4 matrix whose columns are the four unit-amplitude waves at x.
Mat4c fourWaveMatrix(double k, double mass, const SpacetimePoint& x);

/// Coefficients for fourWaves so that psi(x) = target. Requires target in E+.
std::array<cplx, 4> speedCCoefficients(const SpacetimePoint& x, const Spinor& target,
                                       double k, double mass);

/// |i gamma^mu d_mu psi - m psi| / max(|psi|, floor).
double diracResidual(const WaveFunctionModel& model, const SpacetimePoint& x,
                     double floor = 1e-300);

} // namespace bohm
