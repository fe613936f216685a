#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "bohm/wavefunction.hpp"

namespace bohm {

/// K = [t1, t2] x [lo, hi], sampled on a (t, x, y, z) grid.
struct CompactBox {
  double t1 = 0.0;
  double t2 = 1.0;
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);
  std::array<int, 4> resolution{17, 17, 17, 17};

  void validate() const;
  Eigen::Vector4d lower() const { return {t1, lo.x(), lo.y(), lo.z()}; }
  Eigen::Vector4d upper() const { return {t2, hi.x(), hi.y(), hi.z()}; }
};

struct SigmaOptions {
  double newtonTol = 1e-12;        // on the normalized residual |F| / psi^dag psi
  int maxIter = 50;
  double marginTol = 1e-8;         // on sigma_2 of the normalized Jacobian
  double degenerateTol = 1e-10;
  double degenerateFraction = 0.01;
  double seedFraction = 0.05;      // seed threshold = seedFraction * median grid residual
  std::size_t maxSeeds = 4096;
  double dedupTol = 1e-6;          // spacetime distance
  double psiFloor = kDefaultPsiFloor;
  unsigned threads = 0;

  void validate() const;
};

using ConstraintJacobian = Eigen::Matrix<double, 2, 4>;

struct SigmaPoint {
  SpacetimePoint x;
  double residual = 0.0;  // |(s, p)| / psi^dag psi
  double margin = 0.0;    // sigma_2 of the 2x4 Jacobian, divided by psi^dag psi
  double psiNorm = 0.0;   // psi^dag psi
  int rank = 0;           // numerical rank of the Jacobian at marginTol
};

enum class Verdict { Empty, TransverseCodim2, Degenerate, MarginBelowTol };
std::string_view toString(Verdict v);

struct SigmaSearch {
  std::vector<SigmaPoint> points;
  std::size_t seedCount = 0;
  std::size_t convergedCount = 0;
  std::size_t gridPoints = 0;
  std::size_t gridBelowDegenerateTol = 0;
  std::size_t gridZeroCount = 0;  // grid points with psi^dag psi below the floor
};

struct TransversalityReport {
  std::vector<SigmaPoint> points;
  double minMargin = 0.0;  // 0 when there are no points
  std::size_t seedCount = 0;
  std::size_t convergedCount = 0;
  double degenerateGridFraction = 0.0;
  std::size_t gridZeroCount = 0;
  Verdict verdict = Verdict::Empty;
};

/// (s, p) of psi(x). Throws ZeroSpinor below the floor.
std::array<double, 2> constraintValue(const WaveFunctionModel& model, const SpacetimePoint& x,
                                      double psiFloor = kDefaultPsiFloor);

/// Rows: spacetime gradients (d_t, d_x, d_y, d_z) of s(psi(x)) and p(psi(x)).
ConstraintJacobian constraintJacobian(const WaveFunctionModel& model, const SpacetimePoint& x);

SigmaSearch locateSigma(const WaveFunctionModel& model, const CompactBox& box,
                        const SigmaOptions& opts = {});

TransversalityReport transversalityReport(const WaveFunctionModel& model, const CompactBox& box,
                                          const SigmaOptions& opts = {});

struct PerturbationTrial {
  std::array<cplx, 4> coefficients;
  Verdict verdict;
  double minMargin;
  std::size_t points;
  int minRank;  // Jacobian numerical rank over the located points (0 if none)
  int maxRank;
  double degenerateGridFraction;
};

struct PerturbationStats {
  double amplitude = 0.0;
  Verdict baseVerdict = Verdict::Empty;
  double baseDegenerateGridFraction = 0.0;
  std::vector<PerturbationTrial> trials;
  double transverseFraction = 0.0;
  double meanDegenerateGridFraction = 0.0;
};

struct PerturbationSpec {
  double amplitude = 1e-3;
  int trials = 50;
  std::uint64_t seed = 1;
  double waveNumber = 1.0;  // k of the four-wave family
};

/// The perturbed model base + sum_j c_j psi_j with psi_j the four-wave family
/// and c_j = amplitude * (N(0,1) + i N(0,1)) drawn from substream(seed, trial).
ModelPtr perturbedModel(const ModelPtr& base, const PerturbationSpec& spec, int trial,
                        std::array<cplx, 4>* coefficients = nullptr);

PerturbationStats perturbAndCompare(const ModelPtr& base, const PerturbationSpec& spec,
                                    const CompactBox& box, const SigmaOptions& opts = {});

} // namespace bohm
