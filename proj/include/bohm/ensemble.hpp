#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bohm/dynamics.hpp"

namespace bohm {

struct SamplingRegion {
  Box3 box;
  std::size_t n = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SamplingOptions {
  int scanResolution = 64;     // grid points per axis for the envelope scan
  double envelopeFactor = 1.2;
  double densityFloor = 1e-24;
  unsigned threads = 0;        // 0 = hardware concurrency
};

struct SamplingStats {
  double envelope = 0.0;
  std::uint64_t proposals = 0;
  std::uint64_t envelopeViolations = 0;  // proposals with density > envelope
};

/// Independent random stream for item `index` of a run seeded with `seed`.
/// Streams do not depend on thread count or scheduling.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index);

/// Rejection sampling from psi^dag psi(t1, .) restricted to the region box.
std::vector<Vec3> samplePositions(const WaveFunctionModel& model, double t1,
                                  const SamplingRegion& region,
                                  const SamplingOptions& opts = {},
                                  SamplingStats* stats = nullptr);

struct HistogramSpec {
  Box3 box;
  std::array<int, 3> bins{20, 20, 20};
  int subSamples = 2;  // midpoint sub-grid per bin axis for the reference density

  void validate() const;
};

struct EquivarianceResult {
  double distance = 0.0;
  std::size_t nTotal = 0;
  std::size_t nUsed = 0;
  std::size_t nNearNode = 0;
  std::size_t nOutside = 0;  // endpoint outside the histogram support
  double excludedFraction = 0.0;
};

/// Transports samples from t1 to t2 and returns the total-variation distance
/// between the endpoint histogram and the binned density psi^dag psi(t2, .).
/// Throws TooManyLost if more than `maxLostFraction` of samples are excluded.
EquivarianceResult equivarianceDistance(const ModelPtr& model, std::span<const Vec3> samples,
                                        double t1, double t2, const HistogramSpec& bins,
                                        const IntegratorOptions& opts, unsigned threads = 0,
                                        double maxLostFraction = 0.1);

/// Histogram comparison for endpoints already transported to t2; lost[i]
/// marks trajectories that stopped at a node before t2.
EquivarianceResult equivarianceFromEndpoints(const WaveFunctionModel& model, double t2,
                                             std::span<const Vec3> endpoints,
                                             std::span<const char> lost,
                                             const HistogramSpec& bins, unsigned threads = 0,
                                             double maxLostFraction = 0.1);

struct EpsilonFraction {
  double epsilon;
  double fraction;
};

struct SpeedCFractionResult {
  std::vector<EpsilonFraction> fractions;
  std::size_t n = 0;
  std::size_t nearNodeCount = 0;
  double maxSpeed = 0.0;
  std::vector<double> trajectoryMaxSpeeds;
};

/// Fraction of |psi|^2-distributed trajectories that reach speed >= 1 - eps
/// somewhere in [t1, t2], for each eps.
SpeedCFractionResult speedCFraction(const ModelPtr& model, double t1, double t2,
                                    const SamplingRegion& region,
                                    std::span<const double> epsilons,
                                    const IntegratorOptions& opts,
                                    const SamplingOptions& sampling = {});

/// Same, for given start positions.
SpeedCFractionResult speedCFractionFrom(const ModelPtr& model, double t1, double t2,
                                        std::span<const Vec3> starts,
                                        std::span<const double> epsilons,
                                        const IntegratorOptions& opts, unsigned threads = 0);

struct Snapshot {
  double t = 0.0;
  std::vector<Vec3> positions;
  std::vector<char> lost;
};

struct EnsembleTransport {
  SpeedCFractionResult speed;
  std::vector<Snapshot> snapshots;
};

/// One integration per start over [t1, max(t2, snapshot times)]: speed-c
/// fractions over [t1, t2] plus positions at each snapshot time (>= t1).
EnsembleTransport transportEnsemble(const ModelPtr& model, double t1, double t2,
                                    std::span<const Vec3> starts,
                                    std::span<const double> epsilons,
                                    std::span<const double> snapshotTimes,
                                    const IntegratorOptions& opts, unsigned threads = 0);

} // namespace bohm
