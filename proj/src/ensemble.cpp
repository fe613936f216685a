#include "bohm/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bohm/error.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

void SamplingRegion::validate() const {
  if (!(box.lo.array() < box.hi.array()).all())
    throw Error(ErrorCode::InvalidArgument, "sampling region needs lo < hi on every axis");
  if (n < 1)
    throw Error(ErrorCode::InvalidArgument, "sampling region needs n >= 1");
}

void HistogramSpec::validate() const {
  if (!(box.lo.array() < box.hi.array()).all())
    throw Error(ErrorCode::InvalidArgument, "histogram box needs lo < hi on every axis");
  for (int b : bins)
    if (b < 1)
      throw Error(ErrorCode::InvalidArgument, "histogram needs >= 1 bin per axis");
  if (subSamples < 1)
    throw Error(ErrorCode::InvalidArgument, "histogram sub-sampling must be >= 1");
}

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

std::vector<Vec3> samplePositions(const WaveFunctionModel& model, double t1,
                                  const SamplingRegion& region, const SamplingOptions& opts,
                                  SamplingStats* stats) {
  region.validate();
  if (opts.scanResolution < 2)
    throw Error(ErrorCode::InvalidArgument, "envelope scan needs >= 2 points per axis");
  if (!(opts.envelopeFactor >= 1.0))
    throw Error(ErrorCode::InvalidArgument, "envelope factor must be >= 1");

  const auto res = static_cast<std::size_t>(opts.scanResolution);
  const Vec3 extent = region.box.hi - region.box.lo;
  std::vector<double> planeMax(res, 0.0);
  parallelFor(res, opts.threads, [&](std::size_t i) {
    double m = 0.0;
    for (std::size_t j = 0; j < res; ++j)
      for (std::size_t l = 0; l < res; ++l) {
        const Vec3 frac(static_cast<double>(i), static_cast<double>(j), static_cast<double>(l));
        const Vec3 q = region.box.lo + (frac / static_cast<double>(res - 1)).cwiseProduct(extent);
        m = std::max(m, model.evaluate({t1, q}).squaredNorm());
      }
    planeMax[i] = m;
  });
  const double sup = *std::max_element(planeMax.begin(), planeMax.end());
  if (!(sup > opts.densityFloor)) {
    std::ostringstream os;
    os << "density sup over the sampling region is " << sup << " (floor "
       << opts.densityFloor << ")";
    throw Error(ErrorCode::DegenerateDensity, os.str());
  }
  const double envelope = opts.envelopeFactor * sup;

  std::vector<Vec3> out(region.n);
  std::vector<std::uint64_t> proposals(region.n, 0), violations(region.n, 0);
  parallelFor(region.n, opts.threads, [&](std::size_t i) {
    auto rng = substream(region.seed, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (;;) {
      Vec3 q;
      for (int a = 0; a < 3; ++a)
        q[a] = region.box.lo[a] + unit(rng) * extent[a];
      const double u = unit(rng) * envelope;
      const double d = model.evaluate({t1, q}).squaredNorm();
      ++proposals[i];
      if (d > envelope)
        ++violations[i];
      if (u < d) {
        out[i] = q;
        return;
      }
    }
  });

  if (stats) {
    stats->envelope = envelope;
    stats->proposals = 0;
    stats->envelopeViolations = 0;
    for (std::size_t i = 0; i < region.n; ++i) {
      stats->proposals += proposals[i];
      stats->envelopeViolations += violations[i];
    }
  }
  return out;
}

namespace {

std::ptrdiff_t binIndex(const HistogramSpec& spec, const Vec3& q) {
  std::ptrdiff_t idx = 0;
  for (int a = 0; a < 3; ++a) {
    const double lo = spec.box.lo[a], hi = spec.box.hi[a];
    if (!(q[a] >= lo && q[a] <= hi))
      return -1;
    const int nb = spec.bins[static_cast<std::size_t>(a)];
    int b = static_cast<int>(std::floor((q[a] - lo) / (hi - lo) * nb));
    b = std::clamp(b, 0, nb - 1);
    idx = idx * nb + b;
  }
  return idx;
}

std::vector<double> binnedDensity(const WaveFunctionModel& model, double t,
                                  const HistogramSpec& spec, unsigned threads) {
  const int nx = spec.bins[0], ny = spec.bins[1], nz = spec.bins[2];
  const Vec3 width = (spec.box.hi - spec.box.lo).cwiseQuotient(Vec3(nx, ny, nz));
  const int sub = spec.subSamples;
  std::vector<double> mass(static_cast<std::size_t>(nx) * ny * nz, 0.0);
  parallelFor(static_cast<std::size_t>(nx), threads, [&](std::size_t ix) {
    for (int iy = 0; iy < ny; ++iy)
      for (int iz = 0; iz < nz; ++iz) {
        double acc = 0.0;
        for (int a = 0; a < sub; ++a)
          for (int b = 0; b < sub; ++b)
            for (int c = 0; c < sub; ++c) {
              const Vec3 frac(static_cast<double>(ix) + (a + 0.5) / sub,
                              iy + (b + 0.5) / sub, iz + (c + 0.5) / sub);
              acc += model.evaluate({t, spec.box.lo + frac.cwiseProduct(width)}).squaredNorm();
            }
        mass[(ix * static_cast<std::size_t>(ny) + static_cast<std::size_t>(iy)) *
                 static_cast<std::size_t>(nz) +
             static_cast<std::size_t>(iz)] = acc;
      }
  });
  double total = 0.0;
  for (double m : mass)
    total += m;
  if (!(total > 0.0))
    throw Error(ErrorCode::DegenerateDensity, "density vanishes on the histogram support");
  for (double& m : mass)
    m /= total;
  return mass;
}

} // namespace

EquivarianceResult equivarianceDistance(const ModelPtr& model, std::span<const Vec3> samples,
                                        double t1, double t2, const HistogramSpec& spec,
                                        const IntegratorOptions& opts, unsigned threads,
                                        double maxLostFraction) {
  spec.validate();
  if (samples.empty())
    throw Error(ErrorCode::InvalidArgument, "equivariance check needs samples");

  enum class Fate : std::uint8_t { Used, NearNode, Outside };
  std::vector<Vec3> endpoints(samples.size());
  std::vector<Fate> fate(samples.size(), Fate::Used);

  IntegratorOptions transport = opts;
  transport.recordEvents = false;
  transport.domain.reset();
  parallelFor(samples.size(), threads, [&](std::size_t i) {
    if (t2 == t1) {
      endpoints[i] = samples[i];
      return;
    }
    try {
      const Trajectory traj = integrate(model, samples[i], t1, t2, transport);
      if (traj.termination() != Termination::Completed) {
        fate[i] = Fate::NearNode;
        return;
      }
      endpoints[i] = traj.samples().back().q;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NearNode)
        throw;
      fate[i] = Fate::NearNode;
    }
  });

  std::vector<char> lost(samples.size(), 0);
  for (std::size_t i = 0; i < samples.size(); ++i)
    lost[i] = fate[i] == Fate::NearNode;
  return equivarianceFromEndpoints(*model, t2, endpoints, lost, spec, threads, maxLostFraction);
}

EquivarianceResult equivarianceFromEndpoints(const WaveFunctionModel& model, double t2,
                                             std::span<const Vec3> endpoints,
                                             std::span<const char> lost,
                                             const HistogramSpec& spec, unsigned threads,
                                             double maxLostFraction) {
  spec.validate();
  if (endpoints.empty() || lost.size() != endpoints.size())
    throw Error(ErrorCode::InvalidArgument, "equivariance check needs matching endpoints");
  EquivarianceResult r;
  r.nTotal = endpoints.size();
  const auto& s = spec;
  std::vector<double> counts(static_cast<std::size_t>(s.bins[0]) * s.bins[1] * s.bins[2], 0.0);
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    if (lost[i]) {
      ++r.nNearNode;
      continue;
    }
    const auto b = binIndex(spec, endpoints[i]);
    if (b < 0) {
      ++r.nOutside;
      continue;
    }
    counts[static_cast<std::size_t>(b)] += 1.0;
    ++r.nUsed;
  }
  r.excludedFraction = static_cast<double>(r.nNearNode + r.nOutside) / static_cast<double>(r.nTotal);
  if (r.excludedFraction > maxLostFraction) {
    std::ostringstream os;
    os << "equivariance check lost " << r.excludedFraction * 100.0
       << "% of trajectories (near node: " << r.nNearNode << ", outside: " << r.nOutside << ")";
    throw Error(ErrorCode::TooManyLost, os.str());
  }

  const std::vector<double> reference = binnedDensity(model, t2, spec, threads);
  double tv = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b)
    tv += std::abs(counts[b] / static_cast<double>(r.nUsed) - reference[b]);
  r.distance = 0.5 * tv;
  return r;
}

namespace {

SpeedCFractionResult summarizeSpeeds(std::vector<double> maxSpeed,
                                     const std::vector<char>& hitNode,
                                     std::span<const double> epsilons) {
  SpeedCFractionResult r;
  r.n = maxSpeed.size();
  for (std::size_t i = 0; i < r.n; ++i) {
    r.maxSpeed = std::max(r.maxSpeed, maxSpeed[i]);
    r.nearNodeCount += static_cast<std::size_t>(hitNode[i]);
  }
  // A trajectory has a SpeedC event at threshold 1 - eps exactly when one of
  // its samples reaches that speed, so thresholding the sample maximum is
  // equivalent to running detectSpeedCEvents per eps.
  for (double e : epsilons) {
    std::size_t hits = 0;
    for (double v : maxSpeed)
      hits += v >= 1.0 - e ? 1u : 0u;
    r.fractions.push_back({e, r.n ? static_cast<double>(hits) / static_cast<double>(r.n) : 0.0});
  }
  r.trajectoryMaxSpeeds = std::move(maxSpeed);
  return r;
}

void checkEpsilons(std::span<const double> epsilons) {
  for (double e : epsilons)
    if (!(e > 0.0 && e < 1.0))
      throw Error(ErrorCode::InvalidArgument, "epsilon values must lie in (0, 1)");
}

} // namespace

SpeedCFractionResult speedCFractionFrom(const ModelPtr& model, double t1, double t2,
                                        std::span<const Vec3> starts,
                                        std::span<const double> epsilons,
                                        const IntegratorOptions& opts, unsigned threads) {
  checkEpsilons(epsilons);
  IntegratorOptions o = opts;
  o.recordEvents = false;
  std::vector<double> maxSpeed(starts.size(), 0.0);
  std::vector<char> hitNode(starts.size(), 0);
  parallelFor(starts.size(), threads, [&](std::size_t i) {
    try {
      const Trajectory traj = integrate(model, starts[i], t1, t2, o);
      maxSpeed[i] = traj.maxSpeed();
      hitNode[i] = traj.termination() == Termination::NearNode;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NearNode)
        throw;
      hitNode[i] = 1;
    }
  });

  return summarizeSpeeds(std::move(maxSpeed), hitNode, epsilons);
}

SpeedCFractionResult speedCFraction(const ModelPtr& model, double t1, double t2,
                                    const SamplingRegion& region,
                                    std::span<const double> epsilons,
                                    const IntegratorOptions& opts,
                                    const SamplingOptions& sampling) {
  const std::vector<Vec3> starts = samplePositions(*model, t1, region, sampling);
  return speedCFractionFrom(model, t1, t2, starts, epsilons, opts, sampling.threads);
}

EnsembleTransport transportEnsemble(const ModelPtr& model, double t1, double t2,
                                    std::span<const Vec3> starts,
                                    std::span<const double> epsilons,
                                    std::span<const double> snapshotTimes,
                                    const IntegratorOptions& opts, unsigned threads) {
  checkEpsilons(epsilons);
  double tEnd = t2;
  for (double t : snapshotTimes) {
    if (!(t >= t1))
      throw Error(ErrorCode::InvalidArgument, "snapshot times must be >= t1");
    tEnd = std::max(tEnd, t);
  }

  EnsembleTransport out;
  for (double t : snapshotTimes)
    out.snapshots.push_back({t, std::vector<Vec3>(starts.size()), std::vector<char>(starts.size(), 0)});
  std::vector<double> maxSpeed(starts.size(), 0.0);
  std::vector<char> hitNode(starts.size(), 0);

  IntegratorOptions o = opts;
  o.recordEvents = false;
  parallelFor(starts.size(), threads, [&](std::size_t i) {
    double reached = t1;
    try {
      if (tEnd > t1) {
        const Trajectory traj = integrate(model, starts[i], t1, tEnd, o);
        reached = traj.samples().back().t;
        double vmax = 0.0;
        for (const auto& s : traj.samples())
          if (s.t <= t2)
            vmax = std::max(vmax, s.speed);
        if (reached >= t2)
          vmax = std::max(vmax, traj.speedAt(t2));
        maxSpeed[i] = vmax;
        hitNode[i] = reached < t2;
        for (auto& snap : out.snapshots) {
          if (reached >= snap.t)
            snap.positions[i] = traj.positionAt(snap.t);
          else
            snap.lost[i] = 1;
        }
        return;
      }
      maxSpeed[i] = bohmVelocity(model->evaluate({t1, starts[i]}), o.psiFloor).norm();
      for (auto& snap : out.snapshots)
        snap.positions[i] = starts[i];
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NearNode)
        throw;
      hitNode[i] = 1;
      for (auto& snap : out.snapshots)
        snap.lost[i] = 1;
    }
  });
  out.speed = summarizeSpeeds(std::move(maxSpeed), hitNode, epsilons);
  return out;
}

} // namespace bohm
