#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "bohm/wavefunction.hpp"

namespace bohm {

struct Box3 {
  Vec3 lo = Vec3::Constant(-1.0);
  Vec3 hi = Vec3::Constant(1.0);

  bool contains(const Vec3& q) const {
    return (q.array() >= lo.array()).all() && (q.array() <= hi.array()).all();
  }
};

struct IntegratorOptions {
  double relTol = 1e-10;
  double absTol = 1e-12;
  double maxStep = std::numeric_limits<double>::infinity();
  double psiFloor = kDefaultPsiFloor;
  double speedEventEpsilon = 1e-6;
  std::size_t maxSamples = 1'000'000;
  bool fixedStepRk4 = false;  // reproducibility fallback
  double fixedStep = 1e-3;
  std::optional<Box3> domain; // LeftDomain terminates when q exits this box
  bool recordEvents = true;

  void validate() const;
};

struct TrajectorySample {
  double t = 0.0;
  Vec3 q = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double speed = 0.0;
  double sDev = 0.0;
  double density = 0.0;
};

enum class EventKind { SpeedC, NearNode, LeftDomain };
enum class Termination { Completed, NearNode, LeftDomain, MaxSamples };

std::string_view toString(EventKind kind);
std::string_view toString(Termination reason);

struct TrajectoryEvent {
  EventKind kind;
  double tStart;
  double tEnd;
};

struct TimeInterval {
  double start;
  double end;
};

/// Bohmian world line with dense output. Holds the model so that speeds can
/// be re-evaluated between samples.
class Trajectory {
public:
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  const std::vector<TrajectoryEvent>& events() const { return events_; }
  Termination termination() const { return termination_; }
  double maxSpeed() const;

  /// Interpolated position for t within the sample range.
  Vec3 positionAt(double t) const;
  double speedAt(double t) const;

  const ModelPtr& model() const { return model_; }
  double psiFloor() const { return psiFloor_; }

private:
  friend class TrajectoryBuilder;

  // Per-step interpolation data: y(theta) = r0 + theta (r1 + theta1 (r2 + theta (r3 + theta1 r4)))
  struct DenseStep {
    std::array<Vec3, 5> r;
  };

  ModelPtr model_;
  double psiFloor_ = kDefaultPsiFloor;
  std::vector<TrajectorySample> samples_;
  std::vector<DenseStep> dense_;
  std::vector<TrajectoryEvent> events_;
  Termination termination_ = Termination::Completed;
};

/// Bohmian velocity psi^dag alpha psi / psi^dag psi at (t, q).
Vec3 velocityField(const WaveFunctionModel& model, double t, const Vec3& q,
                   double psiFloor = kDefaultPsiFloor);

/// Integrates dQ/dt = velocityField from (t1, q0) to t2. Throws NearNode if
/// the start point is at a node; later nodes end the trajectory early.
Trajectory integrate(const ModelPtr& model, const Vec3& q0, double t1, double t2,
                     const IntegratorOptions& opts = {});

/// Maximal intervals with speed >= 1 - epsilon, boundaries refined by
/// bisection on the dense output.
std::vector<TimeInterval> detectSpeedCEvents(const Trajectory& traj, double epsilon);

} // namespace bohm
