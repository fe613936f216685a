#include "bohm/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bohm/error.hpp"

namespace bohm {

std::string_view toString(EventKind kind) {
  switch (kind) {
  case EventKind::SpeedC: return "SpeedC";
  case EventKind::NearNode: return "NearNode";
  case EventKind::LeftDomain: return "LeftDomain";
  }
  return "Unknown";
}

std::string_view toString(Termination reason) {
  switch (reason) {
  case Termination::Completed: return "Completed";
  case Termination::NearNode: return "NearNode";
  case Termination::LeftDomain: return "LeftDomain";
  case Termination::MaxSamples: return "MaxSamples";
  }
  return "Unknown";
}

void IntegratorOptions::validate() const {
  auto positive = [](double v) { return v > 0.0; };
  if (!positive(relTol) || !positive(absTol) || !positive(maxStep) || !positive(psiFloor) ||
      !positive(fixedStep) || maxSamples < 2)
    throw Error(ErrorCode::InvalidArgument, "integrator options must be positive");
  if (!(speedEventEpsilon > 0.0 && speedEventEpsilon < 1.0))
    throw Error(ErrorCode::InvalidArgument, "speed event epsilon must lie in (0, 1)");
}

namespace {

struct FieldValue {
  Vec3 v;
  double density;
  double sDev;
};

FieldValue evaluateField(const WaveFunctionModel& model, double t, const Vec3& q,
                         double floor) {
  const Spinor psi = model.evaluate({t, q});
  const FourVector j = current(psi);
  if (!(j.t > floor)) {
    std::ostringstream os;
    os << "trajectory reached a node at t = " << t << ", q = (" << q.x() << ", " << q.y()
       << ", " << q.z() << "), psi^dag psi = " << j.t;
    throw Error(ErrorCode::NearNode, os.str());
  }
  const LorentzInvariants li = lorentzInvariants(psi);
  return {j.space / j.t, j.t, std::hypot(li.scalar, li.pseudoscalar) / j.t};
}

TrajectorySample makeSample(double t, const Vec3& q, const FieldValue& f) {
  return {t, q, f.v, f.v.norm(), f.sDev, f.density};
}

// Dormand-Prince 5(4) coefficients.
namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
} // namespace dp

} // namespace

class TrajectoryBuilder {
public:
  TrajectoryBuilder(const ModelPtr& model, const IntegratorOptions& opts)
      : model_(*model), opts_(opts) {
    traj_.model_ = model;
    traj_.psiFloor_ = opts.psiFloor;
  }

  Trajectory run(const Vec3& q0, double t1, double t2);

private:
  FieldValue field(double t, const Vec3& q) const {
    return evaluateField(model_, t, q, opts_.psiFloor);
  }

  void accept(double t, const Vec3& q, const FieldValue& f, const std::array<Vec3, 5>& r) {
    traj_.dense_.push_back({r});
    traj_.samples_.push_back(makeSample(t, q, f));
  }

  // Returns false when the integration should stop after this sample.
  bool afterAccept(double t, const Vec3& q) {
    if (opts_.domain && !opts_.domain->contains(q)) {
      traj_.events_.push_back({EventKind::LeftDomain, t, t});
      traj_.termination_ = Termination::LeftDomain;
      return false;
    }
    return true;
  }

  const WaveFunctionModel& model_;
  const IntegratorOptions& opts_;
  Trajectory traj_;
};

Trajectory TrajectoryBuilder::run(const Vec3& q0, double t1, double t2) {
  FieldValue f0 = field(t1, q0); // NearNode at start propagates
  traj_.samples_.push_back(makeSample(t1, q0, f0));

  double t = t1;
  Vec3 y = q0;
  const double span = t2 - t1;
  double h = opts_.fixedStepRk4 ? opts_.fixedStep : std::min(opts_.maxStep, 1e-2 * span);
  const double hMin = 1e-14 * std::max({1.0, std::abs(t1), std::abs(t2)});

  bool running = afterAccept(t, y);
  while (running && t < t2) {
    if (traj_.samples_.size() >= opts_.maxSamples) {
      traj_.termination_ = Termination::MaxSamples;
      break;
    }
    h = std::min({h, opts_.maxStep, t2 - t});
    bool last = (t + h >= t2);
    try {
      if (opts_.fixedStepRk4) {
        const Vec3 k1 = f0.v;
        const Vec3 k2 = field(t + 0.5 * h, y + 0.5 * h * k1).v;
        const Vec3 k3 = field(t + 0.5 * h, y + 0.5 * h * k2).v;
        const Vec3 k4 = field(t + h, y + h * k3).v;
        const Vec3 yNew = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        const double tNew = last ? t2 : t + h;
        const FieldValue fNew = field(tNew, yNew);
        std::array<Vec3, 5> r;
        r[0] = y;
        r[1] = yNew - y;
        r[2] = h * k1 - r[1];
        r[3] = r[1] - h * fNew.v - r[2];
        r[4] = Vec3::Zero();
        accept(tNew, yNew, fNew, r);
        t = tNew;
        y = yNew;
        f0 = fNew;
        if (!afterAccept(t, y))
          break;
        continue;
      }

      using namespace dp;
      const Vec3 k1 = f0.v;
      const Vec3 k2 = field(t + c2 * h, y + h * (a21 * k1)).v;
      const Vec3 k3 = field(t + c3 * h, y + h * (a31 * k1 + a32 * k2)).v;
      const Vec3 k4 = field(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3)).v;
      const Vec3 k5 = field(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).v;
      const Vec3 k6 =
          field(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).v;
      const Vec3 yNew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const double tNew = last ? t2 : t + h;
      const FieldValue f7 = field(tNew, yNew);
      const Vec3 k7 = f7.v;
      const Vec3 errVec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

      double err = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double sc = opts_.absTol + opts_.relTol * std::max(std::abs(y[i]), std::abs(yNew[i]));
        err += (errVec[i] / sc) * (errVec[i] / sc);
      }
      err = std::sqrt(err / 3.0);

      if (err <= 1.0) {
        std::array<Vec3, 5> r;
        r[0] = y;
        r[1] = yNew - y;
        r[2] = h * k1 - r[1];
        r[3] = r[1] - h * k7 - r[2];
        r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
        accept(tNew, yNew, f7, r);
        t = tNew;
        y = yNew;
        f0 = f7;
        const double fac = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(fac, 0.2, 5.0);
        if (!afterAccept(t, y))
          break;
      } else {
        h *= std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
        if (h < hMin) {
          std::ostringstream os;
          os << "step size underflow at t = " << t;
          throw Error(ErrorCode::StepFailure, os.str());
        }
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NearNode)
        throw;
      traj_.events_.push_back({EventKind::NearNode, t, t});
      traj_.termination_ = Termination::NearNode;
      break;
    }
  }

  if (opts_.recordEvents) {
    std::vector<TrajectoryEvent> events;
    for (const auto& iv : detectSpeedCEvents(traj_, opts_.speedEventEpsilon))
      events.push_back({EventKind::SpeedC, iv.start, iv.end});
    events.insert(events.end(), traj_.events_.begin(), traj_.events_.end());
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.tStart < b.tStart; });
    traj_.events_ = std::move(events);
  }
  return std::move(traj_);
}

Vec3 velocityField(const WaveFunctionModel& model, double t, const Vec3& q, double psiFloor) {
  return evaluateField(model, t, q, psiFloor).v;
}

double Trajectory::maxSpeed() const {
  double m = 0.0;
  for (const auto& s : samples_)
    m = std::max(m, s.speed);
  return m;
}

Vec3 Trajectory::positionAt(double t) const {
  if (samples_.empty())
    throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  if (t <= samples_.front().t)
    return samples_.front().q;
  if (t >= samples_.back().t)
    return samples_.back().q;
  auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                             [](double v, const TrajectorySample& s) { return v < s.t; });
  const auto i = static_cast<std::size_t>(std::distance(samples_.begin(), it)) - 1;
  const double t0 = samples_[i].t, h = samples_[i + 1].t - t0;
  const double th = (t - t0) / h, th1 = 1.0 - th;
  const auto& r = dense_[i].r;
  return r[0] + th * (r[1] + th1 * (r[2] + th * (r[3] + th1 * r[4])));
}

double Trajectory::speedAt(double t) const {
  return velocityField(*model_, t, positionAt(t), psiFloor_).norm();
}

Trajectory integrate(const ModelPtr& model, const Vec3& q0, double t1, double t2,
                     const IntegratorOptions& opts) {
  if (!model)
    throw Error(ErrorCode::InvalidArgument, "integrate called without a model");
  opts.validate();
  if (!(t1 < t2))
    throw Error(ErrorCode::InvalidArgument, "integration interval needs t1 < t2");
  return TrajectoryBuilder(model, opts).run(q0, t1, t2);
}

std::vector<TimeInterval> detectSpeedCEvents(const Trajectory& traj, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw Error(ErrorCode::InvalidArgument, "speed event epsilon must lie in (0, 1)");
  const auto& s = traj.samples();
  std::vector<TimeInterval> out;
  if (s.empty())
    return out;
  const double threshold = 1.0 - epsilon;
  const double tol = 1e-9 * std::max(s.back().t - s.front().t, 1e-300);

  // Crossing between a (above == aboveA) and b; returns the first time at or
  // above threshold when rising, the last time above when falling.
  auto locate = [&](double a, double b, bool rising) {
    while (b - a > tol) {
      const double m = 0.5 * (a + b);
      const bool above = traj.speedAt(m) >= threshold;
      if (above == rising)
        b = m;
      else
        a = m;
    }
    return rising ? b : a;
  };

  bool active = s.front().speed >= threshold;
  double start = s.front().t;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const bool next = s[i + 1].speed >= threshold;
    if (!active && next) {
      start = locate(s[i].t, s[i + 1].t, true);
      active = true;
    } else if (active && !next) {
      out.push_back({start, locate(s[i].t, s[i + 1].t, false)});
      active = false;
    }
  }
  if (active)
    out.push_back({start, s.back().t});
  return out;
}

} // namespace bohm
