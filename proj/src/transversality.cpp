#include "bohm/transversality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/SVD>

#include "bohm/ensemble.hpp"
#include "bohm/error.hpp"
#include "bohm/parallel.hpp"

namespace bohm {

std::string_view toString(Verdict v) {
  switch (v) {
  case Verdict::Empty: return "Empty";
  case Verdict::TransverseCodim2: return "TransverseCodim2";
  case Verdict::Degenerate: return "Degenerate";
  case Verdict::MarginBelowTol: return "MarginBelowTol";
  }
  return "Unknown";
}

void CompactBox::validate() const {
  if (!(t1 < t2) || !(lo.array() < hi.array()).all())
    throw Error(ErrorCode::InvalidArgument, "compact box needs t1 < t2 and lo < hi");
  for (int r : resolution)
    if (r < 2)
      throw Error(ErrorCode::InvalidArgument, "compact box needs resolution >= 2 per axis");
}

void SigmaOptions::validate() const {
  if (!(newtonTol > 0.0) || maxIter < 1 || !(marginTol > 0.0) || !(degenerateTol > 0.0) ||
      !(degenerateFraction > 0.0 && degenerateFraction < 1.0) || !(seedFraction >= 0.0) ||
      maxSeeds < 1 || !(dedupTol > 0.0) || !(psiFloor > 0.0))
    throw Error(ErrorCode::InvalidArgument, "invalid Sigma search options");
}

namespace {

const Mat4c& scalarM() {
  static const Mat4c m = DiracAlgebra::standard().scalarMatrix();
  return m;
}

const Mat4c& pseudoscalarM() {
  static const Mat4c m = DiracAlgebra::standard().pseudoscalarMatrix();
  return m;
}

struct Constraint {
  double s, p, rho;
};

Constraint constraintOf(const Spinor& psi) {
  return {psi.dot(scalarM() * psi).real(), psi.dot(pseudoscalarM() * psi).real(),
          psi.squaredNorm()};
}

ConstraintJacobian jacobianOf(const ValueAndGradient& vg) {
  const Spinor sPsi = scalarM() * vg.value;
  const Spinor pPsi = pseudoscalarM() * vg.value;
  ConstraintJacobian j;
  for (int mu = 0; mu < 4; ++mu) {
    const Spinor& d = vg.gradient[static_cast<std::size_t>(mu)];
    j(0, mu) = 2.0 * sPsi.dot(d).real();
    j(1, mu) = 2.0 * pPsi.dot(d).real();
  }
  return j;
}

SpacetimePoint toPoint(const Eigen::Vector4d& v) { return {v[0], Vec3(v[1], v[2], v[3])}; }

std::optional<SigmaPoint> newton(const WaveFunctionModel& model, Eigen::Vector4d x,
                                 const CompactBox& box, const SigmaOptions& opts) {
  const Eigen::Vector4d lower = box.lower(), upper = box.upper();
  for (int it = 0; it <= opts.maxIter; ++it) {
    const SpacetimePoint pt = toPoint(x);
    const ValueAndGradient vg = model.evaluateWithGradient(pt);
    const Constraint c = constraintOf(vg.value);
    if (!(c.rho > opts.psiFloor))
      return std::nullopt;
    const double residual = std::hypot(c.s, c.p) / c.rho;
    const ConstraintJacobian jac = jacobianOf(vg);
    if (residual < opts.newtonTol) {
      Eigen::JacobiSVD<ConstraintJacobian> svd(jac / c.rho);
      const auto& sv = svd.singularValues();
      SigmaPoint sp;
      sp.x = pt;
      sp.residual = residual;
      sp.margin = sv(1);
      sp.psiNorm = c.rho;
      sp.rank = static_cast<int>((sv.array() > opts.marginTol).count());
      return sp;
    }
    if (it == opts.maxIter)
      break;
    // Minimum-norm least-squares step.
    Eigen::JacobiSVD<ConstraintJacobian> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector4d step = svd.solve(Eigen::Vector2d(-c.s, -c.p));
    if (!step.allFinite())
      return std::nullopt;
    x = (x + step).cwiseMax(lower).cwiseMin(upper);
  }
  return std::nullopt;
}

} // namespace

std::array<double, 2> constraintValue(const WaveFunctionModel& model, const SpacetimePoint& x,
                                      double psiFloor) {
  const Constraint c = constraintOf(model.evaluate(x));
  if (!(c.rho > psiFloor)) {
    std::ostringstream os;
    os << "psi vanishes at t = " << x.t << " (psi^dag psi = " << c.rho << ")";
    throw Error(ErrorCode::ZeroSpinor, os.str());
  }
  return {c.s, c.p};
}

ConstraintJacobian constraintJacobian(const WaveFunctionModel& model, const SpacetimePoint& x) {
  return jacobianOf(model.evaluateWithGradient(x));
}

SigmaSearch locateSigma(const WaveFunctionModel& model, const CompactBox& box,
                        const SigmaOptions& opts) {
  box.validate();
  opts.validate();
  const std::array<std::size_t, 4> res{static_cast<std::size_t>(box.resolution[0]),
                                       static_cast<std::size_t>(box.resolution[1]),
                                       static_cast<std::size_t>(box.resolution[2]),
                                       static_cast<std::size_t>(box.resolution[3])};
  const std::size_t total = res[0] * res[1] * res[2] * res[3];
  const Eigen::Vector4d lower = box.lower(), upper = box.upper();

  auto nodePoint = [&](std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
    const std::array<std::size_t, 4> idx{i0, i1, i2, i3};
    Eigen::Vector4d v;
    for (int a = 0; a < 4; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      v[a] = lower[a] + (upper[a] - lower[a]) * static_cast<double>(idx[ua]) /
                            static_cast<double>(res[ua] - 1);
    }
    return v;
  };
  auto flat = [&](std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) {
    return ((i0 * res[1] + i1) * res[2] + i2) * res[3] + i3;
  };

  // Grid scan: normalized residual and signs of s, p.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> resid(total, inf);
  std::vector<double> sVal(total, 0.0), pVal(total, 0.0);
  parallelFor(res[0], opts.threads, [&](std::size_t i0) {
    for (std::size_t i1 = 0; i1 < res[1]; ++i1)
      for (std::size_t i2 = 0; i2 < res[2]; ++i2)
        for (std::size_t i3 = 0; i3 < res[3]; ++i3) {
          const std::size_t f = flat(i0, i1, i2, i3);
          const Constraint c = constraintOf(model.evaluate(toPoint(nodePoint(i0, i1, i2, i3))));
          if (c.rho > opts.psiFloor) {
            resid[f] = std::hypot(c.s, c.p) / c.rho;
            sVal[f] = c.s;
            pVal[f] = c.p;
          }
        }
  });

  SigmaSearch out;
  out.gridPoints = total;
  std::vector<double> finite;
  finite.reserve(total);
  for (double r : resid) {
    if (r == inf) {
      ++out.gridZeroCount;
      continue;
    }
    finite.push_back(r);
    if (r < opts.degenerateTol)
      ++out.gridBelowDegenerateTol;
  }
  if (finite.empty())
    return out;
  std::nth_element(finite.begin(), finite.begin() + static_cast<std::ptrdiff_t>(finite.size() / 2),
                   finite.end());
  const double median = finite[finite.size() / 2];
  const double threshold = std::max(opts.seedFraction * median, opts.degenerateTol);

  // Candidate cells: both invariants change sign across the corners, or the
  // smallest corner residual is below the adaptive threshold.
  struct Candidate {
    double minResidual;
    std::size_t corner;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i0 = 0; i0 + 1 < res[0]; ++i0)
    for (std::size_t i1 = 0; i1 + 1 < res[1]; ++i1)
      for (std::size_t i2 = 0; i2 + 1 < res[2]; ++i2)
        for (std::size_t i3 = 0; i3 + 1 < res[3]; ++i3) {
          bool sPos = false, sNeg = false, pPos = false, pNeg = false, hasZero = false;
          double best = inf;
          std::size_t bestCorner = 0;
          for (unsigned m = 0; m < 16; ++m) {
            const std::size_t f = flat(i0 + (m & 1u), i1 + ((m >> 1) & 1u),
                                       i2 + ((m >> 2) & 1u), i3 + ((m >> 3) & 1u));
            if (resid[f] == inf) {
              hasZero = true;
              continue;
            }
            sPos |= sVal[f] >= 0.0;
            sNeg |= sVal[f] <= 0.0;
            pPos |= pVal[f] >= 0.0;
            pNeg |= pVal[f] <= 0.0;
            if (resid[f] < best) {
              best = resid[f];
              bestCorner = f;
            }
          }
          if (best == inf)
            continue;
          const bool straddles = sPos && sNeg && pPos && pNeg;
          if (straddles || best < threshold || (hasZero && best < median))
            candidates.push_back({best, bestCorner});
        }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.minResidual != b.minResidual ? a.minResidual < b.minResidual : a.corner < b.corner;
  });
  std::vector<std::size_t> seeds;
  {
    std::vector<char> used(total, 0);
    for (const auto& c : candidates) {
      if (used[c.corner])
        continue;
      used[c.corner] = 1;
      seeds.push_back(c.corner);
      if (seeds.size() >= opts.maxSeeds)
        break;
    }
  }
  out.seedCount = seeds.size();

  std::vector<std::optional<SigmaPoint>> found(seeds.size());
  parallelFor(seeds.size(), opts.threads, [&](std::size_t i) {
    std::size_t f = seeds[i];
    const std::size_t i3 = f % res[3];
    f /= res[3];
    const std::size_t i2 = f % res[2];
    f /= res[2];
    const std::size_t i1 = f % res[1];
    const std::size_t i0 = f / res[1];
    found[i] = newton(model, nodePoint(i0, i1, i2, i3), box, opts);
  });

  for (const auto& f : found) {
    if (!f)
      continue;
    ++out.convergedCount;
    const Eigen::Vector4d xf(f->x.t, f->x.q.x(), f->x.q.y(), f->x.q.z());
    const bool duplicate = std::any_of(out.points.begin(), out.points.end(), [&](const SigmaPoint& p) {
      const Eigen::Vector4d xp(p.x.t, p.x.q.x(), p.x.q.y(), p.x.q.z());
      return (xp - xf).norm() < opts.dedupTol;
    });
    if (!duplicate)
      out.points.push_back(*f);
  }
  return out;
}

TransversalityReport transversalityReport(const WaveFunctionModel& model, const CompactBox& box,
                                          const SigmaOptions& opts) {
  SigmaSearch search = locateSigma(model, box, opts);
  TransversalityReport r;
  r.seedCount = search.seedCount;
  r.convergedCount = search.convergedCount;
  r.gridZeroCount = search.gridZeroCount;
  r.degenerateGridFraction = search.gridPoints
                                 ? static_cast<double>(search.gridBelowDegenerateTol) /
                                       static_cast<double>(search.gridPoints)
                                 : 0.0;
  r.points = std::move(search.points);
  r.minMargin = 0.0;
  if (!r.points.empty()) {
    r.minMargin = r.points.front().margin;
    for (const auto& p : r.points)
      r.minMargin = std::min(r.minMargin, p.margin);
  }

  if (r.degenerateGridFraction > opts.degenerateFraction)
    r.verdict = Verdict::Degenerate;
  else if (r.points.empty())
    r.verdict = Verdict::Empty;
  else if (std::all_of(r.points.begin(), r.points.end(), [&](const SigmaPoint& p) {
             return p.psiNorm > opts.psiFloor && p.margin > opts.marginTol;
           }))
    r.verdict = Verdict::TransverseCodim2;
  else
    r.verdict = Verdict::MarginBelowTol;
  return r;
}

ModelPtr perturbedModel(const ModelPtr& base, const PerturbationSpec& spec, int trial,
                        std::array<cplx, 4>* coefficients) {
  if (!(spec.amplitude >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "perturbation amplitude must be >= 0");
  auto rng = substream(spec.seed, static_cast<std::uint64_t>(trial));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<cplx, 4> c;
  for (auto& ci : c) {
    const double re = normal(rng);
    const double im = normal(rng);
    ci = spec.amplitude * cplx(re, im);
  }
  if (coefficients)
    *coefficients = c;
  auto waves = std::make_shared<const Superposition>(fourWaves(spec.waveNumber, base->mass(), c),
                                                     base->mass());
  return std::make_shared<const SumModel>(std::vector<ModelPtr>{base, waves});
}

PerturbationStats perturbAndCompare(const ModelPtr& base, const PerturbationSpec& spec,
                                    const CompactBox& box, const SigmaOptions& opts) {
  if (spec.trials < 1)
    throw Error(ErrorCode::InvalidArgument, "perturbation needs >= 1 trial");
  PerturbationStats st;
  st.amplitude = spec.amplitude;
  const TransversalityReport baseReport = transversalityReport(*base, box, opts);
  st.baseVerdict = baseReport.verdict;
  st.baseDegenerateGridFraction = baseReport.degenerateGridFraction;

  std::size_t transverse = 0;
  double degenerateSum = 0.0;
  for (int trial = 0; trial < spec.trials; ++trial) {
    PerturbationTrial t;
    const ModelPtr model = perturbedModel(base, spec, trial, &t.coefficients);
    const TransversalityReport r = transversalityReport(*model, box, opts);
    t.verdict = r.verdict;
    t.minMargin = r.minMargin;
    t.points = r.points.size();
    t.minRank = r.points.empty() ? 0 : 2;
    t.maxRank = 0;
    for (const auto& p : r.points) {
      t.minRank = std::min(t.minRank, p.rank);
      t.maxRank = std::max(t.maxRank, p.rank);
    }
    t.degenerateGridFraction = r.degenerateGridFraction;
    transverse += r.verdict == Verdict::TransverseCodim2 ? 1u : 0u;
    degenerateSum += r.degenerateGridFraction;
    st.trials.push_back(t);
  }
  st.transverseFraction = static_cast<double>(transverse) / spec.trials;
  st.meanDegenerateGridFraction = degenerateSum / spec.trials;
  return st;
}

} // namespace bohm
