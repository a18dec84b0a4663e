#include "hkbary/barycenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hkbary/entropy.hpp"

namespace hkbary {

namespace {

using Support = std::vector<std::size_t>;

void check_budget(std::span<const std::size_t> extents, std::size_t budget, const char* what) {
  double entries = 1.0;
  for (auto e : extents) entries *= static_cast<double>(e);
  if (entries > static_cast<double>(budget)) {
    throw MemoryBudgetExceeded(std::string(what) + ": tensor with " + std::to_string(entries) +
                               " entries exceeds budget of " + std::to_string(budget));
  }
}

std::vector<Support> supports_of(const BarycenterProblem& p) {
  std::vector<Support> out;
  for (const auto& m : p.measures) out.push_back(m.support());
  return out;
}

std::vector<Point> points_of(const GroundGrid& grid, const Support& support) {
  std::vector<Point> pts;
  pts.reserve(support.size());
  for (auto i : support) pts.push_back(grid.point(i));
  return pts;
}

std::vector<double> masses_of(const DiscreteMeasure& m, const Support& support) {
  std::vector<double> out;
  out.reserve(support.size());
  for (auto i : support) out.push_back(m[i]);
  return out;
}

std::vector<double> embed(const std::vector<double>& on_support, const Support& support,
                          std::size_t grid_size) {
  std::vector<double> full(grid_size, 0.0);
  for (std::size_t k = 0; k < support.size(); ++k) full[support[k]] = on_support[k];
  return full;
}

MarginalPenalty input_penalty(double lambda) {
  return lambda > 0.0 ? MarginalPenalty::soft(lambda) : MarginalPenalty::free();
}

double input_mass(const BarycenterProblem& p) {
  double s = 0.0;
  for (const auto& m : p.measures) s += total_mass(m);
  return s;
}

bool numerically_zero(const TransportPlan& plan, const BarycenterProblem& p) {
  const double t = plan.total_mass();
  return !(t > kZeroPlanRelativeMass * input_mass(p));
}

// <cost, plan> + sum_i lambda_i KL(plan_i | mu_i), marginals taken on the
// full input grids.
double soft_value(const TransportPlan& plan, std::span<const double> cost,
                  const std::vector<Support>& supports, const BarycenterProblem& p) {
  double value = 0.0;
  for (std::size_t e = 0; e < plan.mass.size(); ++e) {
    if (plan.mass[e] > 0.0) value += cost[e] * plan.mass[e];
  }
  for (std::size_t i = 0; i < p.measures.size(); ++i) {
    if (p.lambdas[i] == 0.0) continue;
    const auto full = embed(plan.marginal(i), supports[i], p.measures[i].size());
    value += p.lambdas[i] * divergence(full, p.measures[i].masses(), EntropyKind::KL);
  }
  return value;
}

// One inner problem of the coupled formulations between mu and nu.
double two_marginal_value(const DiscreteMeasure& mu, const DiscreteMeasure& nu, bool hard_nu,
                          const BarycenterProblem& p) {
  const Support su = mu.support();
  const Support sn = nu.support();
  const auto pu = points_of(mu.grid(), su);
  const auto pn = points_of(nu.grid(), sn);
  Tensor cost({su.size(), sn.size()}, 0.0);
  for (std::size_t a = 0; a < su.size(); ++a) {
    for (std::size_t b = 0; b < sn.size(); ++b) {
      cost.values[a * sn.size() + b] = ground_cost(pu[a], pn[b], p.cost);
    }
  }
  check_budget(cost.extents, p.memory_budget, "two-marginal problem");
  const std::vector<std::vector<double>> targets{masses_of(mu, su), masses_of(nu, sn)};
  const std::vector<MarginalPenalty> penalties{
      MarginalPenalty::soft(1.0), hard_nu ? MarginalPenalty::hard() : MarginalPenalty::soft(1.0)};
  const auto res = anneal(cost, targets, penalties, p.solver);
  if (res.report.infeasible) return kInfinity;

  double value = 0.0;
  for (std::size_t e = 0; e < res.plan.mass.size(); ++e) {
    if (res.plan.mass[e] > 0.0) value += cost.values[e] * res.plan.mass[e];
  }
  value += divergence(embed(res.plan.marginal(0), su, mu.size()), mu.masses(), EntropyKind::KL);
  if (!hard_nu) {
    value += divergence(embed(res.plan.marginal(1), sn, nu.size()), nu.masses(), EntropyKind::KL);
  }
  return value;
}

double coupled_value(const DiscreteMeasure& nu, const BarycenterProblem& p, bool hard_nu) {
  p.validate();
  if (!nu.grid_ptr() || !(nu.grid() == *p.candidates)) {
    throw GridMismatch("candidate measure must live on the candidate grid");
  }
  double value = 0.0;
  for (std::size_t i = 0; i < p.measures.size(); ++i) {
    if (p.lambdas[i] == 0.0) continue;
    const double v = two_marginal_value(p.measures[i], nu, hard_nu, p);
    if (std::isinf(v)) return kInfinity;
    value += p.lambdas[i] * v;
  }
  return value;
}

double enclosing_radius(const std::vector<Point>& pts, Point& center) {
  auto covers = [&](const Point& c, double r) {
    for (const auto& q : pts) {
      if (distance(c, q) > r * (1.0 + 1e-12) + 1e-15) return false;
    }
    return true;
  };
  double best = std::numeric_limits<double>::infinity();
  center = pts.front();
  if (covers(center, 0.0)) return 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Point c{(pts[i][0] + pts[j][0]) / 2, (pts[i][1] + pts[j][1]) / 2};
      const double r = distance(pts[i], pts[j]) / 2;
      if (r < best && covers(c, r)) {
        best = r;
        center = c;
      }
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const double ax = pts[i][0], ay = pts[i][1];
        const double bx = pts[j][0], by = pts[j][1];
        const double cx = pts[k][0], cy = pts[k][1];
        const double d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by));
        if (d == 0.0) continue;
        const double a2 = ax * ax + ay * ay, b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
        const Point cc{(a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d,
                       (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d};
        const double rr = distance(cc, pts[i]);
        if (rr < best && covers(cc, rr)) {
          best = rr;
          center = cc;
        }
      }
    }
  }
  return best;
}

}  // namespace

void BarycenterProblem::validate() const {
  if (measures.size() < 2) throw std::invalid_argument("at least two input measures required");
  if (lambdas.size() != measures.size()) throw std::invalid_argument("one weight per measure required");
  validate_weights(lambdas);
  if (!candidates) throw std::invalid_argument("candidate grid required");
  for (const auto& m : measures) {
    if (!m.grid_ptr()) throw std::invalid_argument("input measure without a grid");
    if (m.grid().dim() != candidates->dim()) {
      throw GridMismatch("input and candidate grids differ in dimension");
    }
  }
  solver.validate();
}

BarycenterSolution solve_smm(const BarycenterProblem& p) {
  p.validate();
  BarycenterSolution sol;
  sol.supports = supports_of(p);
  const std::size_t n = p.measures.size();
  std::vector<std::size_t> extents;
  for (const auto& s : sol.supports) extents.push_back(s.size());
  check_budget(extents, p.memory_budget, "solve_smm");

  std::vector<std::vector<Point>> axes;
  std::vector<std::vector<double>> targets;
  std::vector<MarginalPenalty> penalties;
  for (std::size_t i = 0; i < n; ++i) {
    axes.push_back(points_of(p.measures[i].grid(), sol.supports[i]));
    targets.push_back(masses_of(p.measures[i], sol.supports[i]));
    penalties.push_back(input_penalty(p.lambdas[i]));
  }
  sol.table = least_cost_table(axes, p.candidates, p.lambdas, p.cost, {p.mode});
  Tensor cost;
  cost.extents = extents;
  cost.values = sol.table.values;

  auto res = anneal(cost, targets, penalties, p.solver);
  sol.plan = std::move(res.plan);
  sol.report = std::move(res.report);
  if (numerically_zero(sol.plan, p)) {
    std::fill(sol.plan.mass.begin(), sol.plan.mass.end(), 0.0);
    sol.zero_plan = true;
  }
  sol.value = soft_value(sol.plan, cost.values, sol.supports, p);

  std::vector<double> nu(p.candidates->size(), 0.0);
  for (std::size_t e = 0; e < sol.plan.mass.size(); ++e) {
    const double g = sol.plan.mass[e];
    if (!(g > 0.0)) continue;
    nu[sol.table.argmin_index[e]] += g;
    if (p.mode == ArgminMode::Continuous) sol.atoms.push_back({sol.table.argmin_point[e], g});
  }
  sol.barycenter = DiscreteMeasure(p.candidates, std::move(nu));
  return sol;
}

DiscreteMeasure plan_marginal(const BarycenterSolution& s, const BarycenterProblem& p,
                              std::size_t axis) {
  if (axis >= p.measures.size()) throw std::out_of_range("plan axis out of range");
  return DiscreteMeasure(p.measures[axis].grid_ptr(),
                         embed(s.plan.marginal(axis), s.supports[axis], p.measures[axis].size()));
}

ExtendedSolution solve_extended_smm(const BarycenterProblem& p) {
  p.validate();
  const auto supports = supports_of(p);
  const std::size_t n = p.measures.size();
  const auto cand = p.candidates->points();
  std::vector<std::size_t> extents;
  for (const auto& s : supports) extents.push_back(s.size());
  extents.push_back(cand.size());
  check_budget(extents, p.memory_budget, "solve_extended_smm");

  std::vector<std::vector<double>> targets;
  std::vector<MarginalPenalty> penalties;
  std::vector<CostMatrix> per_axis;
  for (std::size_t i = 0; i < n; ++i) {
    const auto pts = points_of(p.measures[i].grid(), supports[i]);
    per_axis.push_back(cost_matrix(pts, cand, p.cost));
    targets.push_back(masses_of(p.measures[i], supports[i]));
    penalties.push_back(input_penalty(p.lambdas[i]));
  }
  targets.emplace_back();
  penalties.push_back(MarginalPenalty::free());

  Tensor cost(extents, 0.0);
  std::vector<std::size_t> idx(n + 1, 0);
  for (std::size_t e = 0; e < cost.size(); ++e) {
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (p.lambdas[i] == 0.0) continue;
      v += p.lambdas[i] * per_axis[i](idx[i], idx[n]);
    }
    cost.values[e] = v;
    for (std::size_t a = n + 1; a-- > 0;) {
      if (++idx[a] < extents[a]) break;
      idx[a] = 0;
    }
  }

  auto res = anneal(cost, targets, penalties, p.solver);
  ExtendedSolution out;
  out.plan = std::move(res.plan);
  out.report = std::move(res.report);
  if (numerically_zero(out.plan, p)) std::fill(out.plan.mass.begin(), out.plan.mass.end(), 0.0);
  out.value = soft_value(out.plan, cost.values, supports, p);
  return out;
}

double evaluate_cc2m(const DiscreteMeasure& nu, const BarycenterProblem& p) {
  return coupled_value(nu, p, true);
}

double evaluate_c2m(const DiscreteMeasure& nu, const BarycenterProblem& p) {
  return coupled_value(nu, p, false);
}

ConicPlan lift_to_cone(const BarycenterSolution& s, const BarycenterProblem& p) {
  const std::size_t n = p.measures.size();
  ConicPlan alpha;
  std::vector<std::vector<double>> rho(n);
  std::vector<std::vector<double>> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    alpha.grids.push_back(p.measures[i].grid_ptr());
    const auto marginal = plan_marginal(s, p, i);
    auto dec = density_ratios(marginal, p.measures[i]);
    if (dec.gamma_perp_mass > 0.0) {
      throw std::invalid_argument("plan marginal is not absolutely continuous w.r.t. its input");
    }
    rho[i] = std::move(dec.rho);
    h[i].assign(p.measures[i].size(), 0.0);
  }
  const auto& plan = s.plan;
  std::vector<std::size_t> idx(n, 0);
  for (std::size_t e = 0; e < plan.mass.size(); ++e) {
    const double g = plan.mass[e];
    if (g > 0.0) {
      ConicAtom atom;
      atom.mass = g;
      atom.least_cost = s.table.values[e];
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t x = s.supports[i][idx[i]];
        atom.xs.push_back(p.measures[i].grid().point(x));
        atom.s.push_back(rho[i][x]);
        h[i][x] += rho[i][x] * g;
      }
      alpha.atoms.push_back(std::move(atom));
    }
    for (std::size_t a = n; a-- > 0;) {
      if (++idx[a] < plan.extents[a]) break;
      idx[a] = 0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) alpha.homogeneous.emplace_back(alpha.grids[i], std::move(h[i]));
  return alpha;
}

double conic_cost(const ConicPlan& alpha, const BarycenterProblem& p) {
  double value = 0.0;
  for (const auto& atom : alpha.atoms) {
    value += atom.mass * perspective_mm(atom.s, p.lambdas, atom.least_cost);
  }
  return value;
}

double conic_objective(const ConicPlan& alpha, const BarycenterProblem& p) {
  double value = conic_cost(alpha, p);
  for (std::size_t i = 0; i < p.measures.size(); ++i) {
    const double h = alpha.homogeneous.empty() ? 0.0 : total_mass(alpha.homogeneous[i]);
    value += p.lambdas[i] * R_INF_SLOPE * (total_mass(p.measures[i]) - h);
  }
  return value;
}

std::optional<DiracBarycenter> dirac_barycenter(const std::vector<Point>& points,
                                                const std::vector<double>& masses,
                                                const std::vector<double>& lambdas,
                                                GroundCostKind kind, int dim) {
  if (points.size() != masses.size() || points.size() != lambdas.size() || points.empty()) {
    throw std::invalid_argument("dirac_barycenter: one point, mass and weight per input");
  }
  if (dim != 1 && dim != 2) throw std::invalid_argument("dirac_barycenter: dim must be 1 or 2");
  validate_weights(lambdas);
  double log_mass = 0.0;
  std::vector<Point> active;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(masses[i]) || masses[i] < 0.0) {
      throw std::invalid_argument("dirac_barycenter: masses must be finite and >= 0");
    }
    if (lambdas[i] == 0.0) continue;
    if (masses[i] == 0.0) return std::nullopt;
    log_mass += lambdas[i] * std::log(masses[i]);
    Point q = points[i];
    if (dim == 1) q[1] = 0.0;
    active.push_back(q);
  }

  Point center;
  const double radius = enclosing_radius(active, center);
  if (kind == GroundCostKind::HK && !(radius < std::numbers::pi / 2)) return std::nullopt;

  DiracBarycenter out;
  if (radius == 0.0) {
    out.point = active.front();
  } else if (kind == GroundCostKind::Quadratic) {
    Point mean{0.0, 0.0};
    for (std::size_t i = 0; i < points.size(); ++i) {
      mean[0] += lambdas[i] * points[i][0];
      if (dim == 2) mean[1] += lambdas[i] * points[i][1];
    }
    out.point = mean;
  } else {
    std::vector<Interval> box(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
      double lo = active.front()[a], hi = lo;
      for (const auto& q : active) {
        lo = std::min(lo, q[a]);
        hi = std::max(hi, q[a]);
      }
      if (hi - lo < 1e-9) {
        lo -= 1e-9;
        hi += 1e-9;
      }
      box[static_cast<std::size_t>(a)] = {lo, hi};
    }
    const auto grid = GroundGrid::build(dim, box, 101);
    // The enclosing-ball center is feasible, so the seed cost is finite.
    Point seed = center;
    double best = weighted_cost(points, lambdas, seed, kind);
    for (const auto& q : grid.points()) {
      const double v = weighted_cost(points, lambdas, q, kind);
      if (v < best) {
        best = v;
        seed = q;
      }
    }
    const std::array<double, 2> width{2 * grid.spacing(0), dim == 2 ? 2 * grid.spacing(1) : 0.0};
    out.point = window_search(points, lambdas, kind, grid, seed, width, 60).first;
  }
  out.least_cost = weighted_cost(points, lambdas, out.point, kind);
  out.mass = std::exp(log_mass - out.least_cost);
  return out;
}

EqualityReport verify_equalities(const BarycenterProblem& p) {
  p.validate();
  std::vector<std::size_t> extents;
  for (const auto& m : p.measures) extents.push_back(m.support().size());
  extents.push_back(p.candidates->size());
  check_budget(extents, kVerifyMemoryBudget, "verify_equalities");

  EqualityReport r;
  r.solution = solve_smm(p);
  r.smm = r.solution.value;
  r.extended = solve_extended_smm(p).value;
  r.cc2m = evaluate_cc2m(r.solution.barycenter, p);
  r.conic = conic_objective(lift_to_cone(r.solution, p), p);
  r.gap_extended = std::abs(r.smm - r.extended);
  r.gap_cc2m = std::abs(r.smm - r.cc2m);
  r.gap_conic = std::abs(r.smm - r.conic);
  r.tolerance = std::max(1e-3, 1e-2 * r.smm);
  r.passed = r.gap_extended <= r.tolerance && r.gap_cc2m <= r.tolerance && r.gap_conic <= r.tolerance;
  return r;
}

}  // namespace hkbary
