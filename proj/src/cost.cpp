#include "hkbary/cost.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "hkbary/entropy.hpp"

namespace hkbary {

double ground_cost(const Point& x, const Point& y, GroundCostKind kind) {
  const double d = distance(x, y);
  if (kind == GroundCostKind::Quadratic) return d * d;
  if (d >= std::numbers::pi / 2) return kInfinity;
  const double c = std::cos(d);
  return -std::log(c * c);
}

double exp_neg(double c) { return std::isinf(c) && c > 0 ? 0.0 : std::exp(-c); }

double weighted_cost(std::span<const Point> xs, std::span<const double> lambdas, const Point& x,
                     GroundCostKind kind) {
  double v = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (lambdas[i] == 0.0) continue;
    v += lambdas[i] * ground_cost(xs[i], x, kind);
  }
  return v;
}

CostMatrix cost_matrix(std::span<const Point> a, std::span<const Point> b, GroundCostKind kind) {
  CostMatrix m{a.size(), b.size(), std::vector<double>(a.size() * b.size())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) m.values[i * b.size() + j] = ground_cost(a[i], b[j], kind);
  }
  return m;
}

CostMatrix cost_matrix(const GroundGrid& a, const GroundGrid& b, GroundCostKind kind) {
  if (a.dim() != b.dim()) throw GridMismatch("cost_matrix: grids have different dimensions");
  const auto pa = a.points();
  const auto pb = b.points();
  return cost_matrix(pa, pb, kind);
}

void validate_weights(std::span<const double> lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("weights must be nonempty");
  double sum = 0.0;
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("weights must be finite and >= 0");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to one");
}

std::size_t LeastCostTable::flat_index(std::span<const std::size_t> tuple) const {
  if (tuple.size() != extents.size()) throw std::invalid_argument("tuple has wrong arity");
  std::size_t flat = 0;
  for (std::size_t a = 0; a < extents.size(); ++a) {
    if (tuple[a] >= extents[a]) throw std::out_of_range("tuple index out of range");
    flat = flat * extents[a] + tuple[a];
  }
  return flat;
}

std::vector<std::size_t> LeastCostTable::tuple_of(std::size_t flat) const {
  std::vector<std::size_t> t(extents.size());
  for (std::size_t a = extents.size(); a-- > 0;) {
    t[a] = flat % extents[a];
    flat /= extents[a];
  }
  return t;
}

std::vector<Point> LeastCostTable::tuple_points(std::size_t flat) const {
  const auto t = tuple_of(flat);
  std::vector<Point> xs(t.size());
  for (std::size_t a = 0; a < t.size(); ++a) xs[a] = axes[a][t[a]];
  return xs;
}

std::pair<Point, double> window_search(std::span<const Point> xs, std::span<const double> lambdas,
                                       GroundCostKind kind, const GroundGrid& box, Point center,
                                       std::array<double, 2> half_width, int levels) {
  auto clip = [&](Point p) {
    for (int a = 0; a < box.dim(); ++a) {
      const auto& b = box.bounds()[static_cast<std::size_t>(a)];
      p[static_cast<std::size_t>(a)] = std::clamp(p[static_cast<std::size_t>(a)], b.lo, b.hi);
    }
    return p;
  };
  if (kind == GroundCostKind::Quadratic) {
    // isotropic quadratic: the clipped weighted mean is exact
    Point mean{0.0, 0.0};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mean[0] += lambdas[i] * xs[i][0];
      mean[1] += lambdas[i] * xs[i][1];
    }
    if (box.dim() == 1) mean[1] = center[1];
    mean = clip(mean);
    return {mean, weighted_cost(xs, lambdas, mean, kind)};
  }
  center = clip(center);
  double best = weighted_cost(xs, lambdas, center, kind);
  const int ny = box.dim() == 2 ? 9 : 1;
  for (int level = 0; level < levels; ++level) {
    Point next = center;
    for (int i = 0; i < 9; ++i) {
      for (int j = 0; j < ny; ++j) {
        Point p = center;
        p[0] += (i - 4) * half_width[0] / 4.0;
        if (ny > 1) p[1] += (j - 4) * half_width[1] / 4.0;
        p = clip(p);
        const double v = weighted_cost(xs, lambdas, p, kind);
        if (v < best) {
          best = v;
          next = p;
        }
      }
    }
    center = next;
    half_width[0] *= 0.5;
    half_width[1] *= 0.5;
  }
  return {center, best};
}

LeastCostTable least_cost_table(std::span<const std::vector<Point>> axes, GridPtr candidates,
                                std::span<const double> lambdas, GroundCostKind kind,
                                LeastCostOptions options) {
  validate_weights(lambdas);
  if (axes.size() != lambdas.size()) throw std::invalid_argument("one weight per input axis required");
  if (!candidates || candidates->size() == 0) throw std::invalid_argument("empty candidate grid");

  LeastCostTable table;
  table.axes.assign(axes.begin(), axes.end());
  table.candidates = candidates;
  table.lambdas.assign(lambdas.begin(), lambdas.end());
  table.kind = kind;
  table.mode = options.mode;
  std::size_t total = 1;
  for (const auto& ax : axes) {
    table.extents.push_back(ax.size());
    total *= ax.size();
  }
  table.values.assign(total, kInfinity);
  table.argmin_index.assign(total, 0);
  table.argmin_point.assign(total, Point{});
  table.feasible.assign(total, 0);
  if (total == 0) return table;

  const GroundGrid& grid = *candidates;
  const std::size_t n_axes = axes.size();
  const std::array<double, 2> cell{grid.spacing(0), grid.dim() == 2 ? grid.spacing(1) : 0.0};

  std::vector<CostMatrix> per_axis;
  std::vector<Point> cand_points;
  if (kind == GroundCostKind::HK) {
    cand_points = grid.points();
    for (const auto& ax : axes) per_axis.push_back(cost_matrix(ax, cand_points, kind));
  }

  std::vector<std::size_t> idx(n_axes, 0);
  std::vector<Point> xs(n_axes);
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t a = 0; a < n_axes; ++a) xs[a] = axes[a][idx[a]];

    if (kind == GroundCostKind::Quadratic) {
      Point mean{0.0, 0.0};
      for (std::size_t a = 0; a < n_axes; ++a) {
        mean[0] += lambdas[a] * xs[a][0];
        mean[1] += lambdas[a] * xs[a][1];
      }
      const std::size_t snapped = grid.nearest(mean);
      const Point target = options.mode == ArgminMode::Grid ? grid.point(snapped) : mean;
      table.argmin_index[flat] = snapped;
      table.argmin_point[flat] = target;
      table.values[flat] = weighted_cost(xs, lambdas, target, kind);
      table.feasible[flat] = 1;
    } else {
      double best = kInfinity;
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < cand_points.size(); ++j) {
        double v = 0.0;
        for (std::size_t a = 0; a < n_axes; ++a) {
          if (lambdas[a] == 0.0) continue;
          v += lambdas[a] * per_axis[a].values[idx[a] * cand_points.size() + j];
        }
        if (v < best) {
          best = v;
          best_j = j;
        }
      }
      table.argmin_index[flat] = best_j;
      table.argmin_point[flat] = cand_points[best_j];
      table.values[flat] = best;
      table.feasible[flat] = std::isfinite(best) ? 1 : 0;
      if (table.feasible[flat] && options.mode == ArgminMode::Continuous) {
        auto [p, v] = window_search(xs, lambdas, kind, grid, cand_points[best_j], cell,
                                    options.refine_levels);
        table.argmin_point[flat] = p;
        table.values[flat] = std::min(v, best);
      }
    }

    for (std::size_t a = n_axes; a-- > 0;) {
      if (++idx[a] < table.extents[a]) break;
      idx[a] = 0;
    }
  }
  return table;
}

LeastCostTable least_cost_table(std::span<const GroundGrid> inputs, GridPtr candidates,
                                std::span<const double> lambdas, GroundCostKind kind,
                                LeastCostOptions options) {
  std::vector<std::vector<Point>> axes;
  for (const auto& g : inputs) {
    if (candidates && g.dim() != candidates->dim()) {
      throw GridMismatch("least_cost_table: input and candidate grids differ in dimension");
    }
    axes.push_back(g.points());
  }
  return least_cost_table(axes, std::move(candidates), lambdas, kind, options);
}

LeastCost least_cost_at(std::span<const Point> xs, const GroundGrid& candidates,
                        std::span<const double> lambdas, GroundCostKind kind,
                        LeastCostOptions options) {
  std::vector<std::vector<Point>> axes;
  for (const auto& x : xs) axes.push_back({x});
  auto grid = std::make_shared<const GroundGrid>(candidates);
  const auto table = least_cost_table(axes, grid, lambdas, kind, options);
  return {table.values[0], table.argmin_index[0], table.argmin_point[0], table.feasible[0] != 0};
}

std::pair<Point, double> refine_argmin(const LeastCostTable& table,
                                       std::span<const std::size_t> tuple, int levels) {
  const std::size_t flat = table.flat_index(tuple);
  if (!table.feasible[flat]) throw std::invalid_argument("refine_argmin: infeasible tuple");
  const GroundGrid& grid = *table.candidates;
  const auto xs = table.tuple_points(flat);
  const std::array<double, 2> cell{grid.spacing(0), grid.dim() == 2 ? grid.spacing(1) : 0.0};
  return window_search(xs, table.lambdas, table.kind, grid, grid.point(table.argmin_index[flat]),
                       cell, levels);
}

// ---------------------------------------------------------------------------

namespace {

/// Minimizes a function of a positive scalar that is unimodal in log scale:
/// a coarse log-spaced scan followed by golden-section refinement of the
/// bracket around the best sample.
double minimize_log_scan(const std::function<double(double)>& f, const OracleGrid& g) {
  const double a = std::log(g.lo);
  const double b = std::log(g.hi);
  const std::size_t n = std::max<std::size_t>(g.points, 3);
  const double step = (b - a) / static_cast<double>(n - 1);
  double best = kInfinity;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = f(std::exp(a + step * static_cast<double>(k)));
    if (v < best) {
      best = v;
      best_k = k;
    }
  }
  if (!std::isfinite(best)) return best;
  double lo = a + step * (static_cast<double>(best_k) - 1.0);
  double hi = a + step * (static_cast<double>(best_k) + 1.0);
  lo = std::max(lo, a);
  hi = std::min(hi, b);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(std::exp(x1));
  double f2 = f(std::exp(x2));
  while (hi - lo > g.log_tolerance) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(std::exp(x1));
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(std::exp(x2));
    }
  }
  return std::min({best, f1, f2});
}

/// t R(a / t) for a, t > 0.
double scaled_reverse(double a, double t) { return t * r_entropy(a / t); }

}  // namespace

double perspective_two(double s1, double s2, double cost) {
  if (!(s1 >= 0.0) || !(s2 >= 0.0)) throw std::invalid_argument("perspective_two: negative mass");
  return s1 + s2 - 2.0 * std::sqrt(s1 * s2) * std::sqrt(exp_neg(cost));
}

double perspective_two(const Point& x1, double s1, const Point& x2, double s2, GroundCostKind kind) {
  return perspective_two(s1, s2, ground_cost(x1, x2, kind));
}

double perspective_two_oracle(const Point& x1, double s1, const Point& x2, double s2,
                              GroundCostKind kind, const OracleGrid& t_grid) {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw std::invalid_argument("perspective_two_oracle: masses must be > 0");
  const double c = ground_cost(x1, x2, kind);
  // t -> 0 leaves the recession terms R'_inf (s1 + s2)
  const double at_zero = R_INF_SLOPE * (s1 + s2);
  if (std::isinf(c)) return at_zero;
  auto g = [&](double t) { return t * c + scaled_reverse(s1, t) + scaled_reverse(s2, t); };
  return std::min(at_zero, minimize_log_scan(g, t_grid));
}

double perspective_mm(std::span<const double> s, std::span<const double> lambdas,
                      double least_cost) {
  if (s.size() != lambdas.size()) throw std::invalid_argument("perspective_mm: arity mismatch");
  double linear = 0.0;
  double log_geo = 0.0;
  bool any_zero = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0)) throw std::invalid_argument("perspective_mm: negative mass");
    linear += lambdas[i] * s[i];
    if (lambdas[i] == 0.0) continue;
    if (s[i] == 0.0) {
      any_zero = true;
    } else {
      log_geo += lambdas[i] * std::log(s[i]);
    }
  }
  if (any_zero || std::isinf(least_cost)) return linear;
  return linear - std::exp(log_geo - least_cost);
}

double perspective_mm(const LeastCostTable& table, std::span<const std::size_t> tuple,
                      std::span<const double> s) {
  return perspective_mm(s, table.lambdas, table.values[table.flat_index(tuple)]);
}

double perspective_mm_oracle(std::span<const Point> xs, std::span<const double> s,
                             std::span<const double> lambdas, const GroundGrid& x_grid,
                             GroundCostKind kind, const OracleGrid& s_grid,
                             const OracleGrid& t_grid) {
  if (xs.size() != s.size() || s.size() != lambdas.size()) {
    throw std::invalid_argument("perspective_mm_oracle: arity mismatch");
  }
  double linear = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0)) throw std::invalid_argument("perspective_mm_oracle: masses must be > 0");
    linear += lambdas[i] * s[i];
  }
  double best = linear;  // x anywhere, s = 0 and t -> 0
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    const Point x = x_grid.point(j);
    double transport = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) transport += lambdas[i] * ground_cost(xs[i], x, kind);
    if (std::isinf(transport)) continue;
    auto inner = [&](double bary_mass) {
      auto g = [&](double t) {
        double v = t * transport;
        for (std::size_t i = 0; i < s.size(); ++i) v += lambdas[i] * scaled_reverse(s[i], t);
        // sum lambda_i R(s/t) with weights adding to one
        return v + scaled_reverse(bary_mass, t);
      };
      return std::min(R_INF_SLOPE * (linear + bary_mass), minimize_log_scan(g, t_grid));
    };
    best = std::min(best, minimize_log_scan(inner, s_grid));
  }
  return best;
}

double perspective_mm_unconstrained(std::span<const Point> xs, std::span<const double> s,
                                    std::span<const double> lambdas, const GroundGrid& x_grid,
                                    GroundCostKind kind, const OracleGrid& s_grid) {
  if (xs.size() != s.size() || s.size() != lambdas.size()) {
    throw std::invalid_argument("perspective_mm_unconstrained: arity mismatch");
  }
  double linear = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] >= 0.0)) throw std::invalid_argument("perspective_mm_unconstrained: negative mass");
    linear += lambdas[i] * s[i];
  }
  double best = linear;  // s = 0 annihilates every input
  std::vector<double> costs(xs.size());
  for (std::size_t j = 0; j < x_grid.size(); ++j) {
    const Point x = x_grid.point(j);
    for (std::size_t i = 0; i < xs.size(); ++i) costs[i] = ground_cost(xs[i], x, kind);
    auto objective = [&](double bary_mass) {
      double v = 0.0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        v += lambdas[i] * perspective_two(s[i], bary_mass, costs[i]);
      }
      return v;
    };
    best = std::min(best, minimize_log_scan(objective, s_grid));
  }
  return best;
}

}  // namespace hkbary
