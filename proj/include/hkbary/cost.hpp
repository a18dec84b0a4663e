#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "hkbary/measure.hpp"

namespace hkbary {

enum class GroundCostKind { HK, Quadratic };

/// Grid: the least cost is minimized over the candidate grid only.
/// Continuous: the grid argmin is refined by window-halving search.
enum class ArgminMode { Grid, Continuous };

/// HK: -log cos^2 |x - y| below pi/2, +inf beyond. Quadratic: |x - y|^2.
double ground_cost(const Point& x, const Point& y, GroundCostKind kind);

/// exp(-c) with exp(-inf) = 0.
double exp_neg(double c);

/// sum_i lambda_i c(x_i, x); zero weights contribute nothing even at +inf.
double weighted_cost(std::span<const Point> xs, std::span<const double> lambdas, const Point& x,
                     GroundCostKind kind);

struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, may contain +inf

  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Entry-wise ground cost. Throws GridMismatch if dimensions differ.
CostMatrix cost_matrix(const GroundGrid& a, const GroundGrid& b, GroundCostKind kind);
CostMatrix cost_matrix(std::span<const Point> a, std::span<const Point> b, GroundCostKind kind);

/// Checks the weight simplex: lambda_i >= 0 and |sum - 1| <= 1e-12.
void validate_weights(std::span<const double> lambdas);

/// Least cost c~(x_1..x_N) = min over candidates x of sum lambda_i c(x_i, x),
/// tabulated over all tuples of per-axis points, together with its argmin map
/// T and the set A of tuples where c~ is finite.
///
/// Tuples are stored row-major over `extents` (last axis fastest).
struct LeastCostTable {
  std::vector<std::vector<Point>> axes;
  GridPtr candidates;
  std::vector<double> lambdas;
  GroundCostKind kind = GroundCostKind::HK;
  ArgminMode mode = ArgminMode::Grid;

  std::vector<std::size_t> extents;
  std::vector<double> values;
  /// Minimizing candidate index; lowest index wins ties. For infeasible
  /// tuples the entry is meaningless.
  std::vector<std::size_t> argmin_index;
  /// T(x): the candidate point in grid mode, the refined point in
  /// continuous mode.
  std::vector<Point> argmin_point;
  std::vector<char> feasible;

  std::size_t size() const { return values.size(); }
  std::size_t flat_index(std::span<const std::size_t> tuple) const;
  std::vector<std::size_t> tuple_of(std::size_t flat) const;
  std::vector<Point> tuple_points(std::size_t flat) const;
};

struct LeastCostOptions {
  ArgminMode mode = ArgminMode::Grid;
  int refine_levels = 20;
};

/// Throws std::invalid_argument on a weight-simplex violation, an empty
/// candidate grid, or an axis count different from the weight count.
LeastCostTable least_cost_table(std::span<const std::vector<Point>> axes, GridPtr candidates,
                                std::span<const double> lambdas, GroundCostKind kind,
                                LeastCostOptions options = {});
LeastCostTable least_cost_table(std::span<const GroundGrid> inputs, GridPtr candidates,
                                std::span<const double> lambdas, GroundCostKind kind,
                                LeastCostOptions options = {});

/// Least cost of a single tuple over the candidate grid.
struct LeastCost {
  double value = 0.0;
  std::size_t argmin_index = 0;
  Point argmin_point{};
  bool feasible = false;
};
LeastCost least_cost_at(std::span<const Point> xs, const GroundGrid& candidates,
                        std::span<const double> lambdas, GroundCostKind kind,
                        LeastCostOptions options = {});

/// Window-halving search for the minimizer of sum lambda_i c(x_i, .) inside
/// `box`. Each round samples 9 points per axis on [center - w, center + w]
/// (clipped to the box), moves to the best sample, then halves w. For the
/// quadratic cost the clipped weighted mean is returned directly.
std::pair<Point, double> window_search(std::span<const Point> xs, std::span<const double> lambdas,
                                       GroundCostKind kind, const GroundGrid& box, Point center,
                                       std::array<double, 2> half_width, int levels);

/// Refines the grid argmin of a feasible tuple; the first window spans one
/// grid cell on either side. Throws std::invalid_argument for infeasible
/// tuples.
std::pair<Point, double> refine_argmin(const LeastCostTable& table,
                                       std::span<const std::size_t> tuple, int levels);

// ---------------------------------------------------------------------------
// Perspective costs on the cone.

/// H(x1, s1, x2, s2) = s1 + s2 - 2 sqrt(s1 s2) exp(-c / 2).
double perspective_two(double s1, double s2, double cost);
double perspective_two(const Point& x1, double s1, const Point& x2, double s2, GroundCostKind kind);

/// Log-spaced search grid used by the numeric oracles.
struct OracleGrid {
  double lo = 1e-4;
  double hi = 1e4;
  std::size_t points = 200;
  /// Golden-section refinement stops once the log-bracket is this narrow.
  double log_tolerance = 1e-11;
};

/// Numeric inf over t >= 0 of t c + t R(s1/t) + t R(s2/t). Requires s1, s2 > 0.
double perspective_two_oracle(const Point& x1, double s1, const Point& x2, double s2,
                              GroundCostKind kind, const OracleGrid& t_grid = {});

/// Closed-form multi-marginal perspective cost
/// sum lambda_i s_i - prod s_j^lambda_j exp(-c~).
double perspective_mm(std::span<const double> s, std::span<const double> lambdas,
                      double least_cost);
double perspective_mm(const LeastCostTable& table, std::span<const std::size_t> tuple,
                      std::span<const double> s);

/// Brute-force nested infimum over candidate x, s >= 0 and t >= 0 of
/// sum_i t (lambda_i c(x_i, x) + lambda_i R(s_i / t) + lambda_i R(s / t)).
double perspective_mm_oracle(std::span<const Point> xs, std::span<const double> s,
                             std::span<const double> lambdas, const GroundGrid& x_grid,
                             GroundCostKind kind, const OracleGrid& s_grid = {},
                             const OracleGrid& t_grid = {});

/// inf over candidate x and s >= 0 of sum lambda_i H(x_i, s_i, x, s): the
/// multi-marginal cost of the unconstrained barycenter problem.
double perspective_mm_unconstrained(std::span<const Point> xs, std::span<const double> s,
                                    std::span<const double> lambdas, const GroundGrid& x_grid,
                                    GroundCostKind kind, const OracleGrid& s_grid = {});

}  // namespace hkbary
