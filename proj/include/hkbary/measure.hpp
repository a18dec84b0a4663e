#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hkbary {

/// A point in the ambient box. One-dimensional points leave the second
/// coordinate at zero, so Euclidean distances need no dimension switch.
using Point = std::array<double, 2>;

double distance(const Point& a, const Point& b);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Thrown when two measures (or a measure and a plan) live on different grids.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform tensor grid on a box in one or two dimensions.
///
/// Points are ordered row-major with the first axis slowest, so in 2D the
/// flat index of (ix, iy) is ix * n + iy.
class GroundGrid {
 public:
  /// Uniform grid including both endpoints of every axis.
  /// Throws std::invalid_argument for n < 2, dim outside {1, 2}, or
  /// degenerate/non-finite bounds.
  static GroundGrid build(int dim, std::span<const Interval> bounds, std::size_t n);

  int dim() const { return dim_; }
  std::size_t points_per_axis() const { return n_; }
  std::size_t size() const { return dim_ == 1 ? n_ : n_ * n_; }
  const std::vector<Interval>& bounds() const { return bounds_; }
  double spacing(int axis) const;

  /// Coordinate of the k-th sample on one axis.
  double coordinate(int axis, std::size_t k) const;
  Point point(std::size_t index) const;
  std::vector<Point> points() const;

  /// Nearest grid point; ties resolve to the lower index.
  std::size_t nearest(const Point& p) const;

  bool contains(const Point& p, double slack = 0.0) const;

  friend bool operator==(const GroundGrid& a, const GroundGrid& b);

 private:
  GroundGrid(int dim, std::vector<Interval> bounds, std::size_t n)
      : dim_(dim), bounds_(std::move(bounds)), n_(n) {}

  int dim_ = 1;
  std::vector<Interval> bounds_;
  std::size_t n_ = 0;
};

using GridPtr = std::shared_ptr<const GroundGrid>;

GridPtr make_grid(int dim, std::span<const Interval> bounds, std::size_t n);

/// A point is in the support of a measure iff its mass exceeds this fraction
/// of the total mass.
inline constexpr double kSupportRelativeThreshold = 1e-15;

/// Finite nonnegative measure with dense per-grid-point masses.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  /// Zero measure on the grid.
  explicit DiscreteMeasure(GridPtr grid);
  /// Throws std::invalid_argument on negative/non-finite masses or a size
  /// different from the grid.
  DiscreteMeasure(GridPtr grid, std::vector<double> masses);

  /// Sparse construction from (grid index, mass) pairs. Indices must be
  /// distinct and in range.
  static DiscreteMeasure from_atoms(GridPtr grid,
                                    std::span<const std::pair<std::size_t, double>> atoms);
  static DiscreteMeasure dirac(GridPtr grid, std::size_t index, double mass = 1.0);

  const GroundGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> masses() const { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }
  std::size_t size() const { return masses_.size(); }

  /// Grid indices whose mass exceeds kSupportRelativeThreshold * total mass.
  std::vector<std::size_t> support() const;

  /// Point-wise addition; both measures must share a grid.
  DiscreteMeasure& add_mass(std::size_t index, double mass);

 private:
  GridPtr grid_;
  std::vector<double> masses_;
};

double total_mass(const DiscreteMeasure& m);

/// Every mass multiplied by k; k must be nonnegative.
DiscreteMeasure scale_measure(const DiscreteMeasure& m, double k);

bool same_grid(const DiscreteMeasure& a, const DiscreteMeasure& b);

/// Lebesgue-type decomposition of a marginal against a reference on a shared
/// grid: marginal = sigma * reference + marginal_perp and
/// reference = rho * marginal + reference_perp.
struct DensityDecomposition {
  std::vector<double> sigma;  // marginal / reference where reference > 0, else 0
  std::vector<double> rho;    // reference / marginal where marginal > 0, else 0
  std::vector<double> marginal_perp;
  std::vector<double> reference_perp;
  double gamma_perp_mass = 0.0;
  double mu_perp_mass = 0.0;
};

DensityDecomposition density_ratios(const DiscreteMeasure& marginal,
                                    const DiscreteMeasure& reference);

}  // namespace hkbary
