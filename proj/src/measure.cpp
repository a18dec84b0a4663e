#include "hkbary/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hkbary {

double distance(const Point& a, const Point& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

GroundGrid GroundGrid::build(int dim, std::span<const Interval> bounds, std::size_t n) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(dim));
  }
  if (n < 2) {
    throw std::invalid_argument("grid needs at least 2 points per axis");
  }
  if (bounds.size() != static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("expected one interval per grid axis");
  }
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.hi > b.lo)) {
      throw std::invalid_argument("degenerate grid bounds");
    }
  }
  return GroundGrid(dim, std::vector<Interval>(bounds.begin(), bounds.end()), n);
}

GridPtr make_grid(int dim, std::span<const Interval> bounds, std::size_t n) {
  return std::make_shared<const GroundGrid>(GroundGrid::build(dim, bounds, n));
}

double GroundGrid::spacing(int axis) const {
  const auto& b = bounds_.at(static_cast<std::size_t>(axis));
  return (b.hi - b.lo) / static_cast<double>(n_ - 1);
}

double GroundGrid::coordinate(int axis, std::size_t k) const {
  const auto& b = bounds_.at(static_cast<std::size_t>(axis));
  if (k + 1 == n_) return b.hi;
  return b.lo + static_cast<double>(k) * (b.hi - b.lo) / static_cast<double>(n_ - 1);
}

Point GroundGrid::point(std::size_t index) const {
  if (dim_ == 1) return {coordinate(0, index), 0.0};
  return {coordinate(0, index / n_), coordinate(1, index % n_)};
}

std::vector<Point> GroundGrid::points() const {
  std::vector<Point> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = point(i);
  return out;
}

std::size_t GroundGrid::nearest(const Point& p) const {
  auto snap = [&](int axis, double x) {
    const auto& b = bounds_[static_cast<std::size_t>(axis)];
    const double h = spacing(axis);
    double t = std::floor((x - b.lo) / h);
    t = std::clamp(t, 0.0, static_cast<double>(n_ - 1));
    auto k = static_cast<std::size_t>(t);
    // compare against the upper neighbour; ties go to the lower index
    if (k + 1 < n_ && std::abs(coordinate(axis, k + 1) - x) < std::abs(coordinate(axis, k) - x)) {
      ++k;
    }
    return k;
  };
  const std::size_t ix = snap(0, p[0]);
  if (dim_ == 1) return ix;
  return ix * n_ + snap(1, p[1]);
}

bool GroundGrid::contains(const Point& p, double slack) const {
  for (int a = 0; a < dim_; ++a) {
    const auto& b = bounds_[static_cast<std::size_t>(a)];
    if (p[static_cast<std::size_t>(a)] < b.lo - slack || p[static_cast<std::size_t>(a)] > b.hi + slack) {
      return false;
    }
  }
  return true;
}

bool operator==(const GroundGrid& a, const GroundGrid& b) {
  if (a.dim_ != b.dim_ || a.n_ != b.n_) return false;
  for (std::size_t i = 0; i < a.bounds_.size(); ++i) {
    if (a.bounds_[i].lo != b.bounds_[i].lo || a.bounds_[i].hi != b.bounds_[i].hi) return false;
  }
  return true;
}

DiscreteMeasure::DiscreteMeasure(GridPtr grid) : grid_(std::move(grid)) {
  if (!grid_) throw std::invalid_argument("measure requires a grid");
  masses_.assign(grid_->size(), 0.0);
}

DiscreteMeasure::DiscreteMeasure(GridPtr grid, std::vector<double> masses)
    : grid_(std::move(grid)), masses_(std::move(masses)) {
  if (!grid_) throw std::invalid_argument("measure requires a grid");
  if (masses_.size() != grid_->size()) {
    throw std::invalid_argument("mass vector size does not match grid size");
  }
  for (double m : masses_) {
    if (!std::isfinite(m) || m < 0.0) {
      throw std::invalid_argument("masses must be finite and nonnegative");
    }
  }
}

DiscreteMeasure DiscreteMeasure::from_atoms(
    GridPtr grid, std::span<const std::pair<std::size_t, double>> atoms) {
  DiscreteMeasure m(std::move(grid));
  std::vector<bool> seen(m.size(), false);
  for (const auto& [idx, mass] : atoms) {
    if (idx >= m.size()) throw std::invalid_argument("atom index out of range");
    if (seen[idx]) throw std::invalid_argument("duplicate atom index");
    if (!std::isfinite(mass) || mass < 0.0) {
      throw std::invalid_argument("masses must be finite and nonnegative");
    }
    seen[idx] = true;
    m.masses_[idx] = mass;
  }
  return m;
}

DiscreteMeasure DiscreteMeasure::dirac(GridPtr grid, std::size_t index, double mass) {
  const std::pair<std::size_t, double> atom{index, mass};
  return from_atoms(std::move(grid), std::span(&atom, 1));
}

std::vector<std::size_t> DiscreteMeasure::support() const {
  const double threshold = kSupportRelativeThreshold * total_mass(*this);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    if (masses_[i] > threshold) out.push_back(i);
  }
  return out;
}

DiscreteMeasure& DiscreteMeasure::add_mass(std::size_t index, double mass) {
  if (index >= masses_.size()) throw std::out_of_range("grid index out of range");
  if (!std::isfinite(mass) || mass < 0.0) {
    throw std::invalid_argument("masses must be finite and nonnegative");
  }
  masses_[index] += mass;
  return *this;
}

double total_mass(const DiscreteMeasure& m) {
  double s = 0.0;
  for (double v : m.masses()) s += v;
  return s;
}

DiscreteMeasure scale_measure(const DiscreteMeasure& m, double k) {
  if (!(k >= 0.0) || !std::isfinite(k)) {
    throw std::invalid_argument("scale factor must be finite and nonnegative");
  }
  std::vector<double> out(m.masses().begin(), m.masses().end());
  for (double& v : out) v *= k;
  return DiscreteMeasure(m.grid_ptr(), std::move(out));
}

bool same_grid(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  if (!a.grid_ptr() || !b.grid_ptr()) return false;
  return a.grid_ptr() == b.grid_ptr() || a.grid() == b.grid();
}

DensityDecomposition density_ratios(const DiscreteMeasure& marginal,
                                    const DiscreteMeasure& reference) {
  if (!same_grid(marginal, reference)) {
    throw GridMismatch("density_ratios: measures live on different grids");
  }
  const std::size_t n = marginal.size();
  DensityDecomposition d;
  d.sigma.assign(n, 0.0);
  d.rho.assign(n, 0.0);
  d.marginal_perp.assign(n, 0.0);
  d.reference_perp.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = marginal[i];
    const double m = reference[i];
    if (m > 0.0) {
      d.sigma[i] = g / m;
    } else {
      d.marginal_perp[i] = g;
      d.gamma_perp_mass += g;
    }
    if (g > 0.0) {
      d.rho[i] = m / g;
    } else {
      d.reference_perp[i] = m;
      d.mu_perp_mass += m;
    }
  }
  return d;
}

}  // namespace hkbary
