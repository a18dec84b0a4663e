#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "hkbary/cost.hpp"
#include "hkbary/measure.hpp"
#include "hkbary/solver.hpp"

namespace hkbary {

/// Raised when a tensor would exceed the configured entry budget.
class MemoryBudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMemoryBudget = 20'000'000;
inline constexpr std::size_t kVerifyMemoryBudget = 1'000'000;
/// A plan lighter than this fraction of sum_i mu_i(X) is treated as zero.
inline constexpr double kZeroPlanRelativeMass = 1e-10;

struct BarycenterProblem {
  std::vector<DiscreteMeasure> measures;
  std::vector<double> lambdas;
  GroundCostKind cost = GroundCostKind::HK;
  GridPtr candidates;
  SolverConfig solver;
  ArgminMode mode = ArgminMode::Grid;
  std::size_t memory_budget = kDefaultMemoryBudget;

  /// Throws std::invalid_argument (or GridMismatch) unless N >= 2, weights
  /// lie on the simplex, and all grids share the candidate dimension.
  void validate() const;
};

struct BarycenterAtom {
  Point point{};
  double mass = 0.0;
};

struct BarycenterSolution {
  /// N-way plan over the input supports listed in `supports`.
  TransportPlan plan;
  std::vector<std::vector<std::size_t>> supports;
  LeastCostTable table;
  /// T#plan accumulated on the candidate grid.
  DiscreteMeasure barycenter;
  /// Continuous mode only: one atom per plan entry at the refined T(x).
  std::vector<BarycenterAtom> atoms;
  double value = 0.0;
  bool zero_plan = false;
  SolverReport report;
};

/// Annealed soft multi-marginal solve with least cost c~ and Soft(lambda_i)
/// penalties; the barycenter is the pushforward of the plan under T.
BarycenterSolution solve_smm(const BarycenterProblem& p);

/// i-th marginal of a solution's plan as a measure on the grid of mu_i.
DiscreteMeasure plan_marginal(const BarycenterSolution& s, const BarycenterProblem& p,
                              std::size_t axis);

struct ExtendedSolution {
  double value = 0.0;
  /// N + 1 axes: the input supports, then every candidate point.
  TransportPlan plan;
  SolverReport report;
};

/// Same problem with an explicit barycenter axis: cost sum lambda_i c(x_i, x),
/// Soft(lambda_i) on the inputs and no penalty on the last axis.
/// Throws MemoryBudgetExceeded when the (N+1)-way tensor is too large.
ExtendedSolution solve_extended_smm(const BarycenterProblem& p);

/// sum_i lambda_i * (two-marginal problem between mu_i and nu with weight-1
/// KL on mu_i and equality on nu). +inf when a sub-problem is infeasible.
double evaluate_cc2m(const DiscreteMeasure& nu, const BarycenterProblem& p);

/// As evaluate_cc2m with weight-1 KL on the nu side as well.
double evaluate_c2m(const DiscreteMeasure& nu, const BarycenterProblem& p);

struct ConicAtom {
  std::vector<Point> xs;
  std::vector<double> s;
  double mass = 0.0;
  double least_cost = 0.0;
};

struct ConicPlan {
  std::vector<ConicAtom> atoms;
  std::vector<GridPtr> grids;
  /// h_i alpha: pushforward of s_i * alpha onto axis i.
  std::vector<DiscreteMeasure> homogeneous;
};

/// One conic atom per plan entry with s_i = mu_i / plan_i at x_i.
/// Throws std::invalid_argument if a plan marginal charges a mu_i-null point.
ConicPlan lift_to_cone(const BarycenterSolution& s, const BarycenterProblem& p);

/// sum over atoms of mass * (sum lambda_i s_i - prod s_j^lambda_j exp(-c~)).
double conic_cost(const ConicPlan& alpha, const BarycenterProblem& p);

/// conic_cost plus the mass of mu_i not reached by h_i alpha, i.e. the value
/// of the conic problem with slack; equals the SMM value for a lifted solution.
double conic_objective(const ConicPlan& alpha, const BarycenterProblem& p);

struct DiracBarycenter {
  Point point{};
  double mass = 0.0;
  double least_cost = 0.0;
};

/// Barycenter of weighted Diracs m_i delta_{z_i}: a single Dirac at T(z) with
/// mass prod m_i^lambda_i exp(-c~(z)), or nullopt (the zero measure) when the
/// pi/2 balls around the z_i do not intersect. `dim` is 1 or 2.
std::optional<DiracBarycenter> dirac_barycenter(const std::vector<Point>& points,
                                                const std::vector<double>& masses,
                                                const std::vector<double>& lambdas,
                                                GroundCostKind kind, int dim = 1);

struct EqualityReport {
  double smm = 0.0;
  double extended = 0.0;
  double cc2m = 0.0;
  double conic = 0.0;
  double gap_extended = 0.0;
  double gap_cc2m = 0.0;
  double gap_conic = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  BarycenterSolution solution;
};

/// Computes the four values and their gaps to the SMM value, passing when
/// every gap is within max(1e-3, 1e-2 * smm). Refuses tensors above 1e6
/// entries with MemoryBudgetExceeded.
EqualityReport verify_equalities(const BarycenterProblem& p);

}  // namespace hkbary
