#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hkbary {

/// How a plan marginal is tied to its target.
///   Soft(w): w * KL(marginal | target)
///   Hard:    marginal must equal the target
///   Free:    no penalty; the axis carries a counting reference measure
struct MarginalPenalty {
  enum class Kind { Soft, Hard, Free };
  Kind kind = Kind::Soft;
  double weight = 1.0;

  static MarginalPenalty soft(double w);
  static MarginalPenalty hard() { return {Kind::Hard, 0.0}; }
  static MarginalPenalty free() { return {Kind::Free, 0.0}; }
};

struct SolverConfig {
  double epsilon_start = 1e-1;
  double epsilon_final = 1e-3;
  double epsilon_factor = 0.5;
  int max_iter = 5000;  // sweeps per epsilon stage
  double tol = 1e-9;    // sup-norm change of the dual potentials over one sweep
  double stabilization = 50.0;  // |log scaling| that triggers absorption

  /// Throws std::invalid_argument when the schedule or tolerances are invalid.
  void validate() const;
};

/// Dense N-way tensor, row-major with the last axis fastest.
struct Tensor {
  std::vector<std::size_t> extents;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> ext, double fill);
  std::size_t rank() const { return extents.size(); }
  std::size_t size() const { return values.size(); }
  std::vector<std::size_t> strides() const;
};

/// Nonnegative mass tensor over per-axis positions.
struct TransportPlan {
  std::vector<std::size_t> extents;
  std::vector<double> mass;

  double total_mass() const;
  std::vector<double> marginal(std::size_t axis) const;
};

/// Dual potentials in cost units, one vector per axis.
struct Potentials {
  std::vector<std::vector<double>> f;
};

struct SolverReport {
  double regularized_objective = 0.0;
  double unregularized_objective = 0.0;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
  bool infeasible = false;
  double epsilon_final = 0.0;
  double fixed_point_residual = 0.0;
  /// Unregularized objective after each annealing stage.
  std::vector<double> stage_objectives;
};

struct SolveResult {
  TransportPlan plan;
  SolverReport report;
  Potentials potentials;
};

/// Entropic scaling solver for
///   min  <cost, plan> + sum_i penalty_i(plan_i | target_i) + eps KL(plan | ref)
/// in log-stabilized form. The reference is the product of the targets on
/// Soft/Hard axes, renormalized to the geometric mean of their masses, times
/// the counting measure on Free axes.
///
/// `targets[i]` holds the masses along axis i (ignored on Free axes).
/// Throws std::invalid_argument for non-finite inputs, shape mismatches or an
/// all-Free penalty list. Infeasible hard constraints are reported through
/// report.infeasible with a zero plan and +inf objective.
SolveResult sinkhorn_general(const Tensor& cost, std::span<const std::vector<double>> targets,
                             std::span<const MarginalPenalty> penalties, double epsilon,
                             const SolverConfig& cfg, const Potentials* warm_start = nullptr);

/// Geometric epsilon schedule from cfg.epsilon_start down to cfg.epsilon_final
/// with warm-started potentials.
SolveResult anneal(const Tensor& cost, std::span<const std::vector<double>> targets,
                   std::span<const MarginalPenalty> penalties, const SolverConfig& cfg);

/// <cost, plan> + penalties, with +inf * 0 = 0.
double unregularized_objective(const TransportPlan& plan, const Tensor& cost,
                               std::span<const std::vector<double>> targets,
                               std::span<const MarginalPenalty> penalties);

/// KL(marginal | target) on Soft axes, sup-norm gap on Hard axes, 0 on Free.
std::vector<double> marginal_residuals(const TransportPlan& plan,
                                       std::span<const std::vector<double>> targets,
                                       std::span<const MarginalPenalty> penalties);

}  // namespace hkbary
