#pragma once

#include <limits>

#include "hkbary/measure.hpp"

namespace hkbary {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Recession slope of the KL entropy, lim F(s)/s.
inline constexpr double F_INF_SLOPE = kInfinity;
/// Recession slope of the reverse entropy, R'_inf = F(0) = 1. Not the same
/// number as r_entropy(0).
inline constexpr double R_INF_SLOPE = 1.0;

/// Per-point tolerance used when testing a hard marginal constraint.
inline constexpr double kHardEqualityTolerance = 1e-12;

enum class EntropyKind { KL, HardEquality };

// Scalar entropies. All throw std::invalid_argument on negative or NaN input.

/// F(s) = s log s - s + 1, with F(0) = 1.
double f_entropy(double s);
/// R(s) = s - log s - 1 for s > 0 and +inf at s = 0.
double r_entropy(double s);

/// F*(phi) = exp(phi) - 1.
double f_conjugate(double phi);
/// R*(psi) = -log(1 - psi); +inf for psi >= 1.
double r_conjugate(double psi);

/// Entropy functional of `marginal` relative to `reference` on a shared grid.
///
/// KL:           sum F(sigma) * reference + F'_inf * (singular mass)
/// HardEquality: 0 when the measures agree per point within
///               kHardEqualityTolerance, +inf otherwise.
double divergence(const DiscreteMeasure& marginal, const DiscreteMeasure& reference,
                  EntropyKind kind);

/// Same functional on raw mass vectors of equal length.
double divergence(std::span<const double> marginal, std::span<const double> reference,
                  EntropyKind kind);

}  // namespace hkbary
