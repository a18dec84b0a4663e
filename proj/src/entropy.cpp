#include "hkbary/entropy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hkbary {

namespace {

void require_nonnegative(double s, const char* what) {
  if (!(s >= 0.0)) throw std::invalid_argument(std::string(what) + ": argument must be >= 0");
}

}  // namespace

double f_entropy(double s) {
  require_nonnegative(s, "f_entropy");
  if (s == 0.0) return 1.0;
  if (std::isinf(s)) return kInfinity;
  return s * std::log(s) - s + 1.0;
}

double r_entropy(double s) {
  require_nonnegative(s, "r_entropy");
  if (s == 0.0) return F_INF_SLOPE;
  if (std::isinf(s)) return kInfinity;
  return s - std::log(s) - 1.0;
}

double f_conjugate(double phi) {
  if (std::isnan(phi)) throw std::invalid_argument("f_conjugate: NaN argument");
  return std::expm1(phi);
}

double r_conjugate(double psi) {
  if (std::isnan(psi)) throw std::invalid_argument("r_conjugate: NaN argument");
  if (psi >= 1.0) return kInfinity;
  return -std::log1p(-psi);
}

double divergence(std::span<const double> marginal, std::span<const double> reference,
                  EntropyKind kind) {
  if (marginal.size() != reference.size()) {
    throw GridMismatch("divergence: measures have different sizes");
  }
  if (kind == EntropyKind::HardEquality) {
    for (std::size_t i = 0; i < marginal.size(); ++i) {
      if (std::abs(marginal[i] - reference[i]) > kHardEqualityTolerance) return kInfinity;
    }
    return 0.0;
  }
  double value = 0.0;
  double singular = 0.0;
  for (std::size_t i = 0; i < marginal.size(); ++i) {
    const double ref = reference[i];
    if (ref > 0.0) {
      value += f_entropy(marginal[i] / ref) * ref;
    } else {
      singular += marginal[i];
    }
  }
  if (singular > 0.0) return F_INF_SLOPE;
  return value;
}

double divergence(const DiscreteMeasure& marginal, const DiscreteMeasure& reference,
                  EntropyKind kind) {
  if (!same_grid(marginal, reference)) {
    throw GridMismatch("divergence: measures live on different grids");
  }
  return divergence(marginal.masses(), reference.masses(), kind);
}

}  // namespace hkbary
