// Independent reference computations for the tests. Nothing here calls the
// library; formulas are written out directly.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline double hk_cost(double d) {
  d = std::abs(d);
  if (d >= std::numbers::pi / 2) return inf;
  const double c = std::cos(d);
  return -std::log(c * c);
}

inline double kl_entropy(double s) { return s == 0.0 ? 1.0 : s * std::log(s) - s + 1.0; }

struct Min {
  double arg;
  double value;
};

/// Golden-section search of a unimodal function on [a, b].
inline Min golden(const std::function<double(double)>& f, double a, double b, int iters = 300) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < iters && b - a > 1e-15 * (1.0 + std::abs(a)); ++k) {
    if (f1 <= f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - r * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + r * (b - a), f2 = f(x2);
    }
  }
  const double fa = f(a), fb = f(b);
  Min m{x1, f1};
  if (f2 < m.value) m = {x2, f2};
  if (fa < m.value) m = {a, fa};
  if (fb < m.value) m = {b, fb};
  return m;
}

/// Scan on n points then golden refinement around the best sample.
inline Min scan_then_golden(const std::function<double(double)>& f, double a, double b, int n = 2001) {
  double best = inf;
  int bk = 0;
  const double h = (b - a) / (n - 1);
  for (int k = 0; k < n; ++k) {
    const double v = f(a + h * k);
    if (v < best) best = v, bk = k;
  }
  const double lo = std::max(a, a + h * (bk - 1)), hi = std::min(b, a + h * (bk + 1));
  return golden(f, lo, hi);
}

/// min over x in [lo, hi] of sum lambda_i cost(x_i - x), 1D.
inline Min least_cost_1d(const std::vector<double>& xs, const std::vector<double>& lambdas, bool hk,
                         double lo, double hi) {
  auto f = [&](double x) {
    double v = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (lambdas[i] == 0.0) continue;
      const double d = xs[i] - x;
      v += lambdas[i] * (hk ? hk_cost(d) : d * d);
    }
    return v;
  };
  return scan_then_golden(f, lo, hi);
}

/// Best single atom of mass t for inputs m_i: min_t t c + sum lambda_i m_i F(t / m_i).
inline Min one_atom(double c, const std::vector<double>& m, const std::vector<double>& lambdas) {
  auto f = [&](double t) {
    double v = t * c;
    for (std::size_t i = 0; i < m.size(); ++i) v += lambdas[i] * m[i] * kl_entropy(t / m[i]);
    return v;
  };
  double hi = 0.0;
  for (double x : m) hi = std::max(hi, x);
  return golden(f, 0.0, 4.0 * hi);
}

/// min over t >= 0 of t c + t R(s1/t) + t R(s2/t), with R(s) = s - log s - 1.
inline double perspective_two(double s1, double s2, double c) {
  if (std::isinf(c)) return s1 + s2;
  auto g = [&](double logt) {
    const double t = std::exp(logt);
    auto tr = [&](double s) { return s - t * std::log(s / t) - t; };
    return t * c + tr(s1) + tr(s2);
  };
  const auto m = scan_then_golden(g, std::log(1e-8), std::log(1e4), 4001);
  return std::min(m.value, s1 + s2);
}

/// sup over s in (0, smax] of s phi - F(s).
inline double f_conjugate(double phi, double smax = 10.0) {
  auto neg = [&](double s) { return -(s * phi - kl_entropy(s)); };
  return -scan_then_golden(neg, 0.0, smax, 20001).value;
}

inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(g);
}

}  // namespace oracle
