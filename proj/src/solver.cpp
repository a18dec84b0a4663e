#include "hkbary/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hkbary/entropy.hpp"

namespace hkbary {

MarginalPenalty MarginalPenalty::soft(double w) {
  if (!(w > 0.0) || !std::isfinite(w)) throw std::invalid_argument("soft penalty weight must be > 0");
  return {Kind::Soft, w};
}

void SolverConfig::validate() const {
  if (!(epsilon_final > 0.0) || !(epsilon_start >= epsilon_final) || !std::isfinite(epsilon_start)) {
    throw std::invalid_argument("epsilon schedule requires 0 < epsilon_final <= epsilon_start");
  }
  if (!(epsilon_factor > 0.0 && epsilon_factor < 1.0)) {
    throw std::invalid_argument("epsilon_factor must lie in (0, 1)");
  }
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
  if (!(stabilization > 0.0)) throw std::invalid_argument("stabilization threshold must be > 0");
}

Tensor::Tensor(std::vector<std::size_t> ext, double fill) : extents(std::move(ext)) {
  std::size_t n = 1;
  for (auto e : extents) n *= e;
  values.assign(n, fill);
}

std::vector<std::size_t> Tensor::strides() const {
  std::vector<std::size_t> s(extents.size(), 1);
  for (std::size_t a = extents.size(); a-- > 1;) s[a - 1] = s[a] * extents[a];
  return s;
}

double TransportPlan::total_mass() const {
  double s = 0.0;
  for (double v : mass) s += v;
  return s;
}

std::vector<double> TransportPlan::marginal(std::size_t axis) const {
  if (axis >= extents.size()) throw std::out_of_range("plan axis out of range");
  std::vector<double> out(extents[axis], 0.0);
  if (mass.empty()) return out;
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < extents.size(); ++a) inner *= extents[a];
  const std::size_t n = extents[axis];
  for (std::size_t e = 0; e < mass.size(); ++e) out[(e / inner) % n] += mass[e];
  return out;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Plan entries below this fraction of the total mass do not link blocks.
constexpr double kBlockMass = 1e-12;

bool is_free(const MarginalPenalty& p) { return p.kind == MarginalPenalty::Kind::Free; }

void validate_problem(const Tensor& cost, std::span<const std::vector<double>> targets,
                      std::span<const MarginalPenalty> penalties) {
  const std::size_t n = cost.rank();
  if (n == 0) throw std::invalid_argument("cost tensor must have at least one axis");
  if (targets.size() != n || penalties.size() != n) {
    throw std::invalid_argument("one target and one penalty per tensor axis required");
  }
  std::size_t expect = 1;
  for (auto e : cost.extents) expect *= e;
  if (cost.values.size() != expect) throw std::invalid_argument("cost tensor size does not match extents");
  for (double c : cost.values) {
    if (std::isnan(c) || c == kNegInf) throw std::invalid_argument("cost entries must be finite or +inf");
  }
  bool any_penalized = false;
  for (std::size_t a = 0; a < n; ++a) {
    if (is_free(penalties[a])) continue;
    any_penalized = true;
    if (penalties[a].kind == MarginalPenalty::Kind::Soft && !(penalties[a].weight > 0.0)) {
      throw std::invalid_argument("soft penalty weight must be > 0");
    }
    if (targets[a].size() != cost.extents[a]) {
      throw std::invalid_argument("target " + std::to_string(a) + " does not match tensor extent");
    }
    for (double m : targets[a]) {
      if (!std::isfinite(m) || m < 0.0) throw std::invalid_argument("target masses must be finite and >= 0");
    }
  }
  if (!any_penalized) throw std::invalid_argument("at least one marginal must be penalized");
}

double log_sum_exp(std::span<const double> v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf || std::isinf(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

class ScalingSolver {
 public:
  ScalingSolver(const Tensor& cost, std::span<const std::vector<double>> targets,
                std::span<const MarginalPenalty> penalties, const SolverConfig& cfg)
      : cost_(cost), targets_(targets), penalties_(penalties), cfg_(cfg), rank_(cost.rank()) {
    strides_ = cost.strides();
    setup_reference();
    compute_liveness();
  }

  SolveResult run(double eps, const Potentials* warm);

 private:
  void setup_reference();
  void compute_liveness();
  void absorb();
  void contract(std::size_t axis, std::vector<double>& out) const;
  void log_contract(std::size_t axis, std::vector<double>& out) const;
  void update_axis(std::size_t axis);
  void translate();
  bool translate_blocks();
  double dual_value() const;
  void refresh_scalings();
  TransportPlan current_plan() const;
  double entropic_term(const TransportPlan& plan) const;

  template <class Fn>
  void for_each_entry(Fn&& fn) const {
    std::vector<std::size_t> idx(rank_, 0);
    const std::size_t total = cost_.size();
    for (std::size_t e = 0; e < total; ++e) {
      fn(e, idx);
      for (std::size_t a = rank_; a-- > 0;) {
        if (++idx[a] < cost_.extents[a]) break;
        idx[a] = 0;
      }
    }
  }

  const Tensor& cost_;
  std::span<const std::vector<double>> targets_;
  std::span<const MarginalPenalty> penalties_;
  const SolverConfig& cfg_;
  std::size_t rank_;
  std::vector<std::size_t> strides_;

  std::vector<std::vector<double>> log_ref_;
  std::vector<std::vector<double>> log_target_;
  std::vector<std::vector<char>> alive_;
  std::vector<char> entry_alive_;
  bool infeasible_ = false;
  bool any_alive_ = false;
  double ref_total_ = 0.0;

  double eps_ = 1.0;
  std::vector<std::vector<double>> f_;
  std::vector<std::vector<double>> f_abs_;
  std::vector<std::vector<double>> u_;
  std::vector<double> kernel_;
};

void ScalingSolver::setup_reference() {
  log_ref_.resize(rank_);
  log_target_.resize(rank_);
  std::vector<double> log_mass(rank_, 0.0);
  double log_geo = 0.0;
  std::size_t penalized = 0;
  bool zero_mass = false;
  for (std::size_t a = 0; a < rank_; ++a) {
    if (is_free(penalties_[a])) continue;
    double m = 0.0;
    for (double v : targets_[a]) m += v;
    if (m == 0.0) zero_mass = true;
    log_mass[a] = std::log(m);
    log_geo += log_mass[a];
    ++penalized;
  }
  const double share = zero_mass ? 0.0 : log_geo / static_cast<double>(penalized) / static_cast<double>(penalized);
  ref_total_ = 1.0;
  for (std::size_t a = 0; a < rank_; ++a) {
    const std::size_t n = cost_.extents[a];
    log_ref_[a].assign(n, 0.0);
    log_target_[a].assign(n, 0.0);
    if (is_free(penalties_[a])) {
      ref_total_ *= static_cast<double>(n);
      continue;
    }
    double axis_total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      const double m = targets_[a][x];
      log_target_[a][x] = m > 0.0 ? std::log(m) : kNegInf;
      log_ref_[a][x] = m > 0.0 && !zero_mass ? log_target_[a][x] - log_mass[a] + share : kNegInf;
      if (m > 0.0 && !zero_mass) axis_total += std::exp(log_ref_[a][x]);
    }
    ref_total_ *= axis_total;
  }
}

void ScalingSolver::compute_liveness() {
  alive_.resize(rank_);
  for (std::size_t a = 0; a < rank_; ++a) {
    alive_[a].assign(cost_.extents[a], 1);
    if (is_free(penalties_[a])) continue;
    for (std::size_t x = 0; x < cost_.extents[a]; ++x) alive_[a][x] = targets_[a][x] > 0.0 ? 1 : 0;
  }
  entry_alive_.assign(cost_.size(), 0);
  // Positions without a finite-cost entry whose other positions are alive
  // can never carry mass; prune until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::vector<char>> reached(rank_);
    for (std::size_t a = 0; a < rank_; ++a) reached[a].assign(cost_.extents[a], 0);
    for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
      bool ok = std::isfinite(cost_.values[e]);
      for (std::size_t a = 0; ok && a < rank_; ++a) ok = alive_[a][idx[a]] != 0;
      entry_alive_[e] = ok ? 1 : 0;
      if (ok) {
        for (std::size_t a = 0; a < rank_; ++a) reached[a][idx[a]] = 1;
      }
    });
    for (std::size_t a = 0; a < rank_; ++a) {
      for (std::size_t x = 0; x < cost_.extents[a]; ++x) {
        if (alive_[a][x] && !reached[a][x]) {
          alive_[a][x] = 0;
          changed = true;
        }
      }
    }
  }
  any_alive_ = std::any_of(entry_alive_.begin(), entry_alive_.end(), [](char c) { return c != 0; });
  for (std::size_t a = 0; a < rank_; ++a) {
    if (penalties_[a].kind != MarginalPenalty::Kind::Hard) continue;
    for (std::size_t x = 0; x < cost_.extents[a]; ++x) {
      if (targets_[a][x] > 0.0 && !alive_[a][x]) infeasible_ = true;
    }
  }
}

void ScalingSolver::absorb() {
  for (std::size_t a = 0; a < rank_; ++a) {
    f_abs_[a] = f_[a];
    std::fill(u_[a].begin(), u_[a].end(), 1.0);
  }
  kernel_.assign(cost_.size(), 0.0);
  for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
    if (!entry_alive_[e]) return;
    double expo = -cost_.values[e] / eps_;
    for (std::size_t a = 0; a < rank_; ++a) expo += f_abs_[a][idx[a]] / eps_ + log_ref_[a][idx[a]];
    kernel_[e] = std::exp(expo);
  });
}

void ScalingSolver::contract(std::size_t axis, std::vector<double>& out) const {
  out.assign(cost_.extents[axis], 0.0);
  if (rank_ == 2) {
    const std::size_t n0 = cost_.extents[0];
    const std::size_t n1 = cost_.extents[1];
    if (axis == 0) {
      for (std::size_t x = 0; x < n0; ++x) {
        double s = 0.0;
        const double* row = kernel_.data() + x * n1;
        for (std::size_t y = 0; y < n1; ++y) s += row[y] * u_[1][y];
        out[x] = s;
      }
    } else {
      for (std::size_t x = 0; x < n0; ++x) {
        const double w = u_[0][x];
        const double* row = kernel_.data() + x * n1;
        for (std::size_t y = 0; y < n1; ++y) out[y] += row[y] * w;
      }
    }
    return;
  }
  for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
    double v = kernel_[e];
    if (v == 0.0) return;
    for (std::size_t a = 0; a < rank_; ++a) {
      if (a != axis) v *= u_[a][idx[a]];
    }
    out[idx[axis]] += v;
  });
}

void ScalingSolver::log_contract(std::size_t axis, std::vector<double>& out) const {
  // exponent: (f~_axis + sum_{a != axis} f_a - cost) / eps + log ref
  std::vector<std::vector<double>> terms(cost_.extents[axis]);
  for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
    if (!entry_alive_[e]) return;
    double expo = -cost_.values[e] / eps_;
    for (std::size_t a = 0; a < rank_; ++a) {
      const double f = a == axis ? f_abs_[a][idx[a]] : f_[a][idx[a]];
      expo += f / eps_ + log_ref_[a][idx[a]];
    }
    terms[idx[axis]].push_back(expo);
  });
  out.assign(cost_.extents[axis], kNegInf);
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = log_sum_exp(terms[x]);
}

void ScalingSolver::refresh_scalings() {
  double worst = 0.0;
  for (std::size_t a = 0; a < rank_; ++a) {
    for (std::size_t x = 0; x < f_[a].size(); ++x) {
      const double z = (f_[a][x] - f_abs_[a][x]) / eps_;
      worst = std::max(worst, std::abs(z));
      u_[a][x] = std::exp(z);
    }
  }
  if (worst > cfg_.stabilization) absorb();
}

void ScalingSolver::update_axis(std::size_t axis) {
  const std::size_t n = cost_.extents[axis];
  std::vector<double> contracted;
  contract(axis, contracted);
  auto unusable = [&](const std::vector<double>& v) {
    for (std::size_t x = 0; x < n; ++x) {
      if (alive_[axis][x] && !(v[x] > 1e-290 && v[x] < 1e290)) return true;
    }
    return false;
  };
  std::vector<double> log_l(n, kNegInf);
  if (unusable(contracted)) {
    absorb();
    contract(axis, contracted);
    if (unusable(contracted)) {
      log_contract(axis, log_l);
    } else {
      for (std::size_t x = 0; x < n; ++x) log_l[x] = std::log(contracted[x]);
    }
  } else {
    for (std::size_t x = 0; x < n; ++x) log_l[x] = std::log(contracted[x]);
  }
  const auto& pen = penalties_[axis];
  const double damping = pen.kind == MarginalPenalty::Kind::Soft ? pen.weight / (pen.weight + eps_) : 1.0;
  double worst = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    if (!alive_[axis][x]) continue;
    const double f = damping * (f_abs_[axis][x] + eps_ * (log_target_[axis][x] - log_l[x]));
    f_[axis][x] = f;
    const double z = (f - f_abs_[axis][x]) / eps_;
    worst = std::max(worst, std::abs(z));
    u_[axis][x] = std::exp(z);
  }
  if (worst > cfg_.stabilization) absorb();
}

// Shifts the potentials by constants summing to zero so that the kernel is
// unchanged and the marginal penalties are jointly optimal along that
// direction. This removes the slow mass mode of unbalanced scaling.
void ScalingSolver::translate() {
  std::vector<std::size_t> soft;
  std::vector<std::size_t> hard;
  for (std::size_t a = 0; a < rank_; ++a) {
    if (penalties_[a].kind == MarginalPenalty::Kind::Soft) soft.push_back(a);
    if (penalties_[a].kind == MarginalPenalty::Kind::Hard) hard.push_back(a);
  }
  if (soft.empty() || soft.size() + hard.size() < 2) return;

  std::vector<double> log_a(rank_, 0.0);
  for (std::size_t a : soft) {
    const double w = penalties_[a].weight;
    std::vector<double> terms;
    for (std::size_t x = 0; x < f_[a].size(); ++x) {
      if (alive_[a][x]) terms.push_back(log_target_[a][x] - f_[a][x] / w);
    }
    log_a[a] = log_sum_exp(terms);
    if (!std::isfinite(log_a[a])) return;
  }
  double log_eta = 0.0;
  if (hard.empty()) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t a : soft) {
      num += penalties_[a].weight * log_a[a];
      den += penalties_[a].weight;
    }
    log_eta = num / den;
  } else {
    double m = 0.0;
    for (std::size_t x = 0; x < targets_[hard[0]].size(); ++x) {
      if (alive_[hard[0]][x]) m += targets_[hard[0]][x];
    }
    if (!(m > 0.0)) return;
    log_eta = std::log(m);
  }
  std::vector<double> shift(rank_, 0.0);
  double soft_sum = 0.0;
  for (std::size_t a : soft) {
    shift[a] = penalties_[a].weight * (log_a[a] - log_eta);
    soft_sum += shift[a];
  }
  for (std::size_t a : hard) shift[a] = -soft_sum / static_cast<double>(hard.size());
  if (hard.empty()) {
    // absorb rounding so the shifts sum to exactly zero
    shift[soft.back()] -= soft_sum;
  }
  for (std::size_t a = 0; a < rank_; ++a) {
    if (shift[a] == 0.0) continue;
    for (std::size_t x = 0; x < f_[a].size(); ++x) {
      if (alive_[a][x]) f_[a][x] += shift[a];
    }
  }
  refresh_scalings();
}

// Dual objective up to an additive constant.
double ScalingSolver::dual_value() const {
  double d = 0.0;
  for (std::size_t a = 0; a < rank_; ++a) {
    const auto& pen = penalties_[a];
    if (is_free(pen)) continue;
    for (std::size_t x = 0; x < f_[a].size(); ++x) {
      if (!alive_[a][x]) continue;
      const double m = targets_[a][x];
      d += pen.kind == MarginalPenalty::Kind::Soft ? -pen.weight * m * std::expm1(-f_[a][x] / pen.weight)
                                                   : f_[a][x] * m;
    }
  }
  return d - eps_ * current_plan().total_mass();
}

// Translation applied separately to every block of positions linked by
// non-negligible plan entries. At small eps a plan made of isolated atoms
// splits into nearly independent blocks, each with its own slow mass mode
// that the global translation cannot reach. Cross-block entries change, so
// the step is kept only if the dual objective does not decrease.
bool ScalingSolver::translate_blocks() {
  std::vector<std::size_t> offset(rank_ + 1, 0);
  for (std::size_t a = 0; a < rank_; ++a) offset[a + 1] = offset[a] + cost_.extents[a];
  std::vector<std::size_t> parent(offset[rank_]);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  const auto plan = current_plan();
  const double total = plan.total_mass();
  if (!(total > 0.0)) return false;
  std::vector<char> used(parent.size(), 0);
  for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
    if (!(plan.mass[e] > kBlockMass * total)) return;
    std::size_t root = parent.size();
    for (std::size_t a = 0; a < rank_; ++a) {
      if (is_free(penalties_[a])) continue;
      const std::size_t node = offset[a] + idx[a];
      used[node] = 1;
      if (root == parent.size()) {
        root = find(node);
      } else {
        parent[find(node)] = root;
      }
    }
  });
  std::vector<std::size_t> block(parent.size(), parent.size());
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (!used[i]) continue;
    const std::size_t r = find(i);
    if (block[r] == parent.size()) block[r] = blocks++;
    block[i] = block[r];
  }
  if (blocks < 2) return false;

  std::vector<std::size_t> soft, hard;
  for (std::size_t a = 0; a < rank_; ++a) {
    if (penalties_[a].kind == MarginalPenalty::Kind::Soft) soft.push_back(a);
    if (penalties_[a].kind == MarginalPenalty::Kind::Hard) hard.push_back(a);
  }
  if (soft.empty() || soft.size() + hard.size() < 2) return false;

  // per block: log sum of target * exp(-f / w) on each soft axis, hard mass
  std::vector<std::vector<std::vector<double>>> terms(rank_, std::vector<std::vector<double>>(blocks));
  std::vector<double> hard_mass(blocks, 0.0);
  for (std::size_t a = 0; a < rank_; ++a) {
    for (std::size_t x = 0; x < cost_.extents[a]; ++x) {
      const std::size_t b = block[offset[a] + x];
      if (b == parent.size() || !alive_[a][x]) continue;
      if (penalties_[a].kind == MarginalPenalty::Kind::Soft) {
        terms[a][b].push_back(log_target_[a][x] - f_[a][x] / penalties_[a].weight);
      } else if (!hard.empty() && a == hard[0]) {
        hard_mass[b] += targets_[a][x];
      }
    }
  }
  std::vector<std::vector<double>> shift(rank_, std::vector<double>(blocks, 0.0));
  for (std::size_t b = 0; b < blocks; ++b) {
    std::vector<double> log_a(rank_, 0.0);
    bool ok = true;
    for (std::size_t a : soft) {
      log_a[a] = log_sum_exp(terms[a][b]);
      ok = ok && std::isfinite(log_a[a]);
    }
    if (!ok) continue;
    double log_eta = 0.0;
    if (hard.empty()) {
      double num = 0.0, den = 0.0;
      for (std::size_t a : soft) {
        num += penalties_[a].weight * log_a[a];
        den += penalties_[a].weight;
      }
      log_eta = num / den;
    } else {
      if (!(hard_mass[b] > 0.0)) continue;
      log_eta = std::log(hard_mass[b]);
    }
    double soft_sum = 0.0;
    for (std::size_t a : soft) soft_sum += shift[a][b] = penalties_[a].weight * (log_a[a] - log_eta);
    if (hard.empty()) {
      shift[soft.back()][b] -= soft_sum;
    } else {
      for (std::size_t a : hard) shift[a][b] = -soft_sum / static_cast<double>(hard.size());
    }
  }

  const double before = dual_value();
  const auto saved = f_;
  for (std::size_t a = 0; a < rank_; ++a) {
    for (std::size_t x = 0; x < f_[a].size(); ++x) {
      const std::size_t b = block[offset[a] + x];
      if (b != parent.size() && alive_[a][x]) f_[a][x] += shift[a][b];
    }
  }
  refresh_scalings();
  const double after = dual_value();
  if (after >= before) return true;
  f_ = saved;
  refresh_scalings();
  return false;
}

TransportPlan ScalingSolver::current_plan() const {
  TransportPlan plan{cost_.extents, std::vector<double>(cost_.size(), 0.0)};
  if (!any_alive_ || infeasible_) return plan;
  for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
    double v = kernel_[e];
    if (v == 0.0) return;
    for (std::size_t a = 0; a < rank_; ++a) v *= u_[a][idx[a]];
    plan.mass[e] = v;
  });
  return plan;
}

double ScalingSolver::entropic_term(const TransportPlan& plan) const {
  double kl = 0.0;
  for_each_entry([&](std::size_t e, const std::vector<std::size_t>& idx) {
    const double g = plan.mass[e];
    if (g <= 0.0) return;
    double log_ref = 0.0;
    for (std::size_t a = 0; a < rank_; ++a) log_ref += log_ref_[a][idx[a]];
    kl += g * (std::log(g) - log_ref) - g;
  });
  return kl + ref_total_;
}

SolveResult ScalingSolver::run(double eps, const Potentials* warm) {
  eps_ = eps;
  SolveResult result;
  result.report.epsilon_final = eps;

  f_.assign(rank_, {});
  for (std::size_t a = 0; a < rank_; ++a) {
    f_[a].assign(cost_.extents[a], 0.0);
    const bool usable = warm && warm->f.size() == rank_ && warm->f[a].size() == cost_.extents[a] &&
                        !is_free(penalties_[a]);
    if (usable) {
      for (std::size_t x = 0; x < cost_.extents[a]; ++x) {
        if (alive_[a][x] && std::isfinite(warm->f[a][x])) f_[a][x] = warm->f[a][x];
      }
    }
  }
  f_abs_ = f_;
  u_.assign(rank_, {});
  for (std::size_t a = 0; a < rank_; ++a) u_[a].assign(cost_.extents[a], 1.0);

  if (infeasible_ || !any_alive_) {
    kernel_.assign(cost_.size(), 0.0);
    result.report.converged = true;
  } else {
    absorb();
    for (int it = 1; it <= cfg_.max_iter; ++it) {
      const auto previous = f_;
      for (std::size_t a = 0; a < rank_; ++a) {
        if (!is_free(penalties_[a])) update_axis(a);
      }
      translate();
      translate_blocks();
      double change = 0.0;
      for (std::size_t a = 0; a < rank_; ++a) {
        if (is_free(penalties_[a])) continue;
        for (std::size_t x = 0; x < f_[a].size(); ++x) {
          if (alive_[a][x]) change = std::max(change, std::abs(f_[a][x] - previous[a][x]));
        }
      }
      result.report.iterations = it;
      result.report.fixed_point_residual = change;
      if (!std::isfinite(change)) throw std::runtime_error("scaling iteration diverged");
      if (change < cfg_.tol) {
        result.report.converged = true;
        break;
      }
    }
    // leave hard marginals exactly projected
    for (std::size_t a = 0; a < rank_; ++a) {
      if (penalties_[a].kind == MarginalPenalty::Kind::Hard) update_axis(a);
    }
  }

  result.plan = current_plan();
  result.potentials.f = f_;
  auto& rep = result.report;
  rep.infeasible = infeasible_;
  if (infeasible_) {
    rep.unregularized_objective = kInfinity;
    rep.regularized_objective = kInfinity;
  } else {
    rep.unregularized_objective = unregularized_objective(result.plan, cost_, targets_, penalties_);
    rep.regularized_objective = rep.unregularized_objective + eps_ * entropic_term(result.plan);
  }
  rep.residuals = marginal_residuals(result.plan, targets_, penalties_);
  rep.stage_objectives = {rep.unregularized_objective};
  return result;
}

}  // namespace

SolveResult sinkhorn_general(const Tensor& cost, std::span<const std::vector<double>> targets,
                             std::span<const MarginalPenalty> penalties, double epsilon,
                             const SolverConfig& cfg, const Potentials* warm_start) {
  validate_problem(cost, targets, penalties);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be > 0");
  SolverConfig checked = cfg;
  checked.epsilon_start = checked.epsilon_final = epsilon;
  checked.validate();
  ScalingSolver solver(cost, targets, penalties, cfg);
  return solver.run(epsilon, warm_start);
}

SolveResult anneal(const Tensor& cost, std::span<const std::vector<double>> targets,
                   std::span<const MarginalPenalty> penalties, const SolverConfig& cfg) {
  cfg.validate();
  validate_problem(cost, targets, penalties);
  ScalingSolver solver(cost, targets, penalties, cfg);
  double eps = cfg.epsilon_start;
  SolveResult result;
  std::vector<double> stages;
  int iterations = 0;
  const Potentials* warm = nullptr;
  Potentials carried;
  while (true) {
    result = solver.run(eps, warm);
    iterations += result.report.iterations;
    stages.push_back(result.report.unregularized_objective);
    if (eps <= cfg.epsilon_final) break;
    carried = result.potentials;
    warm = &carried;
    eps = std::max(eps * cfg.epsilon_factor, cfg.epsilon_final);
  }
  result.report.iterations = iterations;
  result.report.stage_objectives = std::move(stages);
  return result;
}

double unregularized_objective(const TransportPlan& plan, const Tensor& cost,
                               std::span<const std::vector<double>> targets,
                               std::span<const MarginalPenalty> penalties) {
  if (plan.mass.size() != cost.values.size()) throw std::invalid_argument("plan and cost shapes differ");
  double value = 0.0;
  for (std::size_t e = 0; e < plan.mass.size(); ++e) {
    if (plan.mass[e] > 0.0) value += cost.values[e] * plan.mass[e];
  }
  for (std::size_t a = 0; a < penalties.size(); ++a) {
    if (is_free(penalties[a])) continue;
    const auto marginal = plan.marginal(a);
    if (penalties[a].kind == MarginalPenalty::Kind::Soft) {
      value += penalties[a].weight * divergence(marginal, targets[a], EntropyKind::KL);
    } else {
      value += divergence(marginal, targets[a], EntropyKind::HardEquality);
    }
  }
  return value;
}

std::vector<double> marginal_residuals(const TransportPlan& plan,
                                       std::span<const std::vector<double>> targets,
                                       std::span<const MarginalPenalty> penalties) {
  std::vector<double> out(penalties.size(), 0.0);
  for (std::size_t a = 0; a < penalties.size(); ++a) {
    if (is_free(penalties[a])) continue;
    const auto marginal = plan.marginal(a);
    if (penalties[a].kind == MarginalPenalty::Kind::Soft) {
      out[a] = divergence(marginal, targets[a], EntropyKind::KL);
    } else {
      double gap = 0.0;
      for (std::size_t x = 0; x < marginal.size(); ++x) gap = std::max(gap, std::abs(marginal[x] - targets[a][x]));
      out[a] = gap;
    }
  }
  return out;
}

}  // namespace hkbary
