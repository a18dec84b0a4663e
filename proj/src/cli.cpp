#include "hkbary/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "hkbary/entropy.hpp"

namespace hkbary::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw DataError(where + ": cannot parse number '" + s + "'");
  }
  return v;
}

Point parse_point(const std::string& s, int& dim) {
  const auto parts = split(s, ',');
  if (parts.empty() || parts.size() > 2) throw DataError("point '" + s + "' must have 1 or 2 coordinates");
  dim = static_cast<int>(parts.size());
  Point p{parse_double(parts[0], "point"), 0.0};
  if (dim == 2) p[1] = parse_double(parts[1], "point");
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  return f;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
}

BarycenterProblem make_problem(const RunConfig& cfg, std::vector<DiscreteMeasure> measures,
                               const GridPtr& grid) {
  BarycenterProblem p;
  p.measures = std::move(measures);
  p.lambdas = cfg.lambdas;
  if (p.lambdas.empty()) p.lambdas.assign(p.measures.size(), 1.0 / static_cast<double>(p.measures.size()));
  p.cost = cfg.cost;
  p.candidates = grid;
  p.solver = cfg.solver;
  p.mode = cfg.continuous ? ArgminMode::Continuous : ArgminMode::Grid;
  return p;
}

std::vector<DiscreteMeasure> read_inputs(const RunConfig& cfg, const GridPtr& grid) {
  if (cfg.inputs.size() < 2) throw std::invalid_argument("at least two input CSV files required");
  std::vector<DiscreteMeasure> out;
  for (const auto& path : cfg.inputs) out.push_back(read_measure_csv(path, grid));
  return out;
}

json residuals_json(const SolverReport& r) {
  json a = json::array();
  for (double v : r.residuals) a.push_back(number(v));
  return a;
}

std::size_t mode_index(const DiscreteMeasure& m) {
  const auto masses = m.masses();
  return static_cast<std::size_t>(std::max_element(masses.begin(), masses.end()) - masses.begin());
}

}  // namespace

GridPtr RunConfig::grid() const {
  if (bounds.size() != 2 && bounds.size() != 4) {
    throw std::invalid_argument("--bounds takes lo,hi (1D) or lo,hi,lo,hi (2D)");
  }
  std::vector<Interval> iv;
  for (std::size_t a = 0; a < bounds.size(); a += 2) iv.push_back({bounds[a], bounds[a + 1]});
  return make_grid(dim(), iv, grid_n);
}

DiscreteMeasure read_measure_csv(const std::string& path, const GridPtr& grid) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++lineno;
    if (!trim(line).empty()) header = split(trim(line), ',');
  }
  const bool ok1 = header == std::vector<std::string>{"x", "mass"};
  const bool ok2 = header == std::vector<std::string>{"x", "y", "mass"};
  if (!ok1 && !ok2) throw DataError(path + ": header must be 'x,mass' or 'x,y,mass'");
  const int dim = ok1 ? 1 : 2;
  if (dim != grid->dim()) throw DataError(path + ": dimension does not match the grid");

  std::vector<double> masses(grid->size(), 0.0);
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto where = path + ":" + std::to_string(lineno);
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " columns");
    Point p{parse_double(cells[0], where), dim == 2 ? parse_double(cells[1], where) : 0.0};
    const double m = parse_double(cells.back(), where);
    if (!std::isfinite(m) || m < 0.0) throw DataError(where + ": mass must be finite and >= 0");
    const std::size_t idx = grid->nearest(p);
    const Point q = grid->point(idx);
    for (int a = 0; a < dim; ++a) {
      if (std::abs(p[a] - q[a]) > 0.5 * grid->spacing(a) * (1.0 + 1e-9)) {
        throw DataError(where + ": point lies off the grid");
      }
    }
    masses[idx] += m;
  }
  return DiscreteMeasure(grid, std::move(masses));
}

void write_measure_csv(const std::string& path, const DiscreteMeasure& m) {
  auto f = open_out(path);
  const bool two = m.grid().dim() == 2;
  f << (two ? "x,y,mass\n" : "x,mass\n");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(m[i] > 0.0)) continue;
    const Point p = m.grid().point(i);
    f << fmt(p[0]) << ',';
    if (two) f << fmt(p[1]) << ',';
    f << fmt(m[i]) << '\n';
  }
}

DiscreteMeasure gaussian_measure(const GridPtr& grid, double mean, double sd, double mass) {
  if (grid->dim() != 1) throw std::invalid_argument("gaussian_measure needs a 1D grid");
  if (!(sd > 0.0) || !(mass >= 0.0)) throw std::invalid_argument("gaussian_measure: sd > 0 and mass >= 0 required");
  std::vector<double> d(grid->size());
  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double z = (grid->coordinate(0, i) - mean) / sd;
    d[i] = std::exp(-0.5 * z * z);
    total += d[i];
  }
  for (double& v : d) v *= mass / total;
  return DiscreteMeasure(grid, std::move(d));
}

int cmd_barycenter(const RunConfig& cfg, std::ostream& out) {
  const auto grid = cfg.grid();
  const auto p = make_problem(cfg, read_inputs(cfg, grid), grid);
  ensure_dir(cfg.out_dir);
  const fs::path dir(cfg.out_dir);

  json report;
  BarycenterSolution sol;
  if (cfg.verify) {
    auto r = verify_equalities(p);
    report["values"] = {{"smm", number(r.smm)}, {"extended", number(r.extended)},
                        {"cc2m", number(r.cc2m)}, {"conic", number(r.conic)}};
    report["gaps"] = {{"extended", number(r.gap_extended)}, {"cc2m", number(r.gap_cc2m)},
                      {"conic", number(r.gap_conic)}, {"tolerance", number(r.tolerance)},
                      {"passed", r.passed}};
    sol = std::move(r.solution);
  } else {
    sol = solve_smm(p);
    report["values"] = {{"smm", number(sol.value)}};
    report["gaps"] = json::object();
  }
  report["residuals"] = residuals_json(sol.report);
  report["iterations"] = sol.report.iterations;
  report["epsilon_final"] = sol.report.epsilon_final;
  report["converged"] = sol.report.converged;
  report["barycenter_mass"] = total_mass(sol.barycenter);
  report["zero_plan"] = sol.zero_plan;

  write_measure_csv((dir / "barycenter.csv").string(), sol.barycenter);
  for (std::size_t i = 0; i < p.measures.size(); ++i) {
    write_measure_csv((dir / ("plan_marginal_" + std::to_string(i + 1) + ".csv")).string(),
                      plan_marginal(sol, p, i));
  }
  if (p.mode == ArgminMode::Continuous) {
    auto f = open_out(dir / "barycenter_atoms.csv");
    f << (grid->dim() == 2 ? "x,y,mass\n" : "x,mass\n");
    for (const auto& a : sol.atoms) {
      f << fmt(a.point[0]) << ',';
      if (grid->dim() == 2) f << fmt(a.point[1]) << ',';
      f << fmt(a.mass) << '\n';
    }
  }
  open_out(dir / "report.json") << report.dump(2) << '\n';

  out << "value " << fmt(sol.value) << "\nbarycenter_mass " << fmt(total_mass(sol.barycenter))
      << "\nconverged " << (sol.report.converged ? "true" : "false") << '\n';
  return sol.report.converged ? kOk : kNotConverged;
}

int cmd_gaussians_demo(const RunConfig& cfg, std::ostream& out) {
  if (cfg.dim() != 1) throw std::invalid_argument("gaussians-demo runs on a 1D grid");
  const auto grid = cfg.grid();
  const auto mu1 = gaussian_measure(grid, 0.2, 0.05, 1.0);
  const auto mu2 = gaussian_measure(grid, 0.8, 0.08, 2.0);
  const std::vector<double> weights = cfg.lambdas.empty() ? std::vector<double>{0.25, 0.5, 0.75} : cfg.lambdas;
  ensure_dir(cfg.out_dir);
  const fs::path dir(cfg.out_dir);

  json summary = json::array();
  bool all_converged = true;
  for (auto kind : {GroundCostKind::Quadratic, GroundCostKind::HK}) {
    const std::string cost_name = kind == GroundCostKind::HK ? "hk" : "quadratic";
    for (double l1 : weights) {
      if (!(l1 >= 0.0 && l1 <= 1.0)) throw std::invalid_argument("demo weights must lie in [0, 1]");
      RunConfig c = cfg;
      c.cost = kind;
      c.lambdas = {l1, 1.0 - l1};
      const auto p = make_problem(c, {mu1, mu2}, grid);
      const auto sol = solve_smm(p);
      const auto g1 = plan_marginal(sol, p, 0);
      const auto g2 = plan_marginal(sol, p, 1);

      char name[64];
      std::snprintf(name, sizeof name, "gaussians_%s_lambda%g.csv", cost_name.c_str(), l1);
      auto f = open_out(dir / name);
      f << "x,mu1,mu2,gamma_marg1,gamma_marg2,barycenter\n";
      for (std::size_t i = 0; i < grid->size(); ++i) {
        f << fmt(grid->coordinate(0, i)) << ',' << fmt(mu1[i]) << ',' << fmt(mu2[i]) << ','
          << fmt(g1[i]) << ',' << fmt(g2[i]) << ',' << fmt(sol.barycenter[i]) << '\n';
      }
      const double mass = total_mass(sol.barycenter);
      const double mode = grid->coordinate(0, mode_index(sol.barycenter));
      summary.push_back({{"cost", cost_name}, {"lambda1", l1}, {"value", number(sol.value)},
                         {"barycenter_mass", mass}, {"mode", mode},
                         {"iterations", sol.report.iterations}, {"converged", sol.report.converged},
                         {"file", name}});
      all_converged = all_converged && sol.report.converged;
      out << cost_name << " lambda1=" << fmt(l1) << " mass=" << fmt(mass) << " mode=" << fmt(mode)
          << (sol.report.converged ? "" : " NOT CONVERGED") << '\n';
    }
  }
  open_out(dir / "gaussians_summary.json") << summary.dump(2) << '\n';
  return all_converged ? kOk : kNotConverged;
}

int cmd_dirac(const RunConfig& cfg, std::ostream& out) {
  if (cfg.points.size() < 2) throw std::invalid_argument("dirac needs at least two --point values");
  if (cfg.masses.size() != cfg.points.size()) throw std::invalid_argument("one --mass per --point required");
  std::vector<Point> pts;
  int dim = 0;
  for (const auto& s : cfg.points) {
    int d = 0;
    pts.push_back(parse_point(s, d));
    if (dim != 0 && d != dim) throw DataError("points mix 1D and 2D coordinates");
    dim = d;
  }
  auto lambdas = cfg.lambdas;
  if (lambdas.empty()) lambdas.assign(pts.size(), 1.0 / static_cast<double>(pts.size()));
  const auto r = dirac_barycenter(pts, cfg.masses, lambdas, cfg.cost, dim);
  json j;
  if (!r) {
    j = {{"zero", true}, {"mass", 0.0}};
  } else {
    json point = json::array({r->point[0]});
    if (dim == 2) point.push_back(r->point[1]);
    j = {{"zero", false}, {"point", point}, {"mass", r->mass}, {"least_cost", r->least_cost}};
  }
  out << j.dump() << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  const auto grid = cfg.grid();
  const auto p = make_problem(cfg, read_inputs(cfg, grid), grid);
  const auto r = verify_equalities(p);
  out << "smm      " << fmt(r.smm) << '\n'
      << "extended " << fmt(r.extended) << "  gap " << fmt(r.gap_extended) << '\n'
      << "cc2m     " << fmt(r.cc2m) << "  gap " << fmt(r.gap_cc2m) << '\n'
      << "conic    " << fmt(r.conic) << "  gap " << fmt(r.gap_conic) << '\n'
      << "tolerance " << fmt(r.tolerance) << '\n'
      << (r.passed ? "PASS" : "FAIL") << '\n';
  return r.passed ? kOk : kVerifyFailed;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constrained Hellinger-Kantorovich barycenters"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key = value file; command-line flags take precedence");

  RunConfig cfg;
  std::string cost = "hk";
  app.add_option("--cost", cost, "ground cost")->check(CLI::IsMember({"hk", "quadratic"}));
  app.add_option("--grid-n", cfg.grid_n, "grid points per axis")->check(CLI::Range(2, 1 << 20));
  app.add_option("--bounds", cfg.bounds, "lo,hi per axis")->delimiter(',')->expected(2, 4);
  app.add_option("--lambda", cfg.lambdas, "barycenter weight (repeat per input)")->delimiter(',');
  app.add_option("--eps-start", cfg.solver.epsilon_start, "first regularization strength")->capture_default_str();
  app.add_option("--eps-final", cfg.solver.epsilon_final, "last regularization strength")->capture_default_str();
  app.add_option("--eps-factor", cfg.solver.epsilon_factor, "ratio between annealing stages")->capture_default_str();
  app.add_option("--tol", cfg.solver.tol, "stop when potentials move less than this per sweep")->capture_default_str();
  app.add_option("--max-iter", cfg.solver.max_iter, "sweeps per annealing stage")->capture_default_str();
  app.add_flag("--continuous-argmin", cfg.continuous, "refine T off the candidate grid");
  app.add_flag("--verify", cfg.verify, "also compute the extended, coupled and conic values");
  app.add_option("--out-dir", cfg.out_dir, "output directory");

  auto* bary = app.add_subcommand("barycenter", "barycenter of input measure CSVs");
  bary->add_option("inputs", cfg.inputs, "measure CSV files")->required()->check(CLI::ExistingFile);
  auto* demo = app.add_subcommand("gaussians-demo", "two truncated Gaussians on [0,1]");
  auto* dirac = app.add_subcommand("dirac", "closed-form barycenter of Dirac masses");
  dirac->add_option("--point", cfg.points, "x or x,y (repeat per Dirac)")->required();
  dirac->add_option("--mass", cfg.masses, "mass (repeat per Dirac)")->required();
  auto* verify = app.add_subcommand("verify", "three-way equality check");
  verify->add_option("inputs", cfg.inputs, "measure CSV files")->required()->check(CLI::ExistingFile);
  for (auto* sub : {bary, demo, dirac, verify}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  cfg.cost = cost == "hk" ? GroundCostKind::HK : GroundCostKind::Quadratic;

  try {
    cfg.solver.validate();
    if (bary->parsed()) return cmd_barycenter(cfg, out);
    if (demo->parsed()) return cmd_gaussians_demo(cfg, out);
    if (dirac->parsed()) return cmd_dirac(cfg, out);
    return cmd_verify(cfg, out);
  } catch (const GridMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace hkbary::cli
