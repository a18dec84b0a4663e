#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hkbary/barycenter.hpp"

namespace hkbary::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kNotConverged = 3,
  kVerifyFailed = 4,
};

/// Malformed or unreadable input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  GroundCostKind cost = GroundCostKind::HK;
  std::size_t grid_n = 200;
  std::vector<double> bounds{0.0, 1.0};  // lo, hi per axis
  std::vector<double> lambdas;
  SolverConfig solver;
  bool continuous = false;
  bool verify = false;
  std::string out_dir = ".";
  std::vector<std::string> inputs;

  // dirac subcommand
  std::vector<std::string> points;
  std::vector<double> masses;

  int dim() const { return static_cast<int>(bounds.size() / 2); }
  GridPtr grid() const;
};

/// Reads `x,mass` or `x,y,mass` rows and snaps each point to the grid.
/// Points farther than half a cell from every grid point are rejected;
/// repeated points accumulate.
DiscreteMeasure read_measure_csv(const std::string& path, const GridPtr& grid);

/// Writes rows with positive mass at full precision.
void write_measure_csv(const std::string& path, const DiscreteMeasure& m);

/// Density of N(mean, sd) sampled on a 1D grid and scaled to `mass`.
DiscreteMeasure gaussian_measure(const GridPtr& grid, double mean, double sd, double mass);

int cmd_barycenter(const RunConfig& cfg, std::ostream& out);
int cmd_gaussians_demo(const RunConfig& cfg, std::ostream& out);
int cmd_dirac(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);

/// Parses argv and dispatches to a subcommand; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hkbary::cli
