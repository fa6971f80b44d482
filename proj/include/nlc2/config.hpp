#pragma once

// Run configuration, its INI text form and the initial-condition library.
//
// File layout: sections [grid] [params] [scheme] [ic] [diagnostics]
// [output] (and [study] for study files) holding `key = value` lines.
// Comments start a line with '#' or ';'. Unknown keys are rejected.
// M and N accept "inf".

#include <cstdint>
#include <string>
#include <vector>

#include "nlc2/diagnostics.hpp"
#include "nlc2/dynamics.hpp"
#include "nlc2/timestepper.hpp"

namespace nlc2 {

enum class InitialKind { constant, taylor_green, defect_pair, random_bandlimited };

struct InitialConditionSpec {
  InitialKind kind = InitialKind::constant;
  double amplitude = 1.0;  // taylor_green / random_bandlimited velocity scale
  // Tilt of the director away from e3: d ~ (tilt cos y, tilt sin x, 1) for
  // taylor_green, random in-plane perturbation for random_bandlimited.
  double director_tilt = 0.0;
  double separation = 2.0;   // defect_pair: distance between the cores
  double core_radius = 0.4;  // defect_pair: smoothing radius of each core
  // defect_pair: +1 gives both cores the same out-of-plane polarity (the
  // pair can unwind, S^2 degree 0), -1 opposite ones (S^2 degree 1).
  int polarity = 1;
  int kmax = 4;              // random_bandlimited
  double theta0 = 1.0;       // background temperature
  std::uint64_t seed = 1;

  bool operator==(const InitialConditionSpec&) const = default;
};

struct DiagnosticsSettings {
  std::size_t sample_stride = 10;
  std::size_t checkpoint_stride = 0;  // 0 disables periodic checkpoints
  std::vector<double> alphas{0.25, 0.5, 0.75};
  double entropy_tolerance = 1e-4;
  double eps0 = 0.0;       // <= 0: calibrated from the grid at run time
  double r_monitor = 0.0;  // <= 0: eight grid cells
  std::vector<double> radii;  // empty: just r_monitor
  bool operator==(const DiagnosticsSettings&) const = default;
};

struct OutputSettings {
  std::string directory = ".";
  std::string diagnostics = "diagnostics.csv";
  std::string checkpoint_prefix = "checkpoint";
  std::string final_checkpoint = "final.nlc2";
  bool operator==(const OutputSettings&) const = default;
};

struct RunConfig {
  int nx = 64;
  int ny = 64;
  ApproximationParams params;
  SchemeConfig scheme;
  double theta_floor = 1.0;
  InitialConditionSpec ic;
  DiagnosticsSettings diagnostics;
  OutputSettings output;

  TorusGrid grid() const { return TorusGrid(nx, ny); }
  // Checks every invariant; throws ConfigError naming the key.
  void validate() const;
  double resolved_eps0() const;
  double resolved_r_monitor() const;
  std::vector<double> resolved_radii() const;
  bool operator==(const RunConfig&) const = default;
};

// Diagnostics recorder settings with eps0 / radii defaults resolved.
RecorderConfig recorder_config(const RunConfig& config);

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Full key listing; parse_config(print_config(c)) == c.
std::string print_config(const RunConfig& config);
// Every key with its default and a one-line description.
std::string defaults_reference();

// Doubles as printed in config files and CSVs ("inf" for infinity).
std::string format_double(double v);
double parse_double(const std::string& text, const std::string& key);

std::string to_string(InitialKind kind);
std::string to_string(Scheme scheme);
std::string to_string(DirectorMode mode);
std::string to_string(ViscosityFamily family);

// Builds the initial State (pressure included) and asserts the data
// hypotheses: div u = 0, |d| <= 1 (= 1 in constrained mode), theta >= floor.
State make_initial_condition(const RunConfig& config);
State make_initial_condition(const InitialConditionSpec& spec, const TorusGrid& grid,
                             const ApproximationParams& params, double theta_floor);

// Integer winding number of the in-plane part (d1, d2) along the square
// loop of half-width `half_width` (in grid cells) around node (i, j).
int winding_number(const DirectorField& d, int i, int j, int half_width);

}  // namespace nlc2
