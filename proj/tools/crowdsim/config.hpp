#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "crowd/grid.hpp"
#include "crowd/solver.hpp"

namespace crowdsim {

struct PopulationConfig {
  /// "linear": v = vmax (1 - rho / R); "constant": v = vmax.
  std::string speed = "linear";
  double vmax = 4.0;
  double gx = 0.0;
  double gy = 0.0;
  double density = 0.0;
  crowd::Rect rect;
  /// Gradient-avoidance weight towards each source population.
  std::vector<double> eps;
  /// Flux-push weight of each source population (empty: none).
  std::vector<double> push;
};

struct RunConfig {
  std::string preset;
  crowd::ModelFamily family = crowd::ModelFamily::Deviation;

  crowd::Rect domain{-8.0, 8.0, -4.0, 4.0};
  crowd::Rect room{-8.0, 8.0, -3.0, 3.0};
  std::vector<crowd::Segment> exits;
  double mesh = 0.025;

  double max_density = 1.0;
  double cfl = 0.9;
  double t_max = 1.0;
  std::vector<double> snapshot_times;
  crowd::SplitOrder order = crowd::SplitOrder::Godunov;
  bool strict = false;
  double delta_max = 0.8;
  double delta_r = 0.75;

  std::vector<PopulationConfig> populations;

  double kernel_half_width = 0.5;
  bool normalize_kernel = false;

  std::string out_dir = "out";
  std::size_t diagnostics_every = 10;
  int threads = 0;
};

/// "crossing" or "evacuation". Throws ConfigError listing the valid names otherwise.
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Sectioned key = value text: an optional top-level `preset = name` first, then
/// [grid], [model], [population.i], [kernel] and [output] sections overriding it
/// key by key. '#' starts a comment. Errors carry the origin and line number.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Sets the mesh size; the grid is rebuilt from it by build_model.
void set_mesh(RunConfig& cfg, double mesh);

struct BuiltModel {
  crowd::ModelSpec model;
  crowd::PopulationField datum;
};

/// Grid, kernel, direction fields, nonlocal operators and initial datum.
BuiltModel build_model(const RunConfig& cfg);

}  // namespace crowdsim
