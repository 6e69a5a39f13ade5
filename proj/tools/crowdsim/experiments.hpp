#pragma once

#include <vector>

#include "config.hpp"
#include "crowd/analysis.hpp"
#include "crowd/linearized.hpp"
#include "crowd/solver.hpp"

namespace crowdsim {

/// Empirical C_I per population from the datum and scaled / shifted copies of it.
/// Zero operators get 0. These are lower estimates of the true constant.
std::vector<double> estimate_constants(const crowd::ModelSpec& model,
                                       const crowd::PopulationField& datum);

/// Copy of `f` moved by (di, dj) cells with zero fill.
crowd::Field2D shifted(const crowd::Field2D& f, long di, long dj);

/// Smooth differentiable-family configuration on a closed 64 x 64 grid over
/// [-2, 2]^2 with a normalized kernel: v = 1 - rho / 2 (or v = 1 when
/// constant_speed), direction (1, 0.5), rho0 a bump on a 0.2 floor, sigma0 a
/// signed pair of bumps.
struct GateauxScenario {
  crowd::ModelSpec model;
  crowd::PopulationField rho0;
  crowd::PopulationField sigma0;
  double t = 0.2;
};

GateauxScenario gateaux_scenario(bool constant_speed = false);

/// Datum with population 1 rescaled so that the L1 distance to `datum` is `size`.
crowd::PopulationField perturbed_datum(const crowd::PopulationField& datum, double size);

struct StabilityRow {
  double t = 0.0;
  double distance = 0.0;
  double bound = 0.0;
  double bound_log10 = 0.0;
  bool dominated = false;
};

/// Runs `model` from `datum` and from perturbed_datum(datum, size) and compares
/// the L1 distance at every snapshot time with the deviation stability bound.
std::vector<StabilityRow> stability_experiment(const crowd::ModelSpec& model,
                                               const crowd::PopulationField& datum, double size);

/// Runs `model` and evaluates the TV (and L^inf) bounds at every snapshot time.
crowd::BoundReport bounds_experiment(const crowd::ModelSpec& model,
                                     const crowd::PopulationField& datum);

}  // namespace crowdsim
