#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "crowd/grid.hpp"
#include "crowd/kernel.hpp"
#include "crowd/nonlocal.hpp"
#include "crowd/velocity.hpp"

namespace crowd {

enum class ModelFamily {
  /// V^i = v^i(sum_j rho^j * eta^j) vdir^i; flux rho^i V^i.
  Differentiable,
  /// flux q^i(rho^i) (vdir^i + I^i(rho)), q = rho v(rho), v(R) = 0.
  Deviation,
};

enum class SplitOrder {
  /// x sweep with dt, then y sweep with dt.
  Godunov,
  /// x with dt/2, y with dt, x with dt/2.
  Strang,
};

struct Population {
  SpeedLaw law;
  DirectionField direction;
  std::shared_ptr<const SampledKernel> kernel;
  NonlocalOp deviation;
};

struct ModelSpec {
  ModelFamily family = ModelFamily::Deviation;
  GridSpec grid;
  std::vector<Population> populations;
  double max_density = 1.0;
  double cfl = 0.9;
  double t_max = 1.0;
  std::vector<double> snapshot_times;
  SplitOrder order = SplitOrder::Godunov;
  /// Abort when the state leaves [-tol, R + tol] (deviation) or drops below -tol.
  bool strict = false;
  double invariance_tol = 1e-6;

  std::size_t n() const { return populations.size(); }
  std::vector<SpeedLaw> laws() const;
  std::vector<DirectionField> directions() const;
  std::vector<std::shared_ptr<const SampledKernel>> kernels() const;
  std::vector<NonlocalOp> operators() const;

  /// Throws ConfigError describing the first inconsistency found.
  void validate() const;
};

/// Velocity frozen over one split step. `field[i]` multiplies q^i(rho^i) in the
/// deviation family and rho^i in the differentiable family; `slope[i]` bounds
/// the derivative of that scalar factor (sup |q'| on [0, R], or 1).
struct Transport {
  std::vector<VecField> field;
  std::vector<double> slope;
};

Transport transport(const PopulationField& state, const ModelSpec& model);

/// Largest stable step cfl * min(dx, dy) / max_i slope_i |V^i|_inf (componentwise
/// sup), floored at 1e-12; +infinity when nothing moves.
double stable_dt(const Transport& tr, const GridSpec& grid, double cfl);

/// stable_dt capped at `cap` (the distance to the next output time).
double cfl_dt(const Transport& tr, const GridSpec& grid, double cfl, double cap);

/// Step length actually taken, and the untruncated stable step that sets the
/// Lax-Friedrichs viscosity h / dt_stable of every sweep in the step.
struct StepTiming {
  double dt = 0.0;
  double dt_stable = 0.0;
};

/// Ghost-padded copy ((nx + 2) x (ny + 2)) of a field: ghosts next to exit faces copy
/// the adjacent interior cell, all other ghosts are 0.
Field2D apply_boundary(const Field2D& field, const GridSpec& grid);

enum class Axis { X, Y };

/// Outgoing exit-face decisions of one sweep, replayed by the linearized solver.
using ExitGates = std::vector<std::uint8_t>;

/// One conservative Lax-Friedrichs sweep of u along `axis` with cell fluxes f:
///   F_{i+1/2} = (f_i + f_{i+1}) / 2 - (h / dt_stable) (u_{i+1} - u_i) / 2,
/// boundary faces from `apply_boundary` with zero flux through walls and
/// outflow-only flux through exits. When `record` is set the sign decisions at
/// exits are stored; when `replay` is set they are reused instead of recomputed.
/// Returns the mass that left through exits.
double lxf_sweep(Axis axis, Field2D& u, const Field2D& f, double dt, double dt_stable,
                 const GridSpec& grid, const BoundaryFaces& faces, ExitGates* record = nullptr,
                 const ExitGates* replay = nullptr);

/// The sweeps (axis, fraction of dt) making up one step for the given order.
std::vector<std::pair<Axis, double>> sweep_sequence(SplitOrder order);

struct StepOutcome {
  PopulationField state;
  /// Mass per population that left through exits during the step.
  std::vector<double> escaped;
};

/// Advances by dt with velocity assembled once from `state`.
StepOutcome split_step(const PopulationField& state, const ModelSpec& model, double dt);
StepOutcome split_step(const PopulationField& state, const ModelSpec& model, const Transport& tr,
                       const StepTiming& timing);

struct StepReport {
  double t = 0.0;
  double dt = 0.0;
  std::vector<double> mass;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> outflow;
};

struct RunObserver {
  /// After every step: report, post-step state, and the transport used for the step.
  std::function<void(const StepReport&, const PopulationField&, const Transport&)> on_step;
  /// At t = 0 (when listed) and at every snapshot time.
  std::function<void(double, const PopulationField&)> on_snapshot;
};

struct RunOptions {
  /// Replays a recorded step sequence instead of choosing steps by CFL.
  const std::vector<StepTiming>* schedule = nullptr;
};

struct RunResult {
  PopulationField final_state;
  std::vector<StepReport> steps;
  std::vector<StepTiming> schedule;
  /// Total mass per population that left through exits.
  std::vector<double> escaped;
};

/// Integrates from 0 to model.t_max landing exactly on every snapshot time.
RunResult run(const ModelSpec& model, const PopulationField& datum, const RunObserver& observer = {},
              const RunOptions& options = {});

}  // namespace crowd
