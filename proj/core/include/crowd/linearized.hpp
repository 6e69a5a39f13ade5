#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "crowd/grid.hpp"
#include "crowd/solver.hpp"

namespace crowd {

/// States of a differentiable-family run at every solver step, with the step
/// sequence that produced them, so that perturbed runs can replay it.
struct Trajectory {
  std::shared_ptr<const ModelSpec> model;
  /// times[0] = 0 < times[1] < ... ; states[k] is the state at times[k].
  std::vector<double> times;
  std::vector<PopulationField> states;
  /// schedule[k] takes states[k] to states[k + 1].
  std::vector<StepTiming> schedule;

  const GridSpec& grid() const { return model->grid; }
  /// Index of the stored time equal to t (relative tolerance 1e-12). Throws RangeError.
  std::size_t index_of(double t) const;
};

/// Runs the model from `datum` to model.t_max and keeps every step. With a
/// schedule the step sequence is replayed instead of chosen by CFL.
Trajectory record_trajectory(const ModelSpec& model, const PopulationField& datum,
                             const std::vector<StepTiming>* schedule = nullptr);

/// (rho^i v^i'(rho*eta) (sigma*eta) + sigma^i v^i(rho*eta)) vdir^i per population,
/// with rho*eta = sum_j rho^j * eta^j. Throws UnsupportedModelError for the deviation family.
std::vector<VecField> linearized_velocity(const PopulationField& rho, const PopulationField& sigma,
                                          const ModelSpec& model);

/// sigma(t) from the linearized equation, discretized as the exact derivative of
/// the split scheme along the stored trajectory. Throws RangeError when t is not
/// a stored time.
PopulationField solve_linearized(const Trajectory& traj, const PopulationField& sigma0, double t);

/// || S_t(rho0 + h sigma0) - S_t rho0 - h Sigma_t sigma0 ||_L1 with all nonlinear
/// runs on the step sequence of the rho0 run.
double gateaux_residual(const ModelSpec& model, const PopulationField& rho0,
                        const PopulationField& sigma0, double t, double h);

struct GateauxRow {
  double h = 0.0;
  double residual = 0.0;
  /// residual / h
  double ratio = 0.0;
};

/// gateaux_residual over several h, sharing the reference run and sigma(t).
std::vector<GateauxRow> gateaux_sweep(const ModelSpec& model, const PopulationField& rho0,
                                      const PopulationField& sigma0, double t,
                                      std::span<const double> hs);

struct CostSpec {
  /// f(rho^1, ..., rho^n) and its gradient, evaluated cellwise.
  std::function<double(std::span<const double>)> f;
  std::function<void(std::span<const double>, std::span<double>)> grad_f;
  Field2D psi;
  double t = 0.0;
};

/// sum f(rho) psi dx dy.
double cost_value(const PopulationField& state, const CostSpec& cost);

struct CostValue {
  double J = 0.0;
  double DJ = 0.0;
};

/// J = sum f(rho(t)) psi dx dy and DJ = sum grad f(rho(t)) . sigma(t) psi dx dy.
/// Throws NumericError when grad f is not finite on the attained states.
CostValue cost_and_gradient(const Trajectory& traj, const CostSpec& cost,
                            const PopulationField& sigma0);

}  // namespace crowd
