#include "crowd/linearized.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crowd/errors.hpp"

namespace crowd {

std::size_t Trajectory::index_of(double t) const {
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return k;
  throw RangeError("time " + std::to_string(t) + " is not a stored trajectory time");
}

namespace {

void require_differentiable(const ModelSpec& model) {
  if (model.family != ModelFamily::Differentiable)
    throw UnsupportedModelError("linearization is only available for the differentiable family");
}

// DV^i(sigma) = v^i'(rho*eta) (sigma*eta) vdir^i, the v' factor cut off where the
// clamped argument rho*eta is negative.
std::vector<VecField> velocity_derivative(const PopulationField& rho, const PopulationField& sigma,
                                          const ModelSpec& model) {
  const auto kernels = model.kernels();
  const Field2D c = convolved_density(rho, kernels);
  const Field2D s = convolved_density(sigma, kernels);
  std::vector<VecField> out;
  out.reserve(model.n());
  for (std::size_t p = 0; p < model.n(); ++p) {
    const auto& law = model.populations[p].law;
    const VecField dir = model.populations[p].direction.total();
    VecField dv(rho.grid().nx, rho.grid().ny);
    auto cv = c.values(), sv = s.values();
    auto ox = dv.x.values(), oy = dv.y.values();
    auto dx = dir.x.values(), dy = dir.y.values();
    for (std::size_t k = 0; k < cv.size(); ++k) {
      const double w = cv[k] >= 0.0 ? law.derivative(cv[k]) * sv[k] : 0.0;
      ox[k] = w * dx[k];
      oy[k] = w * dy[k];
    }
    out.push_back(std::move(dv));
  }
  return out;
}

Field2D product(const Field2D& a, const Field2D& b) {
  Field2D out(a.nx(), a.ny());
  auto av = a.values(), bv = b.values();
  auto o = out.values();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = av[k] * bv[k];
  return out;
}

// One step of the split scheme and of its derivative, advancing rho and sigma
// together so that the y sweep of sigma sees the intermediate reference state.
void linearized_step(const ModelSpec& model, PopulationField& rho, PopulationField& sigma,
                     const StepTiming& timing, const BoundaryFaces& faces) {
  const Transport tr = transport(rho, model);
  const std::vector<VecField> dv = velocity_derivative(rho, sigma, model);
  ExitGates gates;
  for (const auto& [axis, fraction] : sweep_sequence(model.order)) {
    const double dt = fraction * timing.dt;
    for (std::size_t p = 0; p < model.n(); ++p) {
      const Field2D& v = axis == Axis::X ? tr.field[p].x : tr.field[p].y;
      const Field2D& d = axis == Axis::X ? dv[p].x : dv[p].y;
      const Field2D f_rho = product(rho[p], v);
      Field2D f_sigma = product(sigma[p], v);
      f_sigma += product(rho[p], d);
      lxf_sweep(axis, rho[p], f_rho, dt, timing.dt_stable, model.grid, faces, &gates);
      lxf_sweep(axis, sigma[p], f_sigma, dt, timing.dt_stable, model.grid, faces, nullptr,
                &gates);
    }
  }
}

ModelSpec model_until(const ModelSpec& model, double t) {
  ModelSpec m = model;
  m.t_max = t;
  m.snapshot_times.clear();
  return m;
}

}  // namespace

Trajectory record_trajectory(const ModelSpec& model, const PopulationField& datum,
                             const std::vector<StepTiming>* schedule) {
  Trajectory traj;
  traj.model = std::make_shared<const ModelSpec>(model);
  traj.times.push_back(0.0);
  traj.states.push_back(datum);
  RunObserver obs;
  obs.on_step = [&](const StepReport& rep, const PopulationField& state, const Transport&) {
    traj.times.push_back(rep.t);
    traj.states.push_back(state);
  };
  RunOptions opts;
  opts.schedule = schedule;
  traj.schedule = run(model, datum, obs, opts).schedule;
  return traj;
}

std::vector<VecField> linearized_velocity(const PopulationField& rho, const PopulationField& sigma,
                                          const ModelSpec& model) {
  require_differentiable(model);
  if (!(rho.grid() == sigma.grid()) || rho.n() != sigma.n() || rho.n() != model.n())
    throw DimensionError("rho and sigma must share grid and population count with the model");
  const auto kernels = model.kernels();
  const Field2D c = convolved_density(rho, kernels);
  std::vector<VecField> out = velocity_derivative(rho, sigma, model);
  for (std::size_t p = 0; p < model.n(); ++p) {
    const auto& law = model.populations[p].law;
    const VecField dir = model.populations[p].direction.total();
    auto r = rho[p].values(), s = sigma[p].values(), cv = c.values();
    auto ox = out[p].x.values(), oy = out[p].y.values();
    auto dx = dir.x.values(), dy = dir.y.values();
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double speed = s[k] * law(std::max(0.0, cv[k]));
      ox[k] = r[k] * ox[k] + speed * dx[k];
      oy[k] = r[k] * oy[k] + speed * dy[k];
    }
  }
  return out;
}

PopulationField solve_linearized(const Trajectory& traj, const PopulationField& sigma0, double t) {
  if (!traj.model) throw ConfigError("trajectory has no model");
  const ModelSpec& model = *traj.model;
  require_differentiable(model);
  if (!(sigma0.grid() == model.grid) || sigma0.n() != model.n())
    throw DimensionError("sigma0 does not match the trajectory grid");
  const std::size_t last = traj.index_of(t);
  const BoundaryFaces faces = boundary_faces(model.grid);
  PopulationField sigma = sigma0;
  for (std::size_t k = 0; k < last; ++k) {
    PopulationField rho = traj.states[k];
    linearized_step(model, rho, sigma, traj.schedule[k], faces);
  }
  return sigma;
}

std::vector<GateauxRow> gateaux_sweep(const ModelSpec& model, const PopulationField& rho0,
                                      const PopulationField& sigma0, double t,
                                      std::span<const double> hs) {
  require_differentiable(model);
  const ModelSpec m = model_until(model, t);
  const Trajectory ref = record_trajectory(m, rho0);
  const PopulationField& base = ref.states.back();
  const PopulationField sigma = solve_linearized(ref, sigma0, ref.times.back());

  std::vector<GateauxRow> rows;
  for (double h : hs) {
    if (!(h > 0.0)) throw ConfigError("Gateaux step h must be positive");
    RunOptions opts;
    opts.schedule = &ref.schedule;
    const PopulationField moved = run(m, combine(1.0, rho0, h, sigma0), {}, opts).final_state;
    // S(rho0 + h sigma0) - S(rho0) - h sigma(t)
    const PopulationField rem = combine(1.0, combine(1.0, moved, -1.0, base), -h, sigma);
    double r = 0.0;
    for (const auto& f : rem.populations()) r += l1_norm(f, m.grid);
    rows.push_back({h, r, r / h});
  }
  return rows;
}

double gateaux_residual(const ModelSpec& model, const PopulationField& rho0,
                        const PopulationField& sigma0, double t, double h) {
  const double hs[] = {h};
  return gateaux_sweep(model, rho0, sigma0, t, hs).front().residual;
}

namespace {

void check_cost(const CostSpec& cost, const PopulationField& state) {
  if (!cost.f) throw ConfigError("cost function f is not set");
  if (!state.grid().matches(cost.psi)) throw DimensionError("cost weight psi does not match grid");
}

}  // namespace

double cost_value(const PopulationField& state, const CostSpec& cost) {
  check_cost(cost, state);
  const GridSpec& g = state.grid();
  std::vector<double> cell(state.n());
  double sum = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double w = cost.psi(i, j);
      if (w == 0.0) continue;
      for (std::size_t p = 0; p < state.n(); ++p) cell[p] = state[p](i, j);
      sum += cost.f(cell) * w;
    }
  return sum * g.cell_area();
}

CostValue cost_and_gradient(const Trajectory& traj, const CostSpec& cost,
                            const PopulationField& sigma0) {
  const std::size_t k = traj.index_of(cost.t);
  const PopulationField& rho = traj.states[k];
  check_cost(cost, rho);
  if (!cost.grad_f) throw ConfigError("cost gradient grad_f is not set");
  const PopulationField sigma = solve_linearized(traj, sigma0, traj.times[k]);

  const GridSpec& g = rho.grid();
  const std::size_t n = rho.n();
  std::vector<double> cell(n), grad(n);
  double dj = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const double w = cost.psi(i, j);
      if (w == 0.0) continue;
      for (std::size_t p = 0; p < n; ++p) cell[p] = rho[p](i, j);
      cost.grad_f(cell, grad);
      double s = 0.0;
      for (std::size_t p = 0; p < n; ++p) {
        if (!std::isfinite(grad[p]))
          throw NumericError("cost gradient is not finite at cell (" + std::to_string(i) + ", " +
                             std::to_string(j) + ")");
        s += grad[p] * sigma[p](i, j);
      }
      dj += s * w;
    }
  return {cost_value(rho, cost), dj * g.cell_area()};
}

}  // namespace crowd
