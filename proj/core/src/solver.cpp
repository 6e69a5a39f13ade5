#include "crowd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "crowd/errors.hpp"

namespace crowd {

std::vector<SpeedLaw> ModelSpec::laws() const {
  std::vector<SpeedLaw> out;
  out.reserve(populations.size());
  for (const auto& p : populations) out.push_back(p.law);
  return out;
}

std::vector<DirectionField> ModelSpec::directions() const {
  std::vector<DirectionField> out;
  out.reserve(populations.size());
  for (const auto& p : populations) out.push_back(p.direction);
  return out;
}

std::vector<std::shared_ptr<const SampledKernel>> ModelSpec::kernels() const {
  std::vector<std::shared_ptr<const SampledKernel>> out;
  out.reserve(populations.size());
  for (const auto& p : populations) out.push_back(p.kernel);
  return out;
}

std::vector<NonlocalOp> ModelSpec::operators() const {
  std::vector<NonlocalOp> out;
  out.reserve(populations.size());
  for (const auto& p : populations) out.push_back(p.deviation);
  return out;
}

void ModelSpec::validate() const {
  if (populations.empty()) throw ConfigError("model has no populations");
  if (grid.nx == 0 || grid.ny == 0) throw ConfigError("model grid is empty");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ConfigError("CFL number must lie in (0, 1]");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max must be finite and >= 0");
  if (!(max_density > 0.0)) throw ConfigError("maximal density R must be positive");
  for (double t : snapshot_times)
    if (!(t >= 0.0 && t <= t_max)) throw ConfigError("snapshot time outside [0, t_max]");
  for (std::size_t p = 0; p < populations.size(); ++p) {
    const auto& pop = populations[p];
    const std::string who = "population " + std::to_string(p + 1);
    const VecField dir = pop.direction.total();
    if (!grid.matches(dir.x) || !grid.matches(dir.y))
      throw ConfigError(who + ": direction field does not match the grid");
    if (family == ModelFamily::Deviation) {
      const double R = pop.law.max_density();
      if (std::abs(R - max_density) > 1e-12 * max_density)
        throw ConfigError(who + ": speed law R differs from the model R");
      if (std::abs(pop.law(R)) > 1e-12 * std::max(1.0, pop.law.sup_v()))
        throw ConfigError(who + ": speed law must vanish at R");
      if (pop.deviation.populations_referenced() > populations.size())
        throw ConfigError(who + ": nonlocal operator refers to a missing population");
    } else {
      if (!pop.kernel) throw ConfigError(who + ": differentiable family needs a kernel");
      if (pop.kernel->nx != grid.nx || pop.kernel->ny != grid.ny)
        throw ConfigError(who + ": kernel sampled on a different grid");
    }
  }
}

Transport transport(const PopulationField& state, const ModelSpec& model) {
  Transport tr;
  if (model.family == ModelFamily::Deviation) {
    tr.field = deviation_directions(state, model.directions(), model.operators());
    for (const auto& p : model.populations) tr.slope.push_back(p.law.sup_dq());
  } else {
    tr.field = assemble_differentiable(state, model.laws(), model.directions(), model.kernels()).v;
    tr.slope.assign(model.n(), 1.0);
  }
  return tr;
}

double stable_dt(const Transport& tr, const GridSpec& grid, double cfl) {
  double speed = 0.0;
  for (std::size_t p = 0; p < tr.field.size(); ++p) {
    double m = 0.0;
    for (double v : tr.field[p].x.values()) m = std::max(m, std::abs(v));
    for (double v : tr.field[p].y.values()) m = std::max(m, std::abs(v));
    speed = std::max(speed, tr.slope[p] * m);
  }
  if (!std::isfinite(speed)) throw NumericError("velocity field is not finite");
  if (speed == 0.0) return std::numeric_limits<double>::infinity();
  return std::max(1e-12, cfl * std::min(grid.dx, grid.dy) / speed);
}

double cfl_dt(const Transport& tr, const GridSpec& grid, double cfl, double cap) {
  return std::min(cap, stable_dt(tr, grid, cfl));
}

Field2D apply_boundary(const Field2D& field, const GridSpec& grid) {
  if (!grid.matches(field)) throw DimensionError("field does not match grid");
  const std::size_t nx = grid.nx, ny = grid.ny;
  const BoundaryFaces faces = boundary_faces(grid);
  Field2D out(nx + 2, ny + 2);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) out(i + 1, j + 1) = field(i, j);
  for (std::size_t j = 0; j < ny; ++j) {
    if (faces.left[j]) out(0, j + 1) = field(0, j);
    if (faces.right[j]) out(nx + 1, j + 1) = field(nx - 1, j);
  }
  for (std::size_t i = 0; i < nx; ++i) {
    if (faces.bottom[i]) out(i + 1, 0) = field(i, 0);
    if (faces.top[i]) out(i + 1, ny + 1) = field(i, ny - 1);
  }
  return out;
}

double lxf_sweep(Axis axis, Field2D& u, const Field2D& f, double dt, double dt_stable,
                 const GridSpec& grid, const BoundaryFaces& faces, ExitGates* record,
                 const ExitGates* replay) {
  const bool along_x = axis == Axis::X;
  const std::size_t cells = along_x ? grid.nx : grid.ny;
  const std::size_t lines = along_x ? grid.ny : grid.nx;
  const double h = along_x ? grid.dx : grid.dy;
  const double h_perp = along_x ? grid.dy : grid.dx;
  const double alpha = std::isfinite(dt_stable) ? h / dt_stable : 0.0;
  const double lambda = dt / h;
  const auto& low_exit = along_x ? faces.left : faces.bottom;
  const auto& high_exit = along_x ? faces.right : faces.top;

  if (replay && replay->size() != 2 * lines) throw DimensionError("exit gate replay has wrong size");
  if (record) record->assign(2 * lines, 0);

  const Field2D up = apply_boundary(u, grid);
  const Field2D fp = apply_boundary(f, grid);
  // padded (a, line) -> value, a in [0, cells + 1]
  auto at = [&](const Field2D& p, std::size_t a, std::size_t l) {
    return along_x ? p(a, l + 1) : p(l + 1, a);
  };

  std::vector<double> escaped(lines, 0.0);
#pragma omp parallel
  {
    std::vector<double> flux(cells + 1);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ls = 0; ls < static_cast<std::ptrdiff_t>(lines); ++ls) {
      const auto l = static_cast<std::size_t>(ls);
      // face k sits between padded cells k and k + 1
      for (std::size_t k = 0; k <= cells; ++k)
        flux[k] = 0.5 * (at(fp, k, l) + at(fp, k + 1, l)) -
                  0.5 * alpha * (at(up, k + 1, l) - at(up, k, l));

      auto gate = [&](std::size_t face, std::size_t slot, bool exit, bool outward_positive) {
        if (!exit) {
          flux[face] = 0.0;
          return;
        }
        bool open;
        if (replay)
          open = (*replay)[slot] != 0;
        else
          open = outward_positive ? flux[face] > 0.0 : flux[face] < 0.0;
        if (record) (*record)[slot] = open ? 1 : 0;
        if (!open) flux[face] = 0.0;
      };
      gate(0, l, low_exit[l], false);
      gate(cells, lines + l, high_exit[l], true);
      escaped[l] = dt * h_perp * (flux[cells] - flux[0]);

      for (std::size_t c = 0; c < cells; ++c) {
        double& v = along_x ? u(c, l) : u(l, c);
        v -= lambda * (flux[c + 1] - flux[c]);
      }
    }
  }
  double total = 0.0;
  for (double e : escaped) total += e;
  return total;
}

std::vector<std::pair<Axis, double>> sweep_sequence(SplitOrder order) {
  if (order == SplitOrder::Strang) return {{Axis::X, 0.5}, {Axis::Y, 1.0}, {Axis::X, 0.5}};
  return {{Axis::X, 1.0}, {Axis::Y, 1.0}};
}

namespace {

Field2D cell_flux(const Field2D& rho, const Field2D& component, const SpeedLaw& law,
                  ModelFamily family) {
  Field2D f(rho.nx(), rho.ny());
  auto r = rho.values();
  auto c = component.values();
  auto out = f.values();
  if (family == ModelFamily::Deviation)
    for (std::size_t k = 0; k < r.size(); ++k) out[k] = law.flux(r[k]) * c[k];
  else
    for (std::size_t k = 0; k < r.size(); ++k) out[k] = r[k] * c[k];
  return f;
}

void check_finite(const PopulationField& state) {
  const GridSpec& g = state.grid();
  for (std::size_t p = 0; p < state.n(); ++p)
    for (std::size_t j = 0; j < g.ny; ++j)
      for (std::size_t i = 0; i < g.nx; ++i)
        if (!std::isfinite(state[p](i, j))) {
          std::ostringstream msg;
          msg << "non-finite density in population " << p + 1 << " at cell (" << i << ", " << j
              << ")";
          throw NumericError(msg.str());
        }
}

}  // namespace

StepOutcome split_step(const PopulationField& state, const ModelSpec& model, const Transport& tr,
                       const StepTiming& timing) {
  if (!(state.grid() == model.grid)) throw DimensionError("state grid differs from model grid");
  if (state.n() != model.n() || tr.field.size() != model.n())
    throw DimensionError("population count mismatch in split step");
  if (!(timing.dt >= 0.0)) throw ConfigError("time step must be non-negative");

  const BoundaryFaces faces = boundary_faces(model.grid);
  StepOutcome out{state, std::vector<double>(model.n(), 0.0)};
  for (const auto& [axis, fraction] : sweep_sequence(model.order)) {
    const double dt = fraction * timing.dt;
    for (std::size_t p = 0; p < model.n(); ++p) {
      const Field2D& comp = axis == Axis::X ? tr.field[p].x : tr.field[p].y;
      const Field2D f = cell_flux(out.state[p], comp, model.populations[p].law, model.family);
      out.escaped[p] += lxf_sweep(axis, out.state[p], f, dt, timing.dt_stable, model.grid, faces);
    }
  }
  check_finite(out.state);
  return out;
}

StepOutcome split_step(const PopulationField& state, const ModelSpec& model, double dt) {
  const Transport tr = transport(state, model);
  const double stable = stable_dt(tr, model.grid, model.cfl);
  return split_step(state, model, tr, StepTiming{dt, std::max(stable, dt)});
}

namespace {

void check_invariant(const ModelSpec& model, const StepReport& rep) {
  for (std::size_t p = 0; p < model.n(); ++p) {
    const bool low = rep.min[p] < -model.invariance_tol;
    const bool high = model.family == ModelFamily::Deviation &&
                      rep.max[p] > model.max_density + model.invariance_tol;
    if (low || high) {
      std::ostringstream msg;
      msg << "population " << p + 1 << " left the invariant range at t = " << rep.t
          << " (min " << rep.min[p] << ", max " << rep.max[p] << ")";
      throw InvariantViolation(msg.str());
    }
  }
}

void check_datum(const ModelSpec& model, const PopulationField& datum) {
  if (!(datum.grid() == model.grid)) throw DimensionError("datum grid differs from model grid");
  if (datum.n() != model.n()) throw DimensionError("datum population count differs from model");
  check_finite(datum);
  if (model.family != ModelFamily::Deviation) return;
  for (std::size_t p = 0; p < datum.n(); ++p)
    if (min_value(datum[p]) < -1e-12 || max_value(datum[p]) > model.max_density * (1.0 + 1e-12))
      throw ConfigError("datum of population " + std::to_string(p + 1) + " is outside [0, R]");
}

}  // namespace

RunResult run(const ModelSpec& model, const PopulationField& datum, const RunObserver& observer,
              const RunOptions& options) {
  model.validate();
  check_datum(model, datum);

  std::vector<double> stops = model.snapshot_times;
  stops.push_back(model.t_max);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  auto is_snapshot = [&](double t) {
    return std::find(model.snapshot_times.begin(), model.snapshot_times.end(), t) !=
           model.snapshot_times.end();
  };

  RunResult res{datum, {}, {}, std::vector<double>(model.n(), 0.0)};
  double t = 0.0;
  std::size_t next = 0;
  while (next < stops.size() && stops[next] <= 0.0) {
    if (observer.on_snapshot && is_snapshot(stops[next])) observer.on_snapshot(0.0, res.final_state);
    ++next;
  }

  std::size_t step = 0;
  while (next < stops.size()) {
    const Transport tr = transport(res.final_state, model);
    StepTiming timing;
    if (options.schedule) {
      if (step >= options.schedule->size()) break;
      timing = (*options.schedule)[step];
    } else {
      timing.dt_stable = stable_dt(tr, model.grid, model.cfl);
      timing.dt = std::min(timing.dt_stable, stops[next] - t);
    }
    StepOutcome out = split_step(res.final_state, model, tr, timing);
    res.final_state = std::move(out.state);
    res.schedule.push_back(timing);
    ++step;

    t += timing.dt;
    bool landed = false;
    if (std::abs(t - stops[next]) <= 1e-12 * std::max(1.0, stops[next])) {
      t = stops[next];
      landed = true;
    }

    StepReport rep;
    rep.t = t;
    rep.dt = timing.dt;
    rep.outflow = out.escaped;
    for (std::size_t p = 0; p < model.n(); ++p) {
      res.escaped[p] += out.escaped[p];
      rep.mass.push_back(mass(res.final_state[p], model.grid));
      rep.min.push_back(min_value(res.final_state[p]));
      rep.max.push_back(max_value(res.final_state[p]));
    }
    if (model.strict) check_invariant(model, rep);
    if (observer.on_step) observer.on_step(rep, res.final_state, tr);
    res.steps.push_back(std::move(rep));

    if (landed) {
      if (observer.on_snapshot && is_snapshot(stops[next])) observer.on_snapshot(t, res.final_state);
      ++next;
    } else if (t > stops[next]) {
      throw NumericError("time stepping overshot an output time");
    }
  }
  return res;
}

}  // namespace crowd
