#include "experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "crowd/errors.hpp"
#include "crowd/kernel.hpp"
#include "crowd/nonlocal.hpp"

namespace crowdsim {

crowd::Field2D shifted(const crowd::Field2D& f, long di, long dj) {
  crowd::Field2D out(f.nx(), f.ny());
  const long nx = static_cast<long>(f.nx()), ny = static_cast<long>(f.ny());
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i) {
      const long si = i - di, sj = j - dj;
      if (si >= 0 && si < nx && sj >= 0 && sj < ny)
        out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
            f(static_cast<std::size_t>(si), static_cast<std::size_t>(sj));
    }
  return out;
}

std::vector<double> estimate_constants(const crowd::ModelSpec& model,
                                       const crowd::PopulationField& datum) {
  const crowd::GridSpec& g = model.grid;
  const long sx = std::max(1L, std::lround(0.5 / g.dx));
  const long sy = std::max(1L, std::lround(0.5 / g.dy));
  auto map = [&](auto fn) {
    std::vector<crowd::Field2D> pops;
    for (const auto& f : datum.populations()) pops.push_back(fn(f));
    return crowd::PopulationField(g, std::move(pops));
  };
  std::vector<crowd::PopulationField> samples;
  samples.push_back(datum);
  samples.push_back(crowd::combine(0.5, datum, 0.0, datum));
  samples.push_back(map([&](const crowd::Field2D& f) { return shifted(f, sx, 0); }));
  samples.push_back(map([&](const crowd::Field2D& f) { return shifted(f, 0, sy); }));
  samples.push_back(crowd::combine(0.75, datum, 0.25, samples[2]));

  std::vector<double> out;
  for (const auto& pop : model.populations) {
    if (pop.deviation.is_zero()) {
      out.push_back(0.0);
      continue;
    }
    out.push_back(crowd::estimate_CI(pop.deviation, samples).value);
  }
  return out;
}

GateauxScenario gateaux_scenario(bool constant_speed) {
  GateauxScenario s;
  const crowd::Rect box{-2.0, 2.0, -2.0, 2.0};
  const crowd::GridSpec grid = crowd::make_grid(box, 4.0 / 64, 4.0 / 64, box);
  crowd::KernelSpec ks;
  ks.normalize = true;
  const auto kernel = std::make_shared<const crowd::SampledKernel>(crowd::sample_kernel(ks, grid));
  const double norm = std::hypot(1.0, 0.5);
  const crowd::DirectionField dir = crowd::corridor_direction(grid, 1.0 / norm, 0.5 / norm, 0.0, 1.0);
  const crowd::SpeedLaw law = constant_speed ? crowd::SpeedLaw::constant(1.0, 2.0)
                                             : crowd::SpeedLaw::linear(1.0, 2.0);

  s.model.family = crowd::ModelFamily::Differentiable;
  s.model.grid = grid;
  s.model.max_density = 2.0;
  s.model.t_max = s.t;
  s.model.populations.push_back({law, dir, kernel, {}});

  auto bump = [](double x, double y, double cx, double cy, double w) {
    return std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / w);
  };
  s.rho0 = crowd::PopulationField(
      grid, {crowd::sample_field(grid, [&](double x, double y) {
        return 0.2 + 0.5 * bump(x, y, -0.3, 0.0, 0.3);
      })});
  s.sigma0 = crowd::PopulationField(
      grid, {crowd::sample_field(grid, [&](double x, double y) {
        return bump(x, y, 0.2, 0.1, 0.2) - 0.5 * bump(x, y, 0.0, -0.4, 0.15);
      })});
  return s;
}

crowd::PopulationField perturbed_datum(const crowd::PopulationField& datum, double size) {
  crowd::PopulationField out = datum;
  if (size == 0.0) return out;
  const double m = crowd::l1_norm(datum[0], datum.grid());
  if (!(m > size)) throw crowd::ConfigError("perturbation exceeds the mass of population 1");
  out[0] *= 1.0 - size / m;
  return out;
}

namespace {

struct Sampled {
  crowd::PopulationField state;
  crowd::BoundInputs inputs;
};

std::map<double, Sampled> sample_run(const crowd::ModelSpec& model,
                                     const crowd::PopulationField& datum,
                                     const std::vector<double>& c_i) {
  crowd::BoundMonitor monitor(model, datum, c_i);
  std::map<double, Sampled> out;
  crowd::RunObserver obs;
  obs.on_step = [&](const crowd::StepReport&, const crowd::PopulationField& s,
                    const crowd::Transport& tr) { monitor.observe(tr, s); };
  obs.on_snapshot = [&](double t, const crowd::PopulationField& s) {
    out.emplace(t, Sampled{s, monitor.system()});
  };
  crowd::run(model, datum, obs);
  return out;
}

crowd::ModelSpec with_outputs(crowd::ModelSpec model) {
  if (model.snapshot_times.empty()) model.snapshot_times = {0.0, model.t_max};
  return model;
}

}  // namespace

std::vector<StabilityRow> stability_experiment(const crowd::ModelSpec& base,
                                               const crowd::PopulationField& datum, double size) {
  if (base.family != crowd::ModelFamily::Deviation)
    throw crowd::UnsupportedModelError("the stability experiment uses the deviation family bound");
  const crowd::ModelSpec model = with_outputs(base);
  const crowd::PopulationField other = perturbed_datum(datum, size);
  const std::vector<double> c_i = estimate_constants(model, datum);
  const auto a = sample_run(model, datum, c_i);
  const auto b = sample_run(model, other, c_i);
  const crowd::StabilityDeltas deltas = crowd::stability_deltas(model, datum, model, other);

  std::vector<StabilityRow> rows;
  for (const auto& [t, sa] : a) {
    const auto it = b.find(t);
    if (it == b.end()) continue;
    const Sampled& sb = it->second;
    crowd::BoundInputs in1 = sa.inputs, in2 = sb.inputs;
    const crowd::BoundRow r = crowd::make_row(
        t, "l1_distance", crowd::l1_distance(sa.state, sb.state),
        crowd::stability_bound_deviation(t, in1, in2, deltas),
        crowd::stability_bound_deviation_log10(t, in1, in2, deltas));
    rows.push_back({t, r.measured, r.bound, r.bound_log10, r.dominated});
  }
  return rows;
}

crowd::BoundReport bounds_experiment(const crowd::ModelSpec& base,
                                     const crowd::PopulationField& datum) {
  const crowd::ModelSpec model = with_outputs(base);
  const std::vector<double> c_i = model.family == crowd::ModelFamily::Deviation
                                      ? estimate_constants(model, datum)
                                      : std::vector<double>(model.n(), 0.0);
  crowd::BoundMonitor monitor(model, datum, c_i);
  crowd::BoundReport report;
  crowd::RunObserver obs;
  obs.on_step = [&](const crowd::StepReport&, const crowd::PopulationField& s,
                    const crowd::Transport& tr) { monitor.observe(tr, s); };
  obs.on_snapshot = [&](double t, const crowd::PopulationField& s) {
    for (auto& r : monitor.evaluate(t, s)) report.rows.push_back(std::move(r));
  };
  crowd::run(model, datum, obs);
  return report;
}

}  // namespace crowdsim
