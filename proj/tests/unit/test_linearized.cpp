#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "crowd/errors.hpp"
#include "crowd/linearized.hpp"

using namespace crowd;

namespace {

ModelSpec smooth_model(bool constant_speed, double t_max = 0.1) {
  const Rect box{-1.0, 1.0, -1.0, 1.0};
  ModelSpec m;
  m.family = ModelFamily::Differentiable;
  m.grid = make_grid(box, 1.0 / 16, 1.0 / 16, box);
  KernelSpec ks;
  ks.normalize = true;
  auto k = std::make_shared<const SampledKernel>(sample_kernel(ks, m.grid));
  const SpeedLaw law = constant_speed ? SpeedLaw::constant(1.0, 2.0) : SpeedLaw::linear(1.0, 2.0);
  m.max_density = 2.0;
  m.populations.push_back({law, corridor_direction(m.grid, 0.8, 0.6, 0.0, 1.0), k, {}});
  m.t_max = t_max;
  return m;
}

PopulationField bump(const GridSpec& g, double base, double amp, double cx, double cy, double w) {
  return PopulationField(g, {sample_field(g, [&](double x, double y) {
    return base + amp * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / w);
  })});
}

}  // namespace

TEST_CASE("trajectory stores every step") {
  const ModelSpec m = smooth_model(false);
  const Trajectory tr = record_trajectory(m, bump(m.grid, 0.2, 0.5, 0.0, 0.0, 0.2));
  CHECK(tr.times.front() == 0.0);
  CHECK(tr.times.back() == doctest::Approx(m.t_max));
  CHECK(tr.states.size() == tr.times.size());
  CHECK(tr.schedule.size() + 1 == tr.times.size());
  CHECK(tr.index_of(m.t_max) == tr.times.size() - 1);
  CHECK_THROWS_AS(tr.index_of(0.5 * tr.times[1]), RangeError);
}

TEST_CASE("linearized solution is linear in sigma") {
  const ModelSpec m = smooth_model(false);
  const Trajectory tr = record_trajectory(m, bump(m.grid, 0.2, 0.5, 0.0, 0.0, 0.2));
  const PopulationField s1 = bump(m.grid, 0.0, 1.0, 0.2, 0.1, 0.1);
  const PopulationField s2 = bump(m.grid, 0.0, -0.5, -0.3, 0.0, 0.2);
  const PopulationField a = solve_linearized(tr, combine(2.0, s1, 3.0, s2), m.t_max);
  const PopulationField b = combine(2.0, solve_linearized(tr, s1, m.t_max), 3.0,
                                    solve_linearized(tr, s2, m.t_max));
  CHECK(l1_distance(a, b) <= 1e-12);
  CHECK_THROWS_AS(solve_linearized(tr, s1, 0.5 * tr.times[1]), RangeError);
}

TEST_CASE("constant speed: the equation is linear and the linearization exact") {
  const ModelSpec m = smooth_model(true);
  const PopulationField rho0 = bump(m.grid, 0.2, 0.5, 0.0, 0.0, 0.2);
  const PopulationField sigma0 = bump(m.grid, 0.0, 1.0, 0.2, 0.1, 0.1);
  for (double h : {0.1, 0.01}) CHECK(gateaux_residual(m, rho0, sigma0, m.t_max, h) <= 1e-12);
}

TEST_CASE("Gateaux residual is second order in h") {
  const ModelSpec m = smooth_model(false);
  const PopulationField rho0 = bump(m.grid, 0.2, 0.5, 0.0, 0.0, 0.2);
  const PopulationField sigma0 = bump(m.grid, 0.0, 1.0, 0.2, 0.1, 0.1);
  const std::vector<double> hs{0.2, 0.1, 0.05};
  const auto rows = gateaux_sweep(m, rho0, sigma0, m.t_max, hs);
  REQUIRE(rows.size() == 3);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].ratio < rows[k - 1].ratio);
    CHECK(rows[k].residual / rows[k - 1].residual == doctest::Approx(0.25).epsilon(0.1));
  }
  CHECK(rows[0].ratio == doctest::Approx(rows[0].residual / 0.2));
}

TEST_CASE("linearized velocity") {
  const ModelSpec m = smooth_model(false);
  const PopulationField rho = bump(m.grid, 0.2, 0.5, 0.0, 0.0, 0.2);
  const PopulationField sigma = bump(m.grid, 0.0, 1.0, 0.2, 0.1, 0.1);
  // derivative of rho v(rho * eta) dir along sigma, by central differences
  const auto lin = linearized_velocity(rho, sigma, m);
  const double e = 1e-6;
  const auto vel = [&](const PopulationField& r) {
    auto v = assemble_differentiable(r, m.laws(), m.directions(), m.kernels()).v[0];
    for (std::size_t c = 0; c < v.x.size(); ++c) {
      v.x.values()[c] *= r[0].values()[c];
      v.y.values()[c] *= r[0].values()[c];
    }
    return v;
  };
  const VecField up = vel(combine(1.0, rho, e, sigma)), dn = vel(combine(1.0, rho, -e, sigma));
  for (std::size_t c : {std::size_t{100}, std::size_t{517}, std::size_t{800}}) {
    CHECK(lin[0].x.values()[c] == doctest::Approx((up.x.values()[c] - dn.x.values()[c]) / (2 * e)).epsilon(1e-6));
    CHECK(lin[0].y.values()[c] == doctest::Approx((up.y.values()[c] - dn.y.values()[c]) / (2 * e)).epsilon(1e-6));
  }
  ModelSpec dev = m;
  dev.family = ModelFamily::Deviation;
  CHECK_THROWS_AS(linearized_velocity(rho, sigma, dev), UnsupportedModelError);
}

TEST_CASE("cost of the total mass has the mass of sigma as derivative") {
  const ModelSpec m = smooth_model(false);
  const PopulationField rho0 = bump(m.grid, 0.2, 0.5, 0.0, 0.0, 0.2);
  const PopulationField sigma0 = bump(m.grid, 0.0, 1.0, 0.2, 0.1, 0.1);
  const Trajectory tr = record_trajectory(m, rho0);
  CostSpec cost;
  cost.f = [](std::span<const double> r) { return r[0]; };
  cost.grad_f = [](std::span<const double>, std::span<double> g) { g[0] = 1.0; };
  cost.psi = Field2D(m.grid.nx, m.grid.ny, 1.0);
  cost.t = m.t_max;
  const CostValue v = cost_and_gradient(tr, cost, sigma0);
  CHECK(std::abs(v.J - mass(rho0[0], m.grid)) <= 1e-12);
  CHECK(std::abs(v.DJ - mass(sigma0[0], m.grid)) <= 1e-10);
  CHECK(cost_value(rho0, cost) == doctest::Approx(mass(rho0[0], m.grid)));
  cost.grad_f = [](std::span<const double>, std::span<double> g) { g[0] = NAN; };
  CHECK_THROWS_AS(cost_and_gradient(tr, cost, sigma0), NumericError);
}
