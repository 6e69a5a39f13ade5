#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "crowd/errors.hpp"
#include "crowd/nonlocal.hpp"
#include "crowd/velocity.hpp"
#include "oracles.hpp"

using namespace crowd;

TEST_CASE("linear speed law and its flux") {
  const SpeedLaw v = SpeedLaw::linear(4.0, 1.0);
  CHECK(v(0.0) == 4.0);
  CHECK(v(1.0) == 0.0);
  CHECK(v.derivative(0.3) == -4.0);
  CHECK(v.flux(0.5) == 1.0);
  CHECK(v.flux_derivative(0.25) == doctest::Approx(2.0));
  CHECK(v.sup_v() == doctest::Approx(4.0));
  CHECK(v.sup_dv() == doctest::Approx(4.0));
  CHECK(v.sup_d2v() == 0.0);
  CHECK(v.sup_q() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(v.sup_dq() == doctest::Approx(4.0));
  CHECK(v.sup_d2q() == doctest::Approx(8.0));
}

TEST_CASE("speed law validation") {
  CHECK_THROWS_AS(SpeedLaw::linear(1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(SpeedLaw([](double r) { return 1.0 / (r - 0.5); }, [](double) { return 0.0; },
                           [](double) { return 0.0; }, 1.0),
                  ConfigError);
  const SpeedLaw c = SpeedLaw::constant(1.5, 2.0);
  CHECK(c(2.0) == 1.5);
  CHECK(c.sup_dv() == 0.0);
}

TEST_CASE("discomfort points into the room") {
  const Rect dom{0.0, 4.0, -2.0, 2.0};
  const Rect room{0.0, 4.0, -1.5, 1.5};
  const GridSpec g = make_grid(dom, 0.1, 0.1, room, {{4.0, -1.5, 4.0, 1.5}});
  const VecField d = discomfort(g, 0.8, 0.75);
  // bottom wall layer: full height, pointing up
  const std::size_t i = 20;
  const std::size_t jb = 5;  // y in (-1.5, -1.4)
  CHECK(d.y(i, jb) == doctest::Approx(0.8));
  CHECK(d.x(i, jb) == 0.0);
  // outside the room below: pointing back up
  CHECK(d.y(i, 0) == doctest::Approx(0.8));
  // linear decay: y = -1.05 is 0.45 from the wall
  CHECK(d.y(i, 9) == doctest::Approx(0.8 * (1.0 - 0.45 / 0.75)));
  // beyond delta_r: nothing
  CHECK(d.y(i, 20) == 0.0);
  CHECK(d.x(i, 20) == 0.0);
  // the exit side is not a wall
  CHECK(d.x(g.nx - 1, 20) == 0.0);
  // the left side is a wall
  CHECK(d.x(0, 20) == doctest::Approx(0.8));
  CHECK_THROWS_AS(discomfort(g, 0.8, 0.0), ConfigError);
}

TEST_CASE("room geodesic vanishes outside the room") {
  const GridSpec g = make_grid({0.0, 1.0, 0.0, 1.0}, 0.1, 0.1, {0.0, 1.0, 0.2, 0.8});
  const VecField u = room_geodesic(g, 1.0, 0.0);
  CHECK(u.x(3, 0) == 0.0);
  CHECK(u.x(3, 5) == 1.0);
  const DirectionField dir = corridor_direction(g, 1.0, 0.0, 0.5, 0.3);
  const VecField t = dir.total();
  CHECK(t.x(3, 5) == doctest::Approx(u.x(3, 5) + dir.discomfort.x(3, 5)));
  CHECK(t.y(3, 2) == doctest::Approx(0.5));
}

TEST_CASE("differentiable velocity is v(sum rho * eta) times the direction") {
  const Rect box{-1.0, 1.0, -1.0, 1.0};
  const GridSpec g = make_grid(box, 0.1, 0.1, box);
  auto k = std::make_shared<const SampledKernel>(sample_kernel(KernelSpec{}, g));
  std::mt19937_64 rng(5);
  const PopulationField s(g, {oracle::random_field(g.nx, g.ny, rng, 0.0, 0.5),
                              oracle::random_field(g.nx, g.ny, rng, 0.0, 0.5)});
  const std::vector<SpeedLaw> laws{SpeedLaw::linear(2.0, 1.0), SpeedLaw::linear(1.0, 1.0)};
  const std::vector<DirectionField> dirs{corridor_direction(g, 1.0, 0.0, 0.0, 1.0),
                                         corridor_direction(g, 0.0, -1.0, 0.0, 1.0)};
  const std::vector<std::shared_ptr<const SampledKernel>> ks{k, k};
  const VelocityField v = assemble_differentiable(s, laws, dirs, ks);
  const Field2D c = convolve(s[0], *k) + convolve(s[1], *k);
  CHECK(convolved_density(s, ks) == c);
  CHECK(v.v[0].x(4, 7) == doctest::Approx(laws[0](c(4, 7))));
  CHECK(v.v[0].y(4, 7) == 0.0);
  CHECK(v.v[1].y(9, 2) == doctest::Approx(-laws[1](c(9, 2))));
  CHECK_THROWS_AS(assemble_differentiable(s, laws, dirs, std::span(ks).first(1)), DimensionError);
}

TEST_CASE("deviation velocity is v(rho) times direction plus deviation") {
  const Rect box{-1.0, 1.0, -1.0, 1.0};
  const GridSpec g = make_grid(box, 0.1, 0.1, box);
  auto k = std::make_shared<const SampledKernel>(sample_kernel(KernelSpec{}, g));
  std::mt19937_64 rng(9);
  const PopulationField s(g, {oracle::random_field(g.nx, g.ny, rng), oracle::random_field(g.nx, g.ny, rng)});
  const std::vector<SpeedLaw> laws{SpeedLaw::linear(1.0, 1.0), SpeedLaw::linear(1.0, 1.0)};
  const std::vector<DirectionField> dirs{corridor_direction(g, 1.0, 0.0, 0.0, 1.0),
                                         corridor_direction(g, -1.0, 0.0, 0.0, 1.0)};
  const std::vector<NonlocalOp> ops{NonlocalOp::gradient_avoidance(0.5, k, 1), NonlocalOp::zero()};
  const auto w = deviation_directions(s, dirs, ops);
  const VecField dev = ops[0].evaluate(s);
  CHECK(w[0].x(3, 3) == doctest::Approx(1.0 + dev.x(3, 3)));
  CHECK(w[1].x(3, 3) == -1.0);
  const VelocityField v = assemble_deviation(s, laws, dirs, ops);
  CHECK(v.v[0].y(12, 4) == doctest::Approx(laws[0](s[0](12, 4)) * dev.y(12, 4)));
}
