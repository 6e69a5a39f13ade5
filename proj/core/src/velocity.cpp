#include "crowd/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crowd/errors.hpp"
#include "crowd/nonlocal.hpp"

namespace crowd {

SpeedLaw::SpeedLaw(Fn v, Fn dv, Fn d2v, double max_density)
    : v_(std::move(v)), dv_(std::move(dv)), d2v_(std::move(d2v)), R_(max_density) {
  if (!(R_ > 0.0)) throw ConfigError("maximal density R must be positive");
  for (std::size_t k = 0; k < kScanPoints; ++k) {
    const double rho = R_ * static_cast<double>(k) / static_cast<double>(kScanPoints - 1);
    const double v = v_(rho), dv = dv_(rho), d2v = d2v_(rho);
    if (!std::isfinite(v) || !std::isfinite(dv) || !std::isfinite(d2v))
      throw ConfigError("speed law is not finite on [0, R]");
    sup_v_ = std::max(sup_v_, std::abs(v));
    sup_dv_ = std::max(sup_dv_, std::abs(dv));
    sup_d2v_ = std::max(sup_d2v_, std::abs(d2v));
    sup_q_ = std::max(sup_q_, std::abs(rho * v));
    sup_dq_ = std::max(sup_dq_, std::abs(v + rho * dv));
    sup_d2q_ = std::max(sup_d2q_, std::abs(2.0 * dv + rho * d2v));
  }
}

SpeedLaw SpeedLaw::linear(double vmax, double max_density) {
  const double R = max_density;
  return SpeedLaw([vmax, R](double r) { return vmax * (1.0 - r / R); },
                  [vmax, R](double) { return -vmax / R; }, [](double) { return 0.0; }, R);
}

SpeedLaw SpeedLaw::constant(double c, double max_density) {
  return SpeedLaw([c](double) { return c; }, [](double) { return 0.0; },
                  [](double) { return 0.0; }, max_density);
}

VecField DirectionField::total() const {
  return {geodesic.x + discomfort.x, geodesic.y + discomfort.y};
}

namespace {

bool covered_by_exits(const GridSpec& grid, Side side) {
  const Rect& r = grid.room;
  const double scale = std::max(r.width(), r.height());
  const double tol = 1e-9 * scale;
  const bool vertical = side == Side::Left || side == Side::Right;
  const double line = side == Side::Left    ? r.x0
                      : side == Side::Right ? r.x1
                      : side == Side::Bottom ? r.y0
                                             : r.y1;
  const double lo = vertical ? r.y0 : r.x0;
  const double hi = vertical ? r.y1 : r.x1;
  for (const auto& e : grid.exits) {
    if (vertical && std::abs(e.x0 - e.x1) <= tol && std::abs(e.x0 - line) <= tol &&
        std::min(e.y0, e.y1) <= lo + tol && std::max(e.y0, e.y1) >= hi - tol)
      return true;
    if (!vertical && std::abs(e.y0 - e.y1) <= tol && std::abs(e.y0 - line) <= tol &&
        std::min(e.x0, e.x1) <= lo + tol && std::max(e.x0, e.x1) >= hi - tol)
      return true;
  }
  return false;
}

}  // namespace

VecField discomfort(const GridSpec& grid, double delta_max, double delta_r) {
  if (!(delta_r > 0.0)) throw ConfigError("discomfort depth delta_r must be positive");
  const Rect& r = grid.room;
  const bool wall_left = !covered_by_exits(grid, Side::Left);
  const bool wall_right = !covered_by_exits(grid, Side::Right);
  const bool wall_bottom = !covered_by_exits(grid, Side::Bottom);
  const bool wall_top = !covered_by_exits(grid, Side::Top);
  constexpr double inf = std::numeric_limits<double>::infinity();

  VecField out(grid.nx, grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j) {
    const double y = grid.y_center(j);
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double x = grid.x_center(i);
      double ux = 0.0, uy = 0.0;
      if (!r.contains(x, y)) {
        if (x < r.x0 && wall_left) ux = 1.0;
        if (x > r.x1 && wall_right) ux = -1.0;
        if (y < r.y0 && wall_bottom) uy = 1.0;
        if (y > r.y1 && wall_top) uy = -1.0;
        const double n = std::hypot(ux, uy);
        if (n > 0.0) {
          out.x(i, j) = delta_max * ux / n;
          out.y(i, j) = delta_max * uy / n;
        }
        continue;
      }
      // nearest wall: distance, inward normal, cell size across the wall
      struct Candidate {
        double dist, nx, ny, h;
      };
      const Candidate cands[] = {
          {wall_left ? x - r.x0 : inf, 1.0, 0.0, grid.dx},
          {wall_right ? r.x1 - x : inf, -1.0, 0.0, grid.dx},
          {wall_bottom ? y - r.y0 : inf, 0.0, 1.0, grid.dy},
          {wall_top ? r.y1 - y : inf, 0.0, -1.0, grid.dy},
      };
      const Candidate* best = &cands[0];
      for (const auto& c : cands)
        if (c.dist < best->dist) best = &c;
      if (!std::isfinite(best->dist)) continue;
      double mag = 0.0;
      if (best->dist < best->h)
        mag = delta_max;
      else
        mag = delta_max * std::max(0.0, 1.0 - best->dist / delta_r);
      out.x(i, j) = mag * best->nx;
      out.y(i, j) = mag * best->ny;
    }
  }
  return out;
}

VecField room_geodesic(const GridSpec& grid, double gx, double gy) {
  VecField out(grid.nx, grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i)
      if (grid.room.contains(grid.x_center(i), grid.y_center(j))) {
        out.x(i, j) = gx;
        out.y(i, j) = gy;
      }
  return out;
}

DirectionField corridor_direction(const GridSpec& grid, double gx, double gy, double delta_max,
                                  double delta_r) {
  DirectionField d;
  d.geodesic = room_geodesic(grid, gx, gy);
  d.discomfort = discomfort(grid, delta_max, delta_r);
  d.delta_max = delta_max;
  d.delta_r = delta_r;
  return d;
}

Field2D convolved_density(const PopulationField& state,
                          std::span<const std::shared_ptr<const SampledKernel>> kernels) {
  if (kernels.size() != state.n()) throw DimensionError("one kernel per population is required");
  Field2D total(state.grid().nx, state.grid().ny);
  for (std::size_t p = 0; p < state.n(); ++p) total += convolve(state[p], *kernels[p]);
  return total;
}

VelocityField assemble_differentiable(const PopulationField& state, std::span<const SpeedLaw> laws,
                                      std::span<const DirectionField> dirs,
                                      std::span<const std::shared_ptr<const SampledKernel>> kernels) {
  const std::size_t n = state.n();
  if (laws.size() != n || dirs.size() != n)
    throw DimensionError("speed laws and directions must match the population count");
  const Field2D conv = convolved_density(state, kernels);

  VelocityField out;
  for (double c : conv.values())
    if (c < -1e-10) ++out.undershoot_cells;

  for (std::size_t p = 0; p < n; ++p) {
    const VecField dir = dirs[p].total();
    if (!state.grid().matches(dir.x)) throw DimensionError("direction field does not match grid");
    VecField v(state.grid().nx, state.grid().ny);
    auto cv = conv.values();
    auto vx = v.x.values(), vy = v.y.values();
    auto dx = dir.x.values(), dy = dir.y.values();
    for (std::size_t k = 0; k < cv.size(); ++k) {
      const double s = laws[p](std::max(0.0, cv[k]));
      vx[k] = s * dx[k];
      vy[k] = s * dy[k];
    }
    out.v.push_back(std::move(v));
  }
  return out;
}

std::vector<VecField> deviation_directions(const PopulationField& state,
                                           std::span<const DirectionField> dirs,
                                           std::span<const NonlocalOp> ops) {
  const std::size_t n = state.n();
  if (dirs.size() != n || ops.size() != n)
    throw DimensionError("directions and nonlocal operators must match the population count");
  std::vector<VecField> w;
  w.reserve(n);
  for (std::size_t p = 0; p < n; ++p) {
    VecField dir = dirs[p].total();
    const VecField dev = ops[p].evaluate(state);
    dir.x += dev.x;
    dir.y += dev.y;
    w.push_back(std::move(dir));
  }
  return w;
}

VelocityField assemble_deviation(const PopulationField& state, std::span<const SpeedLaw> laws,
                                 std::span<const DirectionField> dirs,
                                 std::span<const NonlocalOp> ops) {
  if (laws.size() != state.n()) throw DimensionError("one speed law per population is required");
  VelocityField out;
  out.v = deviation_directions(state, dirs, ops);
  for (std::size_t p = 0; p < state.n(); ++p) {
    auto rho = state[p].values();
    auto vx = out.v[p].x.values(), vy = out.v[p].y.values();
    for (std::size_t k = 0; k < rho.size(); ++k) {
      const double s = laws[p](rho[k]);
      vx[k] *= s;
      vy[k] *= s;
    }
  }
  return out;
}

}  // namespace crowd
