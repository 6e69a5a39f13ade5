#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "crowd/grid.hpp"
#include "crowd/kernel.hpp"

namespace crowd {

class NonlocalOp;

/// Scalar speed law v(rho) on [0, R] together with the flux q(rho) = rho v(rho)
/// and sup-norm metadata obtained from a dense scan of [0, R].
class SpeedLaw {
 public:
  using Fn = std::function<double(double)>;

  SpeedLaw(Fn v, Fn dv, Fn d2v, double max_density);

  /// v(rho) = vmax (1 - rho / R).
  static SpeedLaw linear(double vmax, double max_density);
  /// v(rho) = c. Does not vanish at R; only valid for the differentiable family.
  static SpeedLaw constant(double c, double max_density);

  double operator()(double rho) const { return v_(rho); }
  double derivative(double rho) const { return dv_(rho); }
  double second_derivative(double rho) const { return d2v_(rho); }
  double flux(double rho) const { return rho * v_(rho); }
  double flux_derivative(double rho) const { return v_(rho) + rho * dv_(rho); }

  double max_density() const { return R_; }
  double sup_v() const { return sup_v_; }
  double sup_dv() const { return sup_dv_; }
  double sup_d2v() const { return sup_d2v_; }
  double sup_q() const { return sup_q_; }
  double sup_dq() const { return sup_dq_; }
  /// sup |q''| on [0, R], q'' = 2 v' + rho v''.
  double sup_d2q() const { return sup_d2q_; }

  static constexpr std::size_t kScanPoints = 10001;

 private:
  Fn v_, dv_, d2v_;
  double R_;
  double sup_v_ = 0.0, sup_dv_ = 0.0, sup_d2v_ = 0.0;
  double sup_q_ = 0.0, sup_dq_ = 0.0, sup_d2q_ = 0.0;
};

/// Preferred direction g + delta: a geodesic part and the wall discomfort.
struct DirectionField {
  VecField geodesic;
  VecField discomfort;
  double delta_max = 0.0;
  double delta_r = 0.0;

  VecField total() const;
};

/// Wall discomfort of height delta_max decreasing linearly to zero at distance
/// delta_r from the nearest wall, perpendicular to it and pointing into the
/// room. The wall-adjacent cell layer carries the full delta_max. Cells outside
/// the room (between a wall and the domain boundary) get delta_max pointing
/// back towards the room. Room sides covered by exits are not walls.
VecField discomfort(const GridSpec& grid, double delta_max, double delta_r);

/// Constant unit direction (gx, gy) at cell centres inside the room, zero elsewhere.
VecField room_geodesic(const GridSpec& grid, double gx, double gy);

/// geodesic (gx, gy) inside the room plus discomfort(grid, delta_max, delta_r).
DirectionField corridor_direction(const GridSpec& grid, double gx, double gy, double delta_max,
                                  double delta_r);

/// Velocity V^i per population, evaluated cellwise.
struct VelocityField {
  std::vector<VecField> v;
  double t = 0.0;
  /// Cells where a convolved density fell below -1e-10 and was clamped to 0.
  std::size_t undershoot_cells = 0;
};

/// sum_j rho^j * eta^j with per-population kernels.
Field2D convolved_density(const PopulationField& state,
                          std::span<const std::shared_ptr<const SampledKernel>> kernels);

/// V^i = v^i(sum_j rho^j * eta^j) (g^i + delta^i).
VelocityField assemble_differentiable(const PopulationField& state, std::span<const SpeedLaw> laws,
                                      std::span<const DirectionField> dirs,
                                      std::span<const std::shared_ptr<const SampledKernel>> kernels);

/// W^i = (g^i + delta^i) + I^i(rho): the vector field that multiplies q^i(rho^i)
/// in the deviation family.
std::vector<VecField> deviation_directions(const PopulationField& state,
                                           std::span<const DirectionField> dirs,
                                           std::span<const NonlocalOp> ops);

/// V^i = v^i(rho^i) (g^i + delta^i + I^i(rho)).
VelocityField assemble_deviation(const PopulationField& state, std::span<const SpeedLaw> laws,
                                 std::span<const DirectionField> dirs,
                                 std::span<const NonlocalOp> ops);

}  // namespace crowd
