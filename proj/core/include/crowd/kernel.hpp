#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "crowd/grid.hpp"

namespace crowd {

/// One axis factor of a separable kernel eta(x, y) = a(x) b(y), with its
/// first and second derivatives. The factor vanishes outside [-half_width, half_width].
struct AxisProfile {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
  double half_width = 0.5;

  /// [1 - (x / h)^2]_+^3. With h = 0.5 this is the corridor-experiment factor
  /// [1 - (2x)^2]_+^3, whose integral is 16/35.
  static AxisProfile cubic_bump(double half_width = 0.5);
};

struct KernelSpec {
  AxisProfile x_factor = AxisProfile::cubic_bump();
  AxisProfile y_factor = AxisProfile::cubic_bump();
  /// Rescale both sampled factors to unit discrete mass.
  bool normalize = false;

  /// Unscaled continuum value eta(x, y).
  double operator()(double x, double y) const { return x_factor.value(x) * y_factor.value(y); }
};

/// Banded Toeplitz operator indexed by (output, input):
/// M(out, in) = taps[(out - in) + half] for |out - in| <= half, 0 otherwise.
class BandedToeplitz {
 public:
  BandedToeplitz() = default;
  BandedToeplitz(std::size_t n, std::vector<double> taps);

  std::size_t size() const { return n_; }
  std::size_t half_bandwidth() const { return half_; }
  const std::vector<double>& taps() const { return taps_; }
  double operator()(std::size_t out, std::size_t in) const;
  double sum() const;

 private:
  std::size_t n_ = 0;
  std::size_t half_ = 0;
  std::vector<double> taps_;
};

/// eta sampled on a grid as the separable factors
///   A_{ih} = a(x_i - x_h) dx,  B_{kj} = b(y_j - y_k) dy,
/// so that (rho * eta)_{ij} = sum_{h,k} A_{ih} rho_{hk} B_{kj}. Both are stored
/// as (output, input) operators: A_{ih} = a(i, h) and B_{kj} = b(j, k). The
/// derivative matrices use a' and b' in place of a and b.
struct SampledKernel {
  BandedToeplitz a;
  BandedToeplitz b;
  BandedToeplitz da;
  BandedToeplitz db;
  /// Discrete L1 norm of the sampled kernel (sum of A times sum of B).
  double mass = 0.0;
  /// Factor applied to the unscaled product a(x) b(y) (1 unless normalized).
  double scale = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  /// The continuum kernel these matrices were sampled from.
  KernelSpec spec;
};

/// Throws ConfigError when the support is narrower than one cell or wider than the grid.
SampledKernel sample_kernel(const KernelSpec& spec, const GridSpec& grid);

/// Discrete convolution with zero extension outside the grid. Throws DimensionError
/// when `field` was not sampled on the kernel's grid.
Field2D convolve(const Field2D& field, const SampledKernel& k);

/// Gradient of the convolution, computed as rho * grad(eta) with the derivative matrices.
VecField convolve_gradient(const Field2D& field, const SampledKernel& k);

/// Componentwise convolution (fx * eta, fy * eta) of a vector field.
VecField convolve_components(const VecField& field, const SampledKernel& k);

}  // namespace crowd
