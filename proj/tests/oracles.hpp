#pragma once

// Slow reference implementations the library is checked against.

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>

#include "crowd/grid.hpp"
#include "crowd/kernel.hpp"

namespace oracle {

/// Direct double sum of rho(h, k) * kern(x_i - x_h, y_j - y_k) dx dy over all cells.
inline crowd::Field2D convolve(const crowd::Field2D& rho, const crowd::GridSpec& g,
                               const std::function<double(double, double)>& kern) {
  crowd::Field2D out(g.nx, g.ny);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < g.ny; ++k)
        for (std::size_t h = 0; h < g.nx; ++h)
          s += rho(h, k) * kern(g.x_center(i) - g.x_center(h), g.y_center(j) - g.y_center(k));
      out(i, j) = s * g.dx * g.dy;
    }
  return out;
}

/// Brute-force convolution with the sampled kernel's continuum profile.
inline crowd::Field2D convolve(const crowd::Field2D& rho, const crowd::GridSpec& g,
                               const crowd::SampledKernel& k) {
  const auto& sp = k.spec;
  return convolve(rho, g, [&](double x, double y) {
    return k.scale * sp.x_factor.value(x) * sp.y_factor.value(y);
  });
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// W_d by the recurrence W_0 = pi/2, W_1 = 1, W_d = (d - 1)/d W_{d-2}.
inline double wallis(int d) {
  if (d == 0) return M_PI / 2.0;
  if (d == 1) return 1.0;
  return (d - 1.0) / d * wallis(d - 2);
}

/// TV as a plain double loop over neighbouring pairs.
inline double total_variation(const crowd::Field2D& f, const crowd::GridSpec& g) {
  double tv = 0.0;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      if (i + 1 < g.nx) tv += std::abs(f(i + 1, j) - f(i, j)) * g.dy;
      if (j + 1 < g.ny) tv += std::abs(f(i, j + 1) - f(i, j)) * g.dx;
    }
  return tv;
}

inline crowd::Field2D random_field(std::size_t nx, std::size_t ny, std::mt19937_64& rng,
                                   double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  crowd::Field2D f(nx, ny);
  for (double& v : f.values()) v = u(rng);
  return f;
}

}  // namespace oracle
