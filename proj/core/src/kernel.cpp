#include "crowd/kernel.hpp"

#include <cmath>
#include <string>

#include "crowd/errors.hpp"

namespace crowd {

AxisProfile AxisProfile::cubic_bump(double half_width) {
  const double h = half_width;
  AxisProfile p;
  p.half_width = h;
  p.value = [h](double x) {
    const double s = 1.0 - (x / h) * (x / h);
    return s > 0.0 ? s * s * s : 0.0;
  };
  p.first = [h](double x) {
    const double s = 1.0 - (x / h) * (x / h);
    return s > 0.0 ? -6.0 * x / (h * h) * s * s : 0.0;
  };
  p.second = [h](double x) {
    const double u = x / h;
    const double s = 1.0 - u * u;
    return s > 0.0 ? (-6.0 * s * s + 24.0 * u * u * s) / (h * h) : 0.0;
  };
  return p;
}

BandedToeplitz::BandedToeplitz(std::size_t n, std::vector<double> taps)
    : n_(n), half_(taps.size() / 2), taps_(std::move(taps)) {
  if (taps_.size() % 2 == 0) throw DimensionError("banded Toeplitz needs an odd number of taps");
}

double BandedToeplitz::operator()(std::size_t out, std::size_t in) const {
  const auto off = static_cast<std::ptrdiff_t>(out) - static_cast<std::ptrdiff_t>(in);
  const auto h = static_cast<std::ptrdiff_t>(half_);
  if (off < -h || off > h) return 0.0;
  return taps_[static_cast<std::size_t>(off + h)];
}

double BandedToeplitz::sum() const {
  double s = 0.0;
  for (double t : taps_) s += t;
  return s;
}

namespace {

std::vector<double> sample_taps(const std::function<double(double)>& f, std::size_t half, double h,
                                double weight) {
  std::vector<double> taps(2 * half + 1);
  for (std::size_t m = 0; m < taps.size(); ++m) {
    const double off = (static_cast<double>(m) - static_cast<double>(half)) * h;
    taps[m] = f(off) * weight;
  }
  return taps;
}

std::size_t half_band(const AxisProfile& p, double h, std::size_t n, const char* axis) {
  if (!(p.half_width >= h))
    throw ConfigError(std::string("kernel support is smaller than one cell along ") + axis);
  if (2.0 * p.half_width > static_cast<double>(n) * h)
    throw ConfigError(std::string("kernel support exceeds the grid extent along ") + axis);
  return static_cast<std::size_t>(std::ceil(p.half_width / h - 1e-12));
}

void require_grid(const Field2D& f, const SampledKernel& k) {
  if (f.nx() != k.nx || f.ny() != k.ny)
    throw DimensionError("field " + std::to_string(f.nx()) + "x" + std::to_string(f.ny()) +
                         " does not match kernel grid " + std::to_string(k.nx) + "x" +
                         std::to_string(k.ny));
}

// out(i, j) = sum_{h,k} ax(i, h) f(h, k) by(j, k), x pass first, zero extension.
Field2D separable_apply(const Field2D& f, const BandedToeplitz& ax, const BandedToeplitz& by) {
  const std::size_t nx = f.nx(), ny = f.ny();
  const auto hx = static_cast<std::ptrdiff_t>(ax.half_bandwidth());
  const auto hy = static_cast<std::ptrdiff_t>(by.half_bandwidth());
  const auto& tx = ax.taps();
  const auto& ty = by.taps();

  Field2D tmp(nx, ny);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(ny); ++k) {
    auto src = f.row(static_cast<std::size_t>(k));
    auto dst = tmp.row(static_cast<std::size_t>(k));
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(nx); ++i) {
      // input index h = i - m
      const std::ptrdiff_t m_lo = std::max(-hx, i - static_cast<std::ptrdiff_t>(nx) + 1);
      const std::ptrdiff_t m_hi = std::min(hx, i);
      double acc = 0.0;
      for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m)
        acc += tx[static_cast<std::size_t>(m + hx)] * src[static_cast<std::size_t>(i - m)];
      dst[static_cast<std::size_t>(i)] = acc;
    }
  }

  Field2D out(nx, ny);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(ny); ++j) {
    auto dst = out.row(static_cast<std::size_t>(j));
    const std::ptrdiff_t m_lo = std::max(-hy, j - static_cast<std::ptrdiff_t>(ny) + 1);
    const std::ptrdiff_t m_hi = std::min(hy, j);
    for (std::ptrdiff_t m = m_lo; m <= m_hi; ++m) {
      const double w = ty[static_cast<std::size_t>(m + hy)];
      auto src = tmp.row(static_cast<std::size_t>(j - m));
      for (std::size_t i = 0; i < nx; ++i) dst[i] += w * src[i];
    }
  }
  return out;
}

}  // namespace

SampledKernel sample_kernel(const KernelSpec& spec, const GridSpec& grid) {
  const std::size_t hx = half_band(spec.x_factor, grid.dx, grid.nx, "x");
  const std::size_t hy = half_band(spec.y_factor, grid.dy, grid.ny, "y");

  auto ta = sample_taps(spec.x_factor.value, hx, grid.dx, grid.dx);
  auto tb = sample_taps(spec.y_factor.value, hy, grid.dy, grid.dy);
  auto tda = sample_taps(spec.x_factor.first, hx, grid.dx, grid.dx);
  auto tdb = sample_taps(spec.y_factor.first, hy, grid.dy, grid.dy);

  double sa = 0.0, sb = 0.0;
  for (double t : ta) sa += t;
  for (double t : tb) sb += t;
  if (!(sa > 0.0) || !(sb > 0.0)) throw ConfigError("kernel has zero discrete mass on this grid");

  SampledKernel k;
  k.nx = grid.nx;
  k.ny = grid.ny;
  k.spec = spec;
  if (spec.normalize) {
    for (double& t : ta) t /= sa;
    for (double& t : tda) t /= sa;
    for (double& t : tb) t /= sb;
    for (double& t : tdb) t /= sb;
    k.scale = 1.0 / (sa * sb);
  }
  k.a = BandedToeplitz(grid.nx, std::move(ta));
  k.b = BandedToeplitz(grid.ny, std::move(tb));
  k.da = BandedToeplitz(grid.nx, std::move(tda));
  k.db = BandedToeplitz(grid.ny, std::move(tdb));
  k.mass = k.a.sum() * k.b.sum();
  return k;
}

Field2D convolve(const Field2D& field, const SampledKernel& k) {
  require_grid(field, k);
  return separable_apply(field, k.a, k.b);
}

VecField convolve_gradient(const Field2D& field, const SampledKernel& k) {
  require_grid(field, k);
  return {separable_apply(field, k.da, k.b), separable_apply(field, k.a, k.db)};
}

VecField convolve_components(const VecField& field, const SampledKernel& k) {
  return {convolve(field.x, k), convolve(field.y, k)};
}

}  // namespace crowd
