#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace crowd {

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool empty() const { return !(x1 > x0) || !(y1 > y0); }
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool contains(const Rect& r, double tol = 0.0) const {
    return r.x0 >= x0 - tol && r.x1 <= x1 + tol && r.y0 >= y0 - tol && r.y1 <= y1 + tol;
  }
};

/// Axis-aligned segment from (x0, y0) to (x1, y1); either x0 == x1 or y0 == y1.
struct Segment {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

enum class Side { Left, Right, Bottom, Top };

/// Dense cell-centred scalar array. Storage is row-major in y: value (i, j)
/// with i the x index lives at j * nx + i.
class Field2D {
 public:
  Field2D() = default;
  Field2D(std::size_t nx, std::size_t ny, double value = 0.0)
      : nx_(nx), ny_(ny), data_(nx * ny, value) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[j * nx_ + i]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[j * nx_ + i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  std::span<double> row(std::size_t j) { return {data_.data() + j * nx_, nx_}; }
  std::span<const double> row(std::size_t j) const { return {data_.data() + j * nx_, nx_}; }

  bool same_shape(const Field2D& other) const { return nx_ == other.nx_ && ny_ == other.ny_; }

  Field2D& operator+=(const Field2D& other);
  Field2D& operator-=(const Field2D& other);
  Field2D& operator*=(double s);

  friend bool operator==(const Field2D&, const Field2D&) = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<double> data_;
};

Field2D operator+(Field2D a, const Field2D& b);
Field2D operator-(Field2D a, const Field2D& b);
Field2D operator*(double s, Field2D a);

/// Pair of cell-centred arrays holding the two components of a planar vector field.
struct VecField {
  Field2D x;
  Field2D y;

  VecField() = default;
  VecField(std::size_t nx, std::size_t ny) : x(nx, ny), y(nx, ny) {}
  VecField(Field2D fx, Field2D fy) : x(std::move(fx)), y(std::move(fy)) {}

  std::size_t nx() const { return x.nx(); }
  std::size_t ny() const { return x.ny(); }

  friend bool operator==(const VecField&, const VecField&) = default;
};

/// Uniform cell-centred grid on a rectangle, with the walkable room and the
/// exit segments through which mass may leave the numerical domain.
struct GridSpec {
  double x0 = 0.0;
  double y0 = 0.0;
  double dx = 1.0;
  double dy = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  Rect room;
  std::vector<Segment> exits;

  double x_center(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * dx; }
  double y_center(std::size_t j) const { return y0 + (static_cast<double>(j) + 0.5) * dy; }
  double cell_area() const { return dx * dy; }
  Rect bounds() const {
    return {x0, x0 + static_cast<double>(nx) * dx, y0, y0 + static_cast<double>(ny) * dy};
  }
  Field2D zeros() const { return Field2D(nx, ny); }
  bool matches(const Field2D& f) const { return f.nx() == nx && f.ny() == ny; }

  friend bool operator==(const GridSpec& a, const GridSpec& b);
};

/// Builds a grid tiling `bounds` with cells of size dx x dy.
/// Throws ConfigError when an extent is not an integer multiple of its cell
/// size, when the room leaves the domain or an exit is off the boundary.
GridSpec make_grid(const Rect& bounds, double dx, double dy, const Rect& room,
                   std::vector<Segment> exits = {});

/// Cell averages of value * 1_rect, using exact overlap fractions so that the
/// total mass is value * area(rect) for any alignment.
Field2D indicator_datum(const GridSpec& grid, double value, const Rect& rect);

/// Cell averages of a pointwise function sampled at cell centres.
template <class F>
Field2D sample_field(const GridSpec& grid, F&& f) {
  Field2D out(grid.nx, grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) out(i, j) = f(grid.x_center(i), grid.y_center(j));
  return out;
}

/// Per-side flags telling, for each boundary face, whether it lies on an exit.
/// Left/right flags are indexed by j, bottom/top flags by i.
struct BoundaryFaces {
  std::vector<bool> left;
  std::vector<bool> right;
  std::vector<bool> bottom;
  std::vector<bool> top;

  const std::vector<bool>& side(Side s) const;
};

BoundaryFaces boundary_faces(const GridSpec& grid);

/// The state rho = (rho^1, ..., rho^n): one density array per population on a shared grid.
class PopulationField {
 public:
  PopulationField() = default;
  PopulationField(GridSpec grid, std::size_t n);
  PopulationField(GridSpec grid, std::vector<Field2D> data);

  std::size_t n() const { return data_.size(); }
  const GridSpec& grid() const { return grid_; }
  Field2D& operator[](std::size_t i) { return data_[i]; }
  const Field2D& operator[](std::size_t i) const { return data_[i]; }
  std::span<Field2D> populations() { return data_; }
  std::span<const Field2D> populations() const { return data_; }

 private:
  GridSpec grid_;
  std::vector<Field2D> data_;
};

/// a * x + b * y, populationwise. Throws DimensionError on mismatched shapes.
PopulationField combine(double a, const PopulationField& x, double b, const PopulationField& y);

/// Discrete norms per population plus the totals summed over populations.
struct NormRecord {
  std::vector<double> l1;
  std::vector<double> linf;
  std::vector<double> tv;
  double l1_total = 0.0;
  double linf_total = 0.0;
  double tv_total = 0.0;
};

/// L1 = sum |rho| dx dy, Linf = max |rho|, and
/// TV = sum |rho_{i+1,j} - rho_{ij}| dy + |rho_{i,j+1} - rho_{ij}| dx over interior pairs.
/// Throws NumericError naming the population when a value is not finite.
NormRecord norms(const PopulationField& field);

double l1_norm(const Field2D& f, const GridSpec& grid);
double linf_norm(const Field2D& f);
double total_variation(const Field2D& f, const GridSpec& grid);
double mass(const Field2D& f, const GridSpec& grid);
double min_value(const Field2D& f);
double max_value(const Field2D& f);

/// sum over populations of ||a^i - b^i||_L1.
double l1_distance(const PopulationField& a, const PopulationField& b);

}  // namespace crowd
