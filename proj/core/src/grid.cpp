#include "crowd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "crowd/errors.hpp"

namespace crowd {

namespace {

void require_same_shape(const Field2D& a, const Field2D& b) {
  if (!a.same_shape(b))
    throw DimensionError("field shape mismatch: " + std::to_string(a.nx()) + "x" +
                         std::to_string(a.ny()) + " vs " + std::to_string(b.nx()) + "x" +
                         std::to_string(b.ny()));
}

std::size_t cell_count(double extent, double h, const char* axis) {
  if (!(h > 0.0)) throw ConfigError(std::string("cell size along ") + axis + " must be positive");
  const double ratio = extent / h;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(n * h - extent) > 1e-9 * extent)
    throw ConfigError(std::string("extent not divisible by cell size along ") + axis);
  return static_cast<std::size_t>(n);
}

bool close(double a, double b, double scale) { return std::abs(a - b) <= 1e-9 * scale; }

// Length of [a0, a1] ∩ [b0, b1].
double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

Field2D& Field2D::operator+=(const Field2D& other) {
  require_same_shape(*this, other);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Field2D& Field2D::operator-=(const Field2D& other) {
  require_same_shape(*this, other);
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Field2D& Field2D::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
Field2D operator*(double s, Field2D a) { return a *= s; }

bool operator==(const GridSpec& a, const GridSpec& b) {
  auto same_rect = [](const Rect& r, const Rect& s) {
    return r.x0 == s.x0 && r.x1 == s.x1 && r.y0 == s.y0 && r.y1 == s.y1;
  };
  if (!(a.x0 == b.x0 && a.y0 == b.y0 && a.dx == b.dx && a.dy == b.dy && a.nx == b.nx &&
        a.ny == b.ny && same_rect(a.room, b.room) && a.exits.size() == b.exits.size()))
    return false;
  for (std::size_t k = 0; k < a.exits.size(); ++k) {
    const auto& e = a.exits[k];
    const auto& f = b.exits[k];
    if (!(e.x0 == f.x0 && e.y0 == f.y0 && e.x1 == f.x1 && e.y1 == f.y1)) return false;
  }
  return true;
}

GridSpec make_grid(const Rect& bounds, double dx, double dy, const Rect& room,
                   std::vector<Segment> exits) {
  if (bounds.empty()) throw ConfigError("grid bounds are empty");
  GridSpec g;
  g.x0 = bounds.x0;
  g.y0 = bounds.y0;
  g.nx = cell_count(bounds.width(), dx, "x");
  g.ny = cell_count(bounds.height(), dy, "y");
  g.dx = dx;
  g.dy = dy;

  const double scale = std::max(bounds.width(), bounds.height());
  if (room.empty() || !bounds.contains(room, 1e-9 * scale))
    throw ConfigError("room must be a nonempty rectangle inside the numerical domain");
  g.room = room;

  for (const auto& e : exits) {
    const bool vertical = close(e.x0, e.x1, scale);
    const bool horizontal = close(e.y0, e.y1, scale);
    const bool on_side =
        (vertical && (close(e.x0, bounds.x0, scale) || close(e.x0, bounds.x1, scale)) &&
         std::min(e.y0, e.y1) >= bounds.y0 - 1e-9 * scale &&
         std::max(e.y0, e.y1) <= bounds.y1 + 1e-9 * scale) ||
        (horizontal && (close(e.y0, bounds.y0, scale) || close(e.y0, bounds.y1, scale)) &&
         std::min(e.x0, e.x1) >= bounds.x0 - 1e-9 * scale &&
         std::max(e.x0, e.x1) <= bounds.x1 + 1e-9 * scale);
    if (!on_side) {
      std::ostringstream msg;
      msg << "exit segment (" << e.x0 << ", " << e.y0 << ")-(" << e.x1 << ", " << e.y1
          << ") is not on the domain boundary";
      throw ConfigError(msg.str());
    }
  }
  g.exits = std::move(exits);
  return g;
}

Field2D indicator_datum(const GridSpec& grid, double value, const Rect& rect) {
  const Rect b = grid.bounds();
  const double scale = std::max(b.width(), b.height());
  if (rect.empty() || !b.contains(rect, 1e-9 * scale))
    throw ConfigError("indicator rectangle must lie inside the grid bounds");

  std::vector<double> ox(grid.nx), oy(grid.ny);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    const double a = grid.x0 + static_cast<double>(i) * grid.dx;
    ox[i] = overlap(a, a + grid.dx, rect.x0, rect.x1) / grid.dx;
  }
  for (std::size_t j = 0; j < grid.ny; ++j) {
    const double a = grid.y0 + static_cast<double>(j) * grid.dy;
    oy[j] = overlap(a, a + grid.dy, rect.y0, rect.y1) / grid.dy;
  }
  Field2D out(grid.nx, grid.ny);
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) out(i, j) = value * ox[i] * oy[j];
  return out;
}

const std::vector<bool>& BoundaryFaces::side(Side s) const {
  switch (s) {
    case Side::Left: return left;
    case Side::Right: return right;
    case Side::Bottom: return bottom;
    case Side::Top: return top;
  }
  return left;
}

BoundaryFaces boundary_faces(const GridSpec& grid) {
  BoundaryFaces f;
  f.left.assign(grid.ny, false);
  f.right.assign(grid.ny, false);
  f.bottom.assign(grid.nx, false);
  f.top.assign(grid.nx, false);
  const Rect b = grid.bounds();
  const double scale = std::max(b.width(), b.height());
  for (const auto& e : grid.exits) {
    if (close(e.x0, e.x1, scale)) {
      auto& flags = close(e.x0, b.x0, scale) ? f.left : f.right;
      const double lo = std::min(e.y0, e.y1), hi = std::max(e.y0, e.y1);
      for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.y_center(j);
        if (y >= lo && y <= hi) flags[j] = true;
      }
    } else {
      auto& flags = close(e.y0, b.y0, scale) ? f.bottom : f.top;
      const double lo = std::min(e.x0, e.x1), hi = std::max(e.x0, e.x1);
      for (std::size_t i = 0; i < grid.nx; ++i) {
        const double x = grid.x_center(i);
        if (x >= lo && x <= hi) flags[i] = true;
      }
    }
  }
  return f;
}

PopulationField::PopulationField(GridSpec grid, std::size_t n)
    : grid_(std::move(grid)), data_(n, Field2D(grid_.nx, grid_.ny)) {}

PopulationField::PopulationField(GridSpec grid, std::vector<Field2D> data)
    : grid_(std::move(grid)), data_(std::move(data)) {
  for (const auto& f : data_)
    if (!grid_.matches(f)) throw DimensionError("population array does not match the grid");
}

PopulationField combine(double a, const PopulationField& x, double b, const PopulationField& y) {
  if (x.n() != y.n()) throw DimensionError("population counts differ");
  PopulationField out(x.grid(), x.n());
  for (std::size_t p = 0; p < x.n(); ++p) {
    require_same_shape(x[p], y[p]);
    auto o = out[p].values();
    auto xv = x[p].values();
    auto yv = y[p].values();
    for (std::size_t k = 0; k < o.size(); ++k) o[k] = a * xv[k] + b * yv[k];
  }
  return out;
}

double l1_norm(const Field2D& f, const GridSpec& grid) {
  double s = 0.0;
  for (double v : f.values()) s += std::abs(v);
  return s * grid.cell_area();
}

double mass(const Field2D& f, const GridSpec& grid) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * grid.cell_area();
}

double linf_norm(const Field2D& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

double min_value(const Field2D& f) {
  auto v = f.values();
  return v.empty() ? 0.0 : *std::min_element(v.begin(), v.end());
}

double max_value(const Field2D& f) {
  auto v = f.values();
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

double total_variation(const Field2D& f, const GridSpec& grid) {
  double sx = 0.0, sy = 0.0;
  for (std::size_t j = 0; j < f.ny(); ++j) {
    for (std::size_t i = 0; i < f.nx(); ++i) {
      if (i + 1 < f.nx()) sx += std::abs(f(i + 1, j) - f(i, j));
      if (j + 1 < f.ny()) sy += std::abs(f(i, j + 1) - f(i, j));
    }
  }
  return sx * grid.dy + sy * grid.dx;
}

NormRecord norms(const PopulationField& field) {
  NormRecord r;
  const auto& grid = field.grid();
  for (std::size_t p = 0; p < field.n(); ++p) {
    for (double v : field[p].values())
      if (!std::isfinite(v))
        throw NumericError("non-finite density in population " + std::to_string(p + 1));
    r.l1.push_back(l1_norm(field[p], grid));
    r.linf.push_back(linf_norm(field[p]));
    r.tv.push_back(total_variation(field[p], grid));
    r.l1_total += r.l1.back();
    r.linf_total += r.linf.back();
    r.tv_total += r.tv.back();
  }
  return r;
}

double l1_distance(const PopulationField& a, const PopulationField& b) {
  if (a.n() != b.n()) throw DimensionError("population counts differ");
  double s = 0.0;
  for (std::size_t p = 0; p < a.n(); ++p) {
    require_same_shape(a[p], b[p]);
    auto av = a[p].values();
    auto bv = b[p].values();
    double sp = 0.0;
    for (std::size_t k = 0; k < av.size(); ++k) sp += std::abs(av[k] - bv[k]);
    s += sp;
  }
  return s * a.grid().cell_area();
}

}  // namespace crowd
