#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "atomplane/errors.hpp"

namespace atomplane {

// Uniform square-pitched 2D grid. origin is the world position of the center
// of cell (0,0); cell (ix,iy) sits at origin + (ix,iy)*pitch.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double pitch = 0.0;     // m
  double origin_x = 0.0;  // m
  double origin_y = 0.0;  // m

  Grid2D() = default;
  Grid2D(int nx_, int ny_, double pitch_, double ox = 0.0, double oy = 0.0)
      : nx(nx_), ny(ny_), pitch(pitch_), origin_x(ox), origin_y(oy) {
    if (nx <= 0 || ny <= 0) throw InvalidArgumentError("grid dimensions must be positive");
    if (!(pitch > 0.0) || !std::isfinite(pitch)) throw InvalidArgumentError("grid pitch must be positive");
  }

  // Grid centered on the world origin.
  static Grid2D centered(int nx, int ny, double pitch) {
    return Grid2D(nx, ny, pitch, -0.5 * (nx - 1) * pitch, -0.5 * (ny - 1) * pitch);
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  double x(int ix) const { return origin_x + ix * pitch; }
  double y(int iy) const { return origin_y + iy * pitch; }
  double width() const { return nx * pitch; }
  double height() const { return ny * pitch; }

  bool in_bounds(int ix, int iy) const { return ix >= 0 && ix < nx && iy >= 0 && iy < ny; }

  std::pair<double, double> index_to_world(int ix, int iy) const { return {x(ix), y(iy)}; }

  // Nearest cell for a world point, or nullopt when the point lies outside
  // the grid extent (cell catchment is +-pitch/2 around each center).
  std::optional<std::pair<int, int>> world_to_index(double wx, double wy) const {
    if (!std::isfinite(wx) || !std::isfinite(wy)) {
      throw InvalidArgumentError("world_to_index: non-finite coordinates");
    }
    const long ix = std::lround((wx - origin_x) / pitch);
    const long iy = std::lround((wy - origin_y) / pitch);
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) return std::nullopt;
    return std::make_pair(static_cast<int>(ix), static_cast<int>(iy));
  }

  bool same_geometry(const Grid2D& o, double rel = 1e-12) const {
    return nx == o.nx && ny == o.ny && std::abs(pitch - o.pitch) <= rel * pitch &&
           std::abs(origin_x - o.origin_x) <= rel * pitch && std::abs(origin_y - o.origin_y) <= rel * pitch;
  }
};

// Row-major scalar field on a Grid2D.
template <typename T>
class Field2D {
 public:
  Field2D() = default;
  explicit Field2D(const Grid2D& grid, T fill = T{}) : grid_(grid), data_(grid.size(), fill) {}

  const Grid2D& grid() const { return grid_; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::size_t size() const { return data_.size(); }

  T& operator()(int ix, int iy) { return data_[static_cast<std::size_t>(iy) * grid_.nx + ix]; }
  const T& operator()(int ix, int iy) const { return data_[static_cast<std::size_t>(iy) * grid_.nx + ix]; }

  T& at(int ix, int iy) {
    if (!grid_.in_bounds(ix, iy)) throw InvalidArgumentError("Field2D::at out of bounds");
    return (*this)(ix, iy);
  }
  const T& at(int ix, int iy) const {
    if (!grid_.in_bounds(ix, iy)) throw InvalidArgumentError("Field2D::at out of bounds");
    return (*this)(ix, iy);
  }

  std::vector<T>& raw() { return data_; }
  const std::vector<T>& raw() const { return data_; }

 private:
  Grid2D grid_;
  std::vector<T> data_;
};

using ScalarField = Field2D<double>;

inline double field_sum(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.raw()) s += v;
  return s;
}

inline double field_max(const ScalarField& f) {
  double m = -INFINITY;
  for (double v : f.raw()) m = std::max(m, v);
  return m;
}

inline double field_min(const ScalarField& f) {
  double m = INFINITY;
  for (double v : f.raw()) m = std::min(m, v);
  return m;
}

// Bilinear sample at a world point; clamps to the border cells.
inline double bilinear(const ScalarField& f, double wx, double wy) {
  const Grid2D& g = f.grid();
  double u = (wx - g.origin_x) / g.pitch;
  double v = (wy - g.origin_y) / g.pitch;
  u = std::min(std::max(u, 0.0), static_cast<double>(g.nx - 1));
  v = std::min(std::max(v, 0.0), static_cast<double>(g.ny - 1));
  const int i0 = std::min(static_cast<int>(u), g.nx - 2 >= 0 ? g.nx - 2 : 0);
  const int j0 = std::min(static_cast<int>(v), g.ny - 2 >= 0 ? g.ny - 2 : 0);
  const int i1 = std::min(i0 + 1, g.nx - 1);
  const int j1 = std::min(j0 + 1, g.ny - 1);
  const double fu = u - i0;
  const double fv = v - j0;
  const double a = f(i0, j0) * (1 - fu) + f(i1, j0) * fu;
  const double b = f(i0, j1) * (1 - fu) + f(i1, j1) * fu;
  return a * (1 - fv) + b * fv;
}

// Block-average rebin by an integer factor dividing both dimensions.
inline ScalarField rebin(const ScalarField& f, int factor, bool mean = false) {
  const Grid2D& g = f.grid();
  if (factor < 1 || g.nx % factor != 0 || g.ny % factor != 0) {
    throw InvalidArgumentError("rebin factor must divide grid dimensions");
  }
  Grid2D coarse(g.nx / factor, g.ny / factor, g.pitch * factor,
                g.origin_x + 0.5 * (factor - 1) * g.pitch,
                g.origin_y + 0.5 * (factor - 1) * g.pitch);
  ScalarField out(coarse);
  for (int j = 0; j < coarse.ny; ++j) {
    for (int i = 0; i < coarse.nx; ++i) {
      double s = 0.0;
      for (int dj = 0; dj < factor; ++dj)
        for (int di = 0; di < factor; ++di) s += f(i * factor + di, j * factor + dj);
      out(i, j) = mean ? s / (factor * factor) : s;
    }
  }
  return out;
}

}  // namespace atomplane
