#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "atomplane/errors.hpp"
#include "atomplane/grid.hpp"
#include "atomplane/ramp.hpp"

namespace atomplane {

// Composed potential: power-weighted sum of the planar-trap, pattern and
// CO2 crossed-beam maps sampled on one shared grid. Gradients are
// precomputed per component (central differences, one-sided at edges) so the
// force at a point is the power-weighted sum of bilinear samples.
class PotentialStack {
 public:
  explicit PotentialStack(const Grid2D& grid) : grid_(grid) {
    if (grid.nx < 2 || grid.ny < 2) throw InvalidArgumentError("potential stack: grid must be >= 2x2");
  }

  void set_planar(ScalarField f) { planar_ = add_component(std::move(f)); }
  void set_pattern(ScalarField f) { pattern_ = add_component(std::move(f)); }
  void set_co2(ScalarField f) { co2_ = add_component(std::move(f)); }

  const Grid2D& grid() const { return grid_; }
  bool has_planar() const { return planar_.has_value(); }
  bool has_pattern() const { return pattern_.has_value(); }
  bool has_co2() const { return co2_.has_value(); }
  const ScalarField* pattern_map() const { return pattern_ ? &pattern_->u : nullptr; }

  // Exact power-weighted sum at a grid cell.
  double cell_value(const BeamPowers& p, int ix, int iy) const {
    double v = 0.0;
    if (planar_) v += p.planar * planar_->u(ix, iy);
    if (pattern_) v += p.pattern * pattern_->u(ix, iy);
    if (co2_) v += p.co2 * co2_->u(ix, iy);
    return v;
  }

  ScalarField compose(const BeamPowers& p) const {
    ScalarField out(grid_);
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i) out(i, j) = cell_value(p, i, j);
    return out;
  }

  double value_at(const BeamPowers& p, double x, double y) const {
    double v = 0.0;
    if (planar_) v += p.planar * bilinear(planar_->u, x, y);
    if (pattern_) v += p.pattern * bilinear(pattern_->u, x, y);
    if (co2_) v += p.co2 * bilinear(co2_->u, x, y);
    return v;
  }

  std::pair<double, double> force_at(const BeamPowers& p, double x, double y) const {
    double fx = 0.0, fy = 0.0;
    if (planar_) {
      fx += p.planar * bilinear(planar_->fx, x, y);
      fy += p.planar * bilinear(planar_->fy, x, y);
    }
    if (pattern_) {
      fx += p.pattern * bilinear(pattern_->fx, x, y);
      fy += p.pattern * bilinear(pattern_->fy, x, y);
    }
    if (co2_) {
      fx += p.co2 * bilinear(co2_->fx, x, y);
      fy += p.co2 * bilinear(co2_->fy, x, y);
    }
    return {fx, fy};
  }

  double max_abs_potential(const BeamPowers& p) const {
    double m = 0.0;
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i) m = std::max(m, std::abs(cell_value(p, i, j)));
    return m;
  }

  // Highest harmonic-equivalent frequency present in the composed map,
  // from the largest second difference: f = sqrt(max U'' / m) / 2 pi.
  double max_curvature_frequency(const BeamPowers& p, double mass) const {
    double upp = 0.0;
    const double h2 = grid_.pitch * grid_.pitch;
    for (int j = 0; j < grid_.ny; ++j) {
      for (int i = 0; i < grid_.nx; ++i) {
        if (i > 0 && i + 1 < grid_.nx) {
          upp = std::max(upp, std::abs(cell_value(p, i - 1, j) - 2.0 * cell_value(p, i, j) +
                                       cell_value(p, i + 1, j)) / h2);
        }
        if (j > 0 && j + 1 < grid_.ny) {
          upp = std::max(upp, std::abs(cell_value(p, i, j - 1) - 2.0 * cell_value(p, i, j) +
                                       cell_value(p, i, j + 1)) / h2);
        }
      }
    }
    return std::sqrt(upp / mass) / (2.0 * M_PI);
  }

 private:
  struct Component {
    ScalarField u;   // J
    ScalarField fx;  // -dU/dx
    ScalarField fy;  // -dU/dy
  };

  Component add_component(ScalarField f) const {
    if (!f.grid().same_geometry(grid_)) {
      throw InvalidArgumentError("potential stack: component grid mismatch");
    }
    Component c{std::move(f), ScalarField(grid_), ScalarField(grid_)};
    const double inv2h = 1.0 / (2.0 * grid_.pitch);
    const double invh = 1.0 / grid_.pitch;
    for (int j = 0; j < grid_.ny; ++j) {
      for (int i = 0; i < grid_.nx; ++i) {
        double dx, dy;
        if (i == 0) dx = (c.u(1, j) - c.u(0, j)) * invh;
        else if (i == grid_.nx - 1) dx = (c.u(i, j) - c.u(i - 1, j)) * invh;
        else dx = (c.u(i + 1, j) - c.u(i - 1, j)) * inv2h;
        if (j == 0) dy = (c.u(i, 1) - c.u(i, 0)) * invh;
        else if (j == grid_.ny - 1) dy = (c.u(i, j) - c.u(i, j - 1)) * invh;
        else dy = (c.u(i, j + 1) - c.u(i, j - 1)) * inv2h;
        c.fx(i, j) = -dx;
        c.fy(i, j) = -dy;
      }
    }
    return c;
  }

  Grid2D grid_;
  std::optional<Component> planar_;
  std::optional<Component> pattern_;
  std::optional<Component> co2_;
};

}  // namespace atomplane
