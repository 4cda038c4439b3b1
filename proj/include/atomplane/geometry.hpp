#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "atomplane/errors.hpp"
#include "atomplane/optics.hpp"
#include "atomplane/slm.hpp"

namespace atomplane {

struct OutlineResult {
  SlmPattern pattern;
  std::vector<std::string> warnings;
};

namespace detail {

// Signed distances in atom-plane meters, negative inside.
inline double sd_circle(double x, double y, double cx, double cy, double r) {
  return std::hypot(x - cx, y - cy) - r;
}

inline double sd_rect(double x, double y, double cx, double cy, double hx, double hy) {
  const double dx = std::abs(x - cx) - hx;
  const double dy = std::abs(y - cy) - hy;
  const double ox = std::max(dx, 0.0), oy = std::max(dy, 0.0);
  return std::hypot(ox, oy) + std::min(std::max(dx, dy), 0.0);
}

inline double sd_capsule(double x, double y, double x0, double y0, double x1, double y1,
                         double half_width) {
  const double vx = x1 - x0, vy = y1 - y0;
  const double wx = x - x0, wy = y - y0;
  const double vv = vx * vx + vy * vy;
  const double t = vv > 0.0 ? std::clamp((wx * vx + wy * vy) / vv, 0.0, 1.0) : 0.0;
  return std::hypot(wx - t * vx, wy - t * vy) - half_width;
}

// Rasterize an atom-plane signed-distance region onto the SLM: bright wall
// band of the given thickness hugging the outside of the region boundary.
template <typename Sdf>
SlmPattern rasterize_wall(const Sdf& sdf, double wall_thickness, const ImagingSystem& sys,
                          int width, int height) {
  SlmPattern p(width, height);
  const double a = sys.atom_plane_pixel();
  const double cx = 0.5 * (width - 1), cy = 0.5 * (height - 1);
  for (int iy = 0; iy < height; ++iy) {
    const double y = (iy - cy) * a;
    for (int ix = 0; ix < width; ++ix) {
      const double x = (ix - cx) * a;
      const double d = sdf(x, y);
      if (d >= 0.0 && d <= wall_thickness) p.at(ix, iy) = 255;
    }
  }
  return p;
}

inline void check_fits_field(double bbox_x, double bbox_y, const ImagingSystem& sys,
                             const std::string& name) {
  if (bbox_x > sys.field_extent_x || bbox_y > sys.field_extent_y) {
    throw ConfigError(name + ": shape does not fit the imaging field extent");
  }
}

}  // namespace detail

// Two reservoir discs joined by an open rectangular channel; bright walls of
// the given thickness drawn outside the region so interior dimensions are as
// stated. All lengths are atom-plane meters.
inline OutlineResult dumbbell_outline(double reservoir_radius, double channel_length,
                                      double channel_width, double wall_thickness,
                                      const ImagingSystem& sys, int width = kSlmWidth,
                                      int height = kSlmHeight) {
  if (!(reservoir_radius > 0.0) || channel_length < 0.0 || channel_width < 0.0 ||
      !(wall_thickness > 0.0)) {
    throw InvalidArgumentError("dumbbell_outline: dimensions must be positive");
  }
  const double cx = 0.5 * channel_length + reservoir_radius;
  detail::check_fits_field(2.0 * (cx + reservoir_radius + wall_thickness),
                           std::max(2.0 * reservoir_radius, channel_width) + 2.0 * wall_thickness,
                           sys, "dumbbell_outline");
  auto sdf = [&](double x, double y) {
    const double dl = detail::sd_circle(x, y, -cx, 0.0, reservoir_radius);
    const double dr = detail::sd_circle(x, y, cx, 0.0, reservoir_radius);
    double d = std::min(dl, dr);
    if (channel_width > 0.0) {
      d = std::min(d, detail::sd_rect(x, y, 0.0, 0.0, 0.5 * channel_length + 1e-9,
                                      0.5 * channel_width));
    }
    return d;
  };
  OutlineResult out{detail::rasterize_wall(sdf, wall_thickness, sys, width, height), {}};
  if (channel_width <= 0.0) out.warnings.push_back("degenerate: closed channel, reservoirs disjoint");
  if (channel_length <= 0.0) out.warnings.push_back("degenerate: reservoirs merged into one chamber");
  return out;
}

// Annular channel bounded by bright walls; atoms occupy the dark annulus
// between inner_diameter/2 and outer_diameter/2.
inline OutlineResult ring_outline(double inner_diameter, double outer_diameter,
                                  double wall_thickness, const ImagingSystem& sys,
                                  int width = kSlmWidth, int height = kSlmHeight) {
  if (!(outer_diameter > inner_diameter) || inner_diameter < 0.0) {
    throw InvalidArgumentError("ring_outline: need outer_d > inner_d >= 0");
  }
  if (!(wall_thickness > 0.0)) throw InvalidArgumentError("ring_outline: wall thickness must be positive");
  detail::check_fits_field(outer_diameter + 2.0 * wall_thickness,
                           outer_diameter + 2.0 * wall_thickness, sys, "ring_outline");
  const double r_in = 0.5 * inner_diameter, r_out = 0.5 * outer_diameter;
  const double mid = 0.5 * (r_in + r_out), half = 0.5 * (r_out - r_in);
  auto sdf = [&](double x, double y) {
    if (r_in <= 0.0) return detail::sd_circle(x, y, 0.0, 0.0, r_out);  // degenerate disk
    return std::abs(std::hypot(x, y) - mid) - half;
  };
  OutlineResult out{detail::rasterize_wall(sdf, wall_thickness, sys, width, height), {}};
  if (r_in <= 0.0) out.warnings.push_back("degenerate: inner diameter zero, filled disk");
  return out;
}

// Procedural kiwi-bird outline of the given head-to-tail length: body and
// head chambers plus beak and leg channels of ~5 um width. Sample artwork at
// the paper's scale, not a pixel-for-pixel reproduction.
inline OutlineResult kiwi_outline(double length, const ImagingSystem& sys,
                                  double wall_thickness = 2.88e-6, int width = kSlmWidth,
                                  int height = kSlmHeight) {
  if (!(length > 0.0)) throw InvalidArgumentError("kiwi_outline: length must be positive");
  const double L = length;
  detail::check_fits_field(1.1 * L, 0.9 * L, sys, "kiwi_outline");
  const double body_a = 0.30 * L, body_b = 0.20 * L;       // body half-axes
  const double head_r = 0.085 * L;
  const double head_x = 0.32 * L, head_y = 0.16 * L;
  const double beak_hw = 2.5e-6;
  auto sd_ellipse = [&](double x, double y) {
    // scaled-circle approximation, adequate for rasterized walls
    const double s = std::hypot(x / body_a, y / body_b);
    return (s - 1.0) * std::min(body_a, body_b);
  };
  auto sdf = [&](double x, double y) {
    double d = sd_ellipse(x, y);
    d = std::min(d, detail::sd_circle(x, y, head_x, head_y, head_r));
    // neck keeps the head connected to the body
    d = std::min(d, detail::sd_capsule(x, y, 0.18 * L, 0.10 * L, head_x, head_y, 0.05 * L));
    // beak: narrow channel
    d = std::min(d, detail::sd_capsule(x, y, head_x + 0.5 * head_r, head_y + 0.2 * head_r,
                                       0.52 * L, 0.10 * L, beak_hw));
    // legs: two narrow channels
    d = std::min(d, detail::sd_capsule(x, y, -0.02 * L, -0.14 * L, -0.05 * L, -0.34 * L, beak_hw));
    d = std::min(d, detail::sd_capsule(x, y, 0.10 * L, -0.14 * L, 0.13 * L, -0.32 * L, beak_hw));
    return d;
  };
  return {detail::rasterize_wall(sdf, wall_thickness, sys, width, height), {}};
}

}  // namespace atomplane
