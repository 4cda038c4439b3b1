#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "atomplane/constants.hpp"
#include "atomplane/errors.hpp"
#include "atomplane/grid.hpp"
#include "atomplane/interp.hpp"
#include "atomplane/parallel.hpp"
#include "atomplane/slm.hpp"

namespace atomplane {

enum class PsfModel { gaussian, airy };

inline PsfModel parse_psf_model(const std::string& s) {
  if (s == "gaussian") return PsfModel::gaussian;
  if (s == "airy") return PsfModel::airy;
  throw InvalidArgumentError("unknown psf model: " + s);
}

// SLM-to-atom-plane imaging chain: demagnification, blur, and the
// calibrated full-power potential depth.
struct ImagingSystem {
  double magnification = 0.036;
  PsfModel psf_model = PsfModel::gaussian;
  double psf_fwhm = 0.9e-6;                              // m, at the atom plane
  EnergyValue max_depth = kb_microkelvin(2.5);           // repulsive ceiling at level 255
  double field_extent_x = 600e-6;                        // usable drawing window, m
  double field_extent_y = 400e-6;

  void validate() const {
    if (!(magnification > 0.0 && magnification < 1.0))
      throw InvalidArgumentError("imaging: magnification must be in (0,1)");
    if (!(psf_fwhm > 0.0)) throw InvalidArgumentError("imaging: psf_fwhm must be positive");
    if (to_joule(max_depth) < 0.0) throw InvalidArgumentError("imaging: max_depth must be >= 0");
    if (!(field_extent_x > 0.0 && field_extent_y > 0.0))
      throw InvalidArgumentError("imaging: field extent must be positive");
  }

  // Footprint of one SLM pixel at the atom plane.
  double atom_plane_pixel() const { return magnification * kSlmPixelPitch; }
};

// Intensity Airy pattern (2 J1(x)/x)^2 scaled so its FWHM matches `fwhm`.
// Half maximum of the intensity Airy sits at x = 1.61634, first zero at
// x = 3.83171, giving first_zero_radius/fwhm = 1.18530.
inline constexpr double kAiryHalfMaxX = 1.6163399483107037;
inline constexpr double kAiryFirstZeroX = 3.8317059702075107;

inline double airy_intensity(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double j = 2.0 * std::cyl_bessel_j(1, x) / x;
  return j * j;
}

inline double airy_first_zero_radius(double fwhm) {
  return fwhm * kAiryFirstZeroX / (2.0 * kAiryHalfMaxX);
}

// Discrete blur kernel. Gaussian kernels are separable (1D taps applied per
// axis); airy kernels are dense 2D stencils. Taps always sum to 1.
struct PsfKernel {
  bool separable = true;
  int radius = 0;                    // taps span [-radius, radius]
  std::vector<double> taps1d;        // size 2*radius+1 (separable case)
  std::vector<double> taps2d;        // size (2*radius+1)^2 (dense case)

  bool is_delta() const { return radius == 0; }
};

inline PsfKernel psf_kernel(const ImagingSystem& sys, double grid_pitch) {
  if (!(grid_pitch > 0.0)) throw InvalidArgumentError("psf_kernel: non-positive pitch");
  PsfKernel k;
  if (sys.psf_fwhm <= grid_pitch / 10.0) {
    // Unresolvable blur: identity kernel.
    k.separable = true;
    k.radius = 0;
    k.taps1d = {1.0};
    return k;
  }
  if (grid_pitch > sys.psf_fwhm / 3.0) {
    throw SamplingError("psf_kernel: grid pitch must be <= psf_fwhm/3");
  }
  if (sys.psf_model == PsfModel::gaussian) {
    const double sigma = sys.psf_fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
    k.separable = true;
    k.radius = static_cast<int>(std::ceil(4.5 * sigma / grid_pitch));
    k.taps1d.resize(2 * k.radius + 1);
    double sum = 0.0;
    for (int i = -k.radius; i <= k.radius; ++i) {
      const double r = i * grid_pitch;
      const double v = std::exp(-0.5 * r * r / (sigma * sigma));
      k.taps1d[i + k.radius] = v;
      sum += v;
    }
    for (double& v : k.taps1d) v /= sum;
  } else {
    const double scale = 2.0 * kAiryHalfMaxX / sys.psf_fwhm;  // r -> airy argument
    k.separable = false;
    k.radius = static_cast<int>(std::ceil(3.2 * sys.psf_fwhm / grid_pitch));
    const int n = 2 * k.radius + 1;
    k.taps2d.resize(static_cast<std::size_t>(n) * n);
    double sum = 0.0;
    for (int j = -k.radius; j <= k.radius; ++j) {
      for (int i = -k.radius; i <= k.radius; ++i) {
        const double r = grid_pitch * std::sqrt(double(i) * i + double(j) * j);
        const double v = airy_intensity(scale * r);
        k.taps2d[static_cast<std::size_t>(j + k.radius) * n + (i + k.radius)] = v;
        sum += v;
      }
    }
    for (double& v : k.taps2d) v /= sum;
  }
  return k;
}

// Zero-padded convolution (dark surround).
inline ScalarField convolve(const ScalarField& f, const PsfKernel& k, int threads = 1) {
  const Grid2D& g = f.grid();
  if (2 * k.radius + 1 > std::min(g.nx, g.ny)) {
    throw ConfigError("convolve: kernel wider than grid");
  }
  if (k.is_delta()) return f;
  ScalarField out(g);
  if (k.separable) {
    ScalarField tmp(g);
    parallel_for(static_cast<std::size_t>(g.ny), threads, [&](std::size_t j) {
      for (int i = 0; i < g.nx; ++i) {
        double s = 0.0;
        const int lo = std::max(-k.radius, -i), hi = std::min(k.radius, g.nx - 1 - i);
        for (int d = lo; d <= hi; ++d) s += k.taps1d[d + k.radius] * f(i + d, static_cast<int>(j));
        tmp(i, static_cast<int>(j)) = s;
      }
    });
    parallel_for(static_cast<std::size_t>(g.ny), threads, [&](std::size_t j) {
      const int jj = static_cast<int>(j);
      const int lo = std::max(-k.radius, -jj), hi = std::min(k.radius, g.ny - 1 - jj);
      for (int i = 0; i < g.nx; ++i) {
        double s = 0.0;
        for (int d = lo; d <= hi; ++d) s += k.taps1d[d + k.radius] * tmp(i, jj + d);
        out(i, jj) = s;
      }
    });
  } else {
    const int n = 2 * k.radius + 1;
    parallel_for(static_cast<std::size_t>(g.ny), threads, [&](std::size_t j) {
      const int jj = static_cast<int>(j);
      for (int i = 0; i < g.nx; ++i) {
        double s = 0.0;
        const int dl = std::max(-k.radius, -jj), dh = std::min(k.radius, g.ny - 1 - jj);
        const int el = std::max(-k.radius, -i), eh = std::min(k.radius, g.nx - 1 - i);
        for (int dj = dl; dj <= dh; ++dj) {
          const double* row = &k.taps2d[static_cast<std::size_t>(dj + k.radius) * n + k.radius];
          for (int di = el; di <= eh; ++di) s += row[di] * f(i + di, jj + dj);
        }
        out(i, jj) = s;
      }
    });
  }
  return out;
}

// Relative intensity of the demagnified pattern sampled on a target grid;
// piecewise constant per SLM pixel, dark outside the usable field window.
inline ScalarField sample_pattern_intensity(const SlmPattern& pattern, const ImagingSystem& sys,
                                            const Grid2D& target) {
  const double a = sys.atom_plane_pixel();
  ScalarField out(target);
  const double cx = 0.5 * (pattern.width - 1);
  const double cy = 0.5 * (pattern.height - 1);
  for (int j = 0; j < target.ny; ++j) {
    const double wy = target.y(j);
    for (int i = 0; i < target.nx; ++i) {
      const double wx = target.x(i);
      if (std::abs(wx) > 0.5 * sys.field_extent_x || std::abs(wy) > 0.5 * sys.field_extent_y) continue;
      const long px = std::lround(wx / a + cx);
      const long py = std::lround(wy / a + cy);
      if (px < 0 || px >= pattern.width || py < 0 || py >= pattern.height) continue;
      out(i, j) = pattern.relative_intensity(pattern.at(static_cast<int>(px), static_cast<int>(py)));
    }
  }
  return out;
}

// SLM bitmap -> repulsive 532 nm potential at the atom plane (joules).
inline ScalarField project_to_atom_plane(const SlmPattern& pattern, const ImagingSystem& sys,
                                         const Grid2D& target, int threads = 1,
                                         const PhysicalConstants& pc = {}) {
  sys.validate();
  const double a = sys.atom_plane_pixel();
  if (target.pitch > a * (1.0 + 1e-12)) {
    throw SamplingError("project_to_atom_plane: target pitch coarser than projected SLM pixel");
  }
  const PsfKernel kernel = psf_kernel(sys, target.pitch);
  ScalarField intensity = sample_pattern_intensity(pattern, sys, target);
  ScalarField blurred = convolve(intensity, kernel, threads);
  const double depth = to_joule(sys.max_depth, pc);
  for (double& v : blurred.raw()) v = std::clamp(v * depth, 0.0, depth);
  return blurred;
}

// Ideal binary square-wave intensity image on an atom-plane grid, stripes
// along y, bright stripe centered at x = 0. Used by the resolution pipeline.
inline ScalarField ideal_grating_image(const Grid2D& grid, double period) {
  if (!(period > 0.0)) throw InvalidArgumentError("ideal_grating_image: period must be positive");
  ScalarField out(grid);
  for (int i = 0; i < grid.nx; ++i) {
    double ph = std::fmod(grid.x(i) / period + 0.25, 1.0);
    if (ph < 0) ph += 1.0;
    const double v = ph < 0.5 ? 1.0 : 0.0;
    for (int j = 0; j < grid.ny; ++j) out(i, j) = v;
  }
  return out;
}

struct MtfSample {
  double period = 0.0;     // m, at the atom plane
  double contrast = 0.0;   // (Imax - Imin)/(Imax + Imin), in [0, 1]
  bool flat_flagged = false;
};

// Sorted by increasing spatial frequency (decreasing period).
struct MtfCurve {
  std::vector<MtfSample> samples;
};

// Dark-to-light contrast per image: column-wise mean profile, then the
// per-period extrema averaged over all complete periods.
inline MtfCurve mtf_from_images(const std::vector<std::pair<double, ScalarField>>& pairs) {
  MtfCurve curve;
  for (const auto& [period, image] : pairs) {
    const Grid2D& g = image.grid();
    if (!(period > 0.0)) throw InvalidArgumentError("mtf_from_images: non-positive period");
    const double span = g.nx * g.pitch;
    if (span < 3.0 * period) {
      throw InvalidArgumentError("mtf_from_images: image must contain >= 3 full grating periods");
    }
    std::vector<double> prof(g.nx, 0.0);
    for (int i = 0; i < g.nx; ++i) {
      double s = 0.0;
      for (int j = 0; j < g.ny; ++j) s += image(i, j);
      prof[i] = s / g.ny;
    }
    const int per_px = std::max(1, static_cast<int>(std::floor(period / g.pitch)));
    const int nper = g.nx / per_px;
    double max_acc = 0.0, min_acc = 0.0;
    for (int k = 0; k < nper; ++k) {
      double mx = -INFINITY, mn = INFINITY;
      for (int i = k * per_px; i < (k + 1) * per_px; ++i) {
        mx = std::max(mx, prof[i]);
        mn = std::min(mn, prof[i]);
      }
      max_acc += mx;
      min_acc += mn;
    }
    const double imax = max_acc / nper, imin = min_acc / nper;
    MtfSample s;
    s.period = period;
    if (imax + imin <= 0.0 || (imax - imin) <= 1e-15 * std::abs(imax + imin)) {
      s.contrast = 0.0;
      s.flat_flagged = true;
    } else {
      s.contrast = std::clamp((imax - imin) / (imax + imin), 0.0, 1.0);
    }
    curve.samples.push_back(s);
  }
  std::sort(curve.samples.begin(), curve.samples.end(),
            [](const MtfSample& a, const MtfSample& b) { return a.period > b.period; });
  return curve;
}

struct PsfProfile {
  std::vector<double> radius;     // m
  std::vector<double> amplitude;  // normalized, amplitude[0] == 1
  double first_minimum = 0.0;     // m, first local minimum of the profile
  double fwhm = 0.0;              // m
  double native_resolution = 0.0; // pre-padding transform cell, 1/f_span
};

// Paper pipeline: monotone-cubic interpolation of contrast vs spatial
// frequency (anchored at MTF(0) = 1), zero-padded cosine transform, PSF
// reported as the magnitude of the transform.
inline PsfProfile psf_from_mtf(const MtfCurve& curve, int freq_grid = 1024, int pad_factor = 8) {
  const std::size_t n = curve.samples.size();
  if (n < 4) throw InvalidArgumentError("psf_from_mtf: need >= 4 MTF samples");
  if (pad_factor < 8) throw InvalidArgumentError("psf_from_mtf: pad factor must be >= 8");
  std::vector<double> f, c;
  f.reserve(n + 1);
  c.reserve(n + 1);
  f.push_back(0.0);
  c.push_back(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = curve.samples[n - 1 - i];  // ascending frequency
    const double fi = 1.0 / s.period;
    if (fi <= f.back()) throw InvalidArgumentError("psf_from_mtf: periods not strictly sortable");
    f.push_back(fi);
    c.push_back(std::clamp(s.contrast, 0.0, 1.0));
  }
  MonotoneCubic interp(f, c);
  const double fmax = f.back();
  const double df = fmax / (freq_grid - 1);
  std::vector<double> cg(freq_grid);
  for (int i = 0; i < freq_grid; ++i) cg[i] = std::max(0.0, interp(i * df));
  cg[0] = 1.0;

  const int npad = freq_grid * pad_factor;
  const int nr = npad / 2;
  PsfProfile out;
  out.radius.resize(nr);
  out.amplitude.resize(nr);
  std::vector<double> w(freq_grid, 1.0);
  w[0] = 0.5;
  w[freq_grid - 1] = 0.5;
  double norm = 0.0;
  for (int i = 0; i < freq_grid; ++i) norm += w[i] * cg[i];
  for (int k = 0; k < nr; ++k) {
    const double r = k / (npad * df);
    double acc = 0.0;
    for (int i = 0; i < freq_grid; ++i) acc += w[i] * cg[i] * std::cos(2.0 * M_PI * i * df * r);
    out.radius[k] = r;
    out.amplitude[k] = std::abs(acc / norm);
  }
  out.native_resolution = 1.0 / (freq_grid * df);

  out.first_minimum = 0.0;
  for (int k = 1; k + 1 < nr; ++k) {
    if (out.amplitude[k] < out.amplitude[k - 1] && out.amplitude[k] <= out.amplitude[k + 1]) {
      out.first_minimum = out.radius[k];
      break;
    }
  }
  out.fwhm = 0.0;
  for (int k = 1; k < nr; ++k) {
    if (out.amplitude[k] < 0.5) {
      const double t = (0.5 - out.amplitude[k - 1]) / (out.amplitude[k] - out.amplitude[k - 1]);
      out.fwhm = 2.0 * (out.radius[k - 1] + t * (out.radius[k] - out.radius[k - 1]));
      break;
    }
  }
  return out;
}

}  // namespace atomplane
