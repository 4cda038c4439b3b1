#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "atomplane/constants.hpp"
#include "atomplane/errors.hpp"
#include "atomplane/fit.hpp"
#include "atomplane/grid.hpp"

namespace atomplane {

// ---------------------------------------------------------------------------
// Cloud-radius fit and expansion thermometry
// ---------------------------------------------------------------------------

struct GaussianRadiusFit {
  double radius = 0.0;      // per-axis rms of the isotropic gaussian, m
  double radius_err = 0.0;
  double center_x = 0.0;
  double center_y = 0.0;
  double amplitude = 0.0;
  double offset = 0.0;
  double ssr = 0.0;
  bool converged = false;
};

namespace detail {

// Analytic-jacobian Levenberg-Marquardt for the isotropic gaussian + offset
// model; the generic numeric-J fitter is too slow for full density maps.
inline GaussianRadiusFit fit_gaussian_lm(const ScalarField& density, double a0, double cx0,
                                         double cy0, double r0, double b0) {
  const Grid2D& g = density.grid();
  const std::size_t n = g.size();
  double p[5] = {a0, cx0, cy0, std::log(r0), b0};
  double lambda = 1e-3;
  auto eval_ssr = [&](const double* q) {
    const double r = std::exp(q[3]);
    const double inv2r2 = 1.0 / (2.0 * r * r);
    double ssr = 0.0;
    for (int j = 0; j < g.ny; ++j) {
      const double dy = g.y(j) - q[2];
      for (int i = 0; i < g.nx; ++i) {
        const double dx = g.x(i) - q[1];
        const double m = q[0] * std::exp(-(dx * dx + dy * dy) * inv2r2) + q[4];
        const double res = m - density(i, j);
        ssr += res * res;
      }
    }
    return ssr;
  };
  double ssr = eval_ssr(p);
  bool converged = false;
  int it = 0;
  std::vector<double> jtj(25), jtr(5), delta;
  for (; it < 120; ++it) {
    std::fill(jtj.begin(), jtj.end(), 0.0);
    std::fill(jtr.begin(), jtr.end(), 0.0);
    const double r = std::exp(p[3]);
    const double inv2r2 = 1.0 / (2.0 * r * r);
    for (int j = 0; j < g.ny; ++j) {
      const double dy = g.y(j) - p[2];
      for (int i = 0; i < g.nx; ++i) {
        const double dx = g.x(i) - p[1];
        const double q2 = (dx * dx + dy * dy) * inv2r2;
        const double e = std::exp(-q2);
        const double m = p[0] * e + p[4];
        const double res = m - density(i, j);
        const double jr[5] = {e, p[0] * e * dx / (r * r), p[0] * e * dy / (r * r),
                              p[0] * e * 2.0 * q2, 1.0};
        for (int a = 0; a < 5; ++a) {
          jtr[a] -= jr[a] * res;
          for (int b = a; b < 5; ++b) jtj[a * 5 + b] += jr[a] * jr[b];
        }
      }
    }
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < a; ++b) jtj[a * 5 + b] = jtj[b * 5 + a];
    bool improved = false;
    for (int damp = 0; damp < 10; ++damp) {
      std::vector<double> aug = jtj;
      for (int a = 0; a < 5; ++a) aug[a * 5 + a] += lambda * std::max(jtj[a * 5 + a], 1e-300);
      if (!solve_dense(aug, jtr, delta)) {
        lambda *= 10.0;
        continue;
      }
      double q[5];
      for (int a = 0; a < 5; ++a) q[a] = p[a] + delta[a];
      const double ssr_try = eval_ssr(q);
      if (std::isfinite(ssr_try) && ssr_try < ssr) {
        const double rel = (ssr - ssr_try) / std::max(ssr, 1e-300);
        std::copy(q, q + 5, p);
        ssr = ssr_try;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (rel < 1e-12) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      converged = true;
      break;
    }
    if (converged) break;
  }
  GaussianRadiusFit out;
  out.amplitude = p[0];
  out.center_x = p[1];
  out.center_y = p[2];
  out.radius = std::exp(p[3]);
  out.offset = p[4];
  out.ssr = ssr;
  out.converged = converged;
  // radius error from the (J^T J)^-1 diagonal, via d(radius) = radius d(log r)
  {
    const double r = std::exp(p[3]);
    const double inv2r2 = 1.0 / (2.0 * r * r);
    std::fill(jtj.begin(), jtj.end(), 0.0);
    for (int j = 0; j < g.ny; ++j) {
      const double dy = g.y(j) - p[2];
      for (int i = 0; i < g.nx; ++i) {
        const double dx = g.x(i) - p[1];
        const double q2 = (dx * dx + dy * dy) * inv2r2;
        const double e = std::exp(-q2);
        const double jr[5] = {e, p[0] * e * dx / (r * r), p[0] * e * dy / (r * r),
                              p[0] * e * 2.0 * q2, 1.0};
        for (int a = 0; a < 5; ++a)
          for (int b = a; b < 5; ++b) jtj[a * 5 + b] += jr[a] * jr[b];
      }
    }
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < a; ++b) jtj[a * 5 + b] = jtj[b * 5 + a];
    const double s2 = ssr / std::max<std::size_t>(n - 5, 1);
    std::vector<double> e(5, 0.0), col;
    e[3] = 1.0;
    if (solve_dense(jtj, e, col)) out.radius_err = out.radius * std::sqrt(std::max(0.0, col[3] * s2));
  }
  return out;
}

}  // namespace detail

// Least-squares isotropic 2D gaussian fit; radius is the per-axis rms,
// initialized from sample moments.
inline GaussianRadiusFit fit_gaussian_radius(const ScalarField& density) {
  const Grid2D& g = density.grid();
  if (g.size() < 50) throw InvalidArgumentError("fit_gaussian_radius: need >= 10x cells per parameter");
  double total = 0.0;
  std::size_t nonzero = 0;
  double vmax = -INFINITY, vmin = INFINITY;
  for (double v : density.raw()) {
    total += v;
    if (v != 0.0) ++nonzero;
    vmax = std::max(vmax, v);
    vmin = std::min(vmin, v);
  }
  if (!(total > 0.0)) throw InvalidArgumentError("fit_gaussian_radius: total mass must be positive");
  if (nonzero < 5) throw FitError("fit_gaussian_radius: degenerate density (fewer than 5 occupied cells)");
  double cx = 0.0, cy = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      cx += density(i, j) * g.x(i);
      cy += density(i, j) * g.y(j);
    }
  cx /= total;
  cy /= total;
  double m2 = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dx = g.x(i) - cx, dy = g.y(j) - cy;
      m2 += density(i, j) * (dx * dx + dy * dy);
    }
  double r0 = std::sqrt(std::max(m2 / (2.0 * total), 0.25 * g.pitch * g.pitch));
  const GaussianRadiusFit fit =
      detail::fit_gaussian_lm(density, vmax - std::max(vmin, 0.0), cx, cy, r0, std::max(vmin, 0.0));
  if (!fit.converged || !(fit.radius > 0.0) || !std::isfinite(fit.radius)) {
    throw ConvergenceError("fit_gaussian_radius: fit did not converge", fit.ssr);
  }
  return fit;
}

struct RadiusSample {
  double t = 0.0;      // s
  double radius = 0.0; // m
  double radius_err = 0.0;
};

struct RadiusSeries {
  std::vector<RadiusSample> samples;

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!(samples[i].radius > 0.0)) throw InvalidArgumentError("radius series: R must be positive");
      if (i > 0 && !(samples[i].t > samples[i - 1].t))
        throw InvalidArgumentError("radius series: t must be strictly increasing");
    }
  }
};

struct TemperatureFit {
  double temperature = 0.0;  // K
  double temperature_err = 0.0;
  double r0_squared = 0.0;   // intercept
  double slope = 0.0;        // kB T / m
  bool unphysical = false;   // negative fitted slope
};

// Ballistic law R^2(t) = R^2(0) + (kB T / m) t^2 as a weighted line in t^2.
inline TemperatureFit fit_temperature(const RadiusSeries& series, double mass,
                                      const PhysicalConstants& pc = {}) {
  series.validate();
  const std::size_t n = series.samples.size();
  if (n < 3) throw InvalidArgumentError("fit_temperature: need >= 3 samples");
  std::vector<double> x(n), y(n), w;
  bool have_err = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = series.samples[i];
    x[i] = s.t * s.t;
    y[i] = s.radius * s.radius;
    if (!(s.radius_err > 0.0)) have_err = false;
  }
  if (have_err) {
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double sig = 2.0 * series.samples[i].radius * series.samples[i].radius_err;
      w[i] = 1.0 / (sig * sig);
    }
  }
  const LineFit lf = fit_line(x, y, w);
  TemperatureFit out;
  out.slope = lf.slope;
  out.r0_squared = lf.intercept;
  out.temperature = lf.slope * mass / pc.k_boltzmann();
  out.temperature_err = lf.slope_err * mass / pc.k_boltzmann();
  out.unphysical = lf.slope < 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Reservoir imbalance (Eq. 1) and transport fits
// ---------------------------------------------------------------------------

using RegionMask = Field2D<std::uint8_t>;

inline RegionMask disc_mask(const Grid2D& g, double cx, double cy, double radius) {
  RegionMask m(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dx = g.x(i) - cx, dy = g.y(j) - cy;
      m(i, j) = dx * dx + dy * dy <= radius * radius ? 1 : 0;
    }
  return m;
}

// side = +1 keeps coordinates > split, side = -1 keeps coordinates < split.
inline RegionMask halfplane_mask(const Grid2D& g, char axis, int side, double split) {
  RegionMask m(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double c = axis == 'x' ? g.x(i) : g.y(j);
      m(i, j) = (side > 0 ? c > split : c < split) ? 1 : 0;
    }
  return m;
}

inline double masked_sum(const ScalarField& density, const RegionMask& mask) {
  if (!density.grid().same_geometry(mask.grid()))
    throw InvalidArgumentError("imbalance: mask grid mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) {
    if (mask.raw()[i]) s += density.raw()[i];
  }
  return s;
}

// Eq. (1): (N_i - N_f)/(N_i + N_f); nullopt when both reservoirs are empty.
inline std::optional<double> imbalance(const ScalarField& density, const RegionMask& mask_initial,
                                       const RegionMask& mask_final) {
  if (!mask_initial.grid().same_geometry(mask_final.grid()))
    throw InvalidArgumentError("imbalance: mask grids differ");
  for (std::size_t i = 0; i < mask_initial.size(); ++i) {
    if (mask_initial.raw()[i] && mask_final.raw()[i])
      throw InvalidArgumentError("imbalance: masks must be disjoint");
  }
  const double ni = masked_sum(density, mask_initial);
  const double nf = masked_sum(density, mask_final);
  if (ni + nf == 0.0) return std::nullopt;
  return (ni - nf) / (ni + nf);
}

struct ImbalancePoint {
  double t = 0.0;
  double value = 0.0;
};

struct ImbalanceTrace {
  std::vector<ImbalancePoint> samples;
  std::string initial_label = "initial";
  std::string final_label = "final";
};

struct TwoRegimeFit {
  double breakpoint = 0.0;   // s
  double slope = 0.0;        // ballistic regime, 1/s
  double tau = 0.0;          // s
  double omega = 0.0;        // rad/s
  double phase = 0.0;
  double offset = 0.0;
  double amplitude = 0.0;
  double ssr = INFINITY;
  double r_squared = 0.0;
  bool degenerate = false;   // single-regime data
  bool converged = false;
};

namespace detail {

// Piecewise model, continuity enforced by anchoring the linear head at the
// oscillator's value at the breakpoint:
//   t >= tb: A exp(-(t-tb)/tau) cos(w (t-tb) + phi) + C
//   t <  tb: (A cos phi + C) + k (t - tb)
inline void two_regime_residuals(const std::vector<double>& ts, const std::vector<double>& ys,
                                 double tb, const std::vector<double>& p, std::vector<double>& r) {
  const double k = p[0], A = p[1], tau = std::exp(p[2]), w = std::exp(p[3]), phi = p[4], C = p[5];
  const double anchor = A * std::cos(phi) + C;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double t = ts[i];
    double m;
    if (t < tb) {
      m = anchor + k * (t - tb);
    } else {
      const double u = t - tb;
      m = A * std::exp(-u / tau) * std::cos(w * u + phi) + C;
    }
    r[i] = m - ys[i];
  }
}

}  // namespace detail

// Breakpoint scan over samples between 10% and 70% of the span; each
// candidate gets a damped-oscillator tail fit with the linear head anchored
// for continuity, and the lowest total SSR wins.
inline TwoRegimeFit fit_two_regime(const ImbalanceTrace& trace) {
  const std::size_t n = trace.samples.size();
  if (n < 20) throw InvalidArgumentError("fit_two_regime: need >= 20 samples spanning both regimes");
  std::vector<double> ts(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    ts[i] = trace.samples[i].t;
    ys[i] = trace.samples[i].value;
    if (i > 0 && !(ts[i] > ts[i - 1]))
      throw InvalidArgumentError("fit_two_regime: times must be strictly increasing");
  }
  const double t0 = ts.front(), t1 = ts.back(), span = t1 - t0;

  // single-line reference for the degenerate flag
  const LineFit global_line = fit_line(ts, ys);

  TwoRegimeFit best;
  for (std::size_t bi = 0; bi < n; ++bi) {
    const double tb = ts[bi];
    if (tb < t0 + 0.1 * span || tb > t0 + 0.7 * span) continue;
    if (bi < 3 || n - bi < 8) continue;

    // initializers from the split
    std::vector<double> hx(ts.begin(), ts.begin() + bi), hy(ys.begin(), ys.begin() + bi);
    double k0 = 0.0, vb = ys[bi];
    if (hx.size() >= 2) {
      const LineFit head = fit_line(hx, hy);
      k0 = head.slope;
      vb = head.intercept + head.slope * tb;
    }
    double c0 = 0.0;
    for (std::size_t i = bi; i < n; ++i) c0 += ys[i];
    c0 /= (n - bi);
    const double a0 = vb - c0;
    // crude frequency estimate from tail mean crossings
    int crossings = 0;
    for (std::size_t i = bi + 1; i < n; ++i) {
      if ((ys[i] - c0) * (ys[i - 1] - c0) < 0.0) ++crossings;
    }
    const double tail_span = t1 - tb;
    double w0 = crossings > 0 ? M_PI * crossings / tail_span : 2.0 * M_PI / std::max(tail_span, 1e-12);
    const double tau0 = tail_span / 3.0;

    for (const double wmul : {1.0, 0.5, 2.0}) {
      std::vector<double> p = {k0, a0 != 0.0 ? a0 : 1e-3, std::log(std::max(tau0, 1e-9)),
                               std::log(std::max(w0 * wmul, 1e-9)), 0.0, c0};
      LmOptions opt;
      opt.max_iterations = 150;
      const LmResult lm = levenberg_marquardt(
          [&](const std::vector<double>& q, std::vector<double>& r) {
            detail::two_regime_residuals(ts, ys, tb, q, r);
          },
          p, n, opt);
      if (lm.ssr < best.ssr) {
        best.ssr = lm.ssr;
        best.breakpoint = tb;
        best.slope = lm.params[0];
        best.amplitude = lm.params[1];
        best.tau = std::exp(lm.params[2]);
        best.omega = std::exp(lm.params[3]);
        best.phase = std::remainder(lm.params[4], 2.0 * M_PI);
        best.offset = lm.params[5];
        best.converged = lm.converged;
      }
    }
  }
  if (!std::isfinite(best.ssr)) {
    throw ConvergenceError("fit_two_regime: no candidate breakpoint produced a fit", INFINITY);
  }
  double mean = 0.0;
  for (double v : ys) mean += v;
  mean /= n;
  double tss = 0.0;
  for (double v : ys) tss += (v - mean) * (v - mean);
  best.r_squared = tss > 0.0 ? 1.0 - best.ssr / tss : 0.0;
  if (global_line.ssr <= best.ssr * (1.0 + 1e-9) ||
      global_line.ssr <= tss * 1e-12) {  // a plain line explains the data
    best.degenerate = true;
    best.breakpoint = t1;
  }
  return best;
}

// ---------------------------------------------------------------------------
// RCL lumped-circuit model
// ---------------------------------------------------------------------------

struct RclModel {
  double inductance = 1.0;   // kinetic (inertial) term
  double capacitance = 1.0;  // chemical-potential term
  double resistance = 0.0;
  double initial_imbalance = 1.0;

  void validate() const {
    if (!(inductance > 0.0 && capacitance > 0.0))
      throw InvalidArgumentError("rcl: L and C must be positive");
    if (resistance < 0.0) throw InvalidArgumentError("rcl: R must be >= 0");
    if (std::abs(initial_imbalance) > 1.0)
      throw InvalidArgumentError("rcl: initial imbalance must be within [-1, 1]");
  }

  double omega0() const { return 1.0 / std::sqrt(inductance * capacitance); }
  double gamma() const { return resistance / (2.0 * inductance); }
};

// Damped oscillator dN'' + (R/L) dN' + dN/(LC) = 0 with dN'(0) = 0, exact
// closed form on all three damping branches.
inline ImbalanceTrace rcl_trace(const RclModel& model, const std::vector<double>& t_samples) {
  model.validate();
  const double w0 = model.omega0();
  const double gam = model.gamma();
  const double dN0 = model.initial_imbalance;
  ImbalanceTrace out;
  out.samples.reserve(t_samples.size());
  const double disc = gam * gam - w0 * w0;
  for (double t : t_samples) {
    if (t < 0.0) throw InvalidArgumentError("rcl_trace: negative time");
    double v;
    if (std::abs(disc) < 1e-14 * w0 * w0) {
      v = dN0 * std::exp(-gam * t) * (1.0 + gam * t);
    } else if (disc < 0.0) {
      const double wd = std::sqrt(-disc);
      v = dN0 * std::exp(-gam * t) * (std::cos(wd * t) + gam / wd * std::sin(wd * t));
    } else {
      const double s = std::sqrt(disc);
      const double r1 = -gam + s, r2 = -gam - s;
      v = dN0 * (r2 * std::exp(r1 * t) - r1 * std::exp(r2 * t)) / (r2 - r1);
    }
    out.samples.push_back({t, v});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fringe-phase tracking
// ---------------------------------------------------------------------------

struct FringePhaseFit {
  double phase = 0.0;      // rad, in (-pi, pi]
  double amplitude = 0.0;  // A
  double background = 0.0; // B
  bool low_contrast = false;
};

// Linear least squares of the row-averaged profile against
// B + A cos(2 pi z / d + phi); z runs along the grid's y axis.
inline FringePhaseFit fringe_phase(const ScalarField& image, double fringe_spacing,
                                   double contrast_floor = 1e-3) {
  const Grid2D& g = image.grid();
  if (!(fringe_spacing > 0.0)) throw InvalidArgumentError("fringe_phase: spacing must be positive");
  if (g.ny * g.pitch < 3.0 * fringe_spacing) {
    throw InvalidArgumentError("fringe_phase: image must span >= 3 fringe periods");
  }
  std::vector<double> prof(g.ny, 0.0);
  for (int j = 0; j < g.ny; ++j) {
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i) s += image(i, j);
    prof[j] = s / g.nx;
  }
  // normal equations for [B, Ccos, Csin]
  double s11 = g.ny, s1c = 0, s1s = 0, scc = 0, sss = 0, scs = 0, b1 = 0, bc = 0, bs = 0;
  for (int j = 0; j < g.ny; ++j) {
    const double th = 2.0 * M_PI * g.y(j) / fringe_spacing;
    const double c = std::cos(th), s = std::sin(th);
    s1c += c;
    s1s += s;
    scc += c * c;
    sss += s * s;
    scs += c * s;
    b1 += prof[j];
    bc += prof[j] * c;
    bs += prof[j] * s;
  }
  std::vector<double> a = {s11, s1c, s1s, s1c, scc, scs, s1s, scs, sss};
  std::vector<double> rhs = {b1, bc, bs}, sol;
  if (!solve_dense(a, rhs, sol)) throw FitError("fringe_phase: singular normal equations");
  FringePhaseFit out;
  out.background = sol[0];
  const double C = sol[1], S = sol[2];
  out.amplitude = std::hypot(C, S);
  out.phase = std::atan2(-S, C);
  if (out.phase <= -M_PI) out.phase = M_PI;  // report in (-pi, pi]
  out.low_contrast = out.amplitude < contrast_floor * std::max(std::abs(out.background), 1e-300);
  return out;
}

struct PhaseDriftPoint {
  double t = 0.0;
  double phase_unwrapped = 0.0;
  bool ambiguous = false;  // consecutive jump too close to pi
};

// Per-image cosine phase, then nearest-branch 1D unwrapping.
inline std::vector<PhaseDriftPoint> phase_drift_series(
    const std::vector<std::pair<double, ScalarField>>& images, double fringe_spacing,
    double jump_flag_threshold = 3.0) {
  std::vector<PhaseDriftPoint> out;
  out.reserve(images.size());
  double prev_wrapped = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < images.size(); ++k) {
    const FringePhaseFit f = fringe_phase(images[k].second, fringe_spacing);
    if (k == 0) {
      acc = f.phase;
    } else {
      double d = std::remainder(f.phase - prev_wrapped, 2.0 * M_PI);
      acc += d;
      if (std::abs(d) >= jump_flag_threshold) {
        out.back().ambiguous = true;
        out.push_back({images[k].first, acc, true});
        prev_wrapped = f.phase;
        continue;
      }
    }
    prev_wrapped = f.phase;
    out.push_back({images[k].first, acc, false});
  }
  return out;
}

}  // namespace atomplane
