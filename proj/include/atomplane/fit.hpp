#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "atomplane/errors.hpp"

namespace atomplane {

// Gaussian elimination with partial pivoting; a is n x n row-major, b length
// n. Returns false when singular.
inline bool solve_dense(std::vector<double> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    }
    if (std::abs(a[piv * n + col]) < 1e-300) return false;
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / d;
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
    x[ri] = s / a[ri * n + ri];
  }
  return true;
}

struct LmOptions {
  int max_iterations = 200;
  double tolerance = 1e-12;     // relative SSR improvement
  double lambda0 = 1e-3;
  double jacobian_step = 1e-7;  // relative central-difference step
};

struct LmResult {
  std::vector<double> params;
  double ssr = INFINITY;
  int iterations = 0;
  bool converged = false;
  std::vector<double> covariance_diag;  // s^2 (J^T J)^-1 diagonal
};

// Residual function fills r(p); jacobian is numeric central differences.
using ResidualFn = std::function<void(const std::vector<double>&, std::vector<double>&)>;

inline double ssr_of(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

inline LmResult levenberg_marquardt(const ResidualFn& fn, std::vector<double> p,
                                    std::size_t n_residuals, LmOptions opt = {}) {
  const std::size_t np = p.size();
  LmResult res;
  std::vector<double> r(n_residuals), r_try(n_residuals);
  fn(p, r);
  double ssr = ssr_of(r);
  double lambda = opt.lambda0;
  std::vector<double> jac(n_residuals * np);
  std::vector<double> jtj(np * np), jtr(np), delta(np), p_try(np);

  auto numeric_jacobian = [&](const std::vector<double>& at) {
    std::vector<double> rp(n_residuals), rm(n_residuals), q(at);
    for (std::size_t k = 0; k < np; ++k) {
      const double h = opt.jacobian_step * std::max(1.0, std::abs(at[k]));
      q[k] = at[k] + h;
      fn(q, rp);
      q[k] = at[k] - h;
      fn(q, rm);
      q[k] = at[k];
      const double inv2h = 1.0 / (2.0 * h);
      for (std::size_t i = 0; i < n_residuals; ++i) jac[i * np + k] = (rp[i] - rm[i]) * inv2h;
    }
  };

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    numeric_jacobian(p);
    for (std::size_t a = 0; a < np; ++a) {
      jtr[a] = 0.0;
      for (std::size_t b = a; b < np; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n_residuals; ++i) s += jac[i * np + a] * jac[i * np + b];
        jtj[a * np + b] = s;
        jtj[b * np + a] = s;
      }
      double s = 0.0;
      for (std::size_t i = 0; i < n_residuals; ++i) s += jac[i * np + a] * r[i];
      jtr[a] = -s;
    }
    bool improved = false;
    for (int damp = 0; damp < 12; ++damp) {
      std::vector<double> aug = jtj;
      for (std::size_t a = 0; a < np; ++a) aug[a * np + a] += lambda * std::max(jtj[a * np + a], 1e-300);
      if (!solve_dense(aug, jtr, delta)) {
        lambda *= 10.0;
        continue;
      }
      for (std::size_t a = 0; a < np; ++a) p_try[a] = p[a] + delta[a];
      fn(p_try, r_try);
      const double ssr_try = ssr_of(r_try);
      if (std::isfinite(ssr_try) && ssr_try < ssr) {
        const double rel = (ssr - ssr_try) / std::max(ssr, 1e-300);
        p = p_try;
        r = r_try;
        ssr = ssr_try;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (rel < opt.tolerance) {
          res.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) {
      res.converged = std::isfinite(ssr);  // stalled at a stationary point
      break;
    }
    if (res.converged) break;
  }

  res.params = p;
  res.ssr = ssr;
  res.iterations = it;
  // covariance: s^2 (J^T J)^-1
  numeric_jacobian(p);
  for (std::size_t a = 0; a < np; ++a) {
    for (std::size_t b = a; b < np; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < n_residuals; ++i) s += jac[i * np + a] * jac[i * np + b];
      jtj[a * np + b] = s;
      jtj[b * np + a] = s;
    }
  }
  res.covariance_diag.assign(np, 0.0);
  const double dof = static_cast<double>(n_residuals > np ? n_residuals - np : 1);
  const double s2 = ssr / dof;
  std::vector<double> e(np, 0.0), col(np);
  for (std::size_t k = 0; k < np; ++k) {
    e.assign(np, 0.0);
    e[k] = 1.0;
    if (solve_dense(jtj, e, col)) res.covariance_diag[k] = std::max(0.0, col[k] * s2);
  }
  return res;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
  double ssr = 0.0;
};

// Weighted least-squares line y = a + b x; weights default to 1.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                        const std::vector<double>& w = {}) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw InvalidArgumentError("fit_line: need >= 2 points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
    sxx += wi * x[i] * x[i];
    sxy += wi * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) < 1e-300) throw FitError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ssr += wi * r * r;
  }
  f.ssr = ssr;
  const double s2 = n > 2 ? ssr / (n - 2) : 0.0;
  const double scale = w.empty() ? s2 : 1.0;  // with real weights, errors from the weight matrix
  f.slope_err = std::sqrt(std::max(0.0, scale * sw / det));
  f.intercept_err = std::sqrt(std::max(0.0, scale * sxx / det));
  return f;
}

}  // namespace atomplane
