#pragma once

#include <cmath>
#include <vector>

#include "atomplane/errors.hpp"

namespace atomplane {

// Monotone cubic Hermite interpolant (Fritsch-Butland harmonic-mean slopes,
// three-point end slopes clamped to preserve shape). No overshoot between
// monotone samples.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw InvalidArgumentError("MonotoneCubic: need >= 2 samples");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) throw InvalidArgumentError("MonotoneCubic: x must be strictly increasing");
    }
    d_.assign(n, 0.0);
    if (n == 2) {
      d_[0] = d_[1] = slope(0);
      return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double dl = slope(k - 1), dr = slope(k);
      if (dl * dr <= 0.0) {
        d_[k] = 0.0;
      } else {
        const double hl = x_[k] - x_[k - 1], hr = x_[k + 1] - x_[k];
        const double w1 = 2.0 * hr + hl, w2 = hr + 2.0 * hl;
        d_[k] = (w1 + w2) / (w1 / dl + w2 / dr);
      }
    }
    d_[0] = edge_slope(x_[1] - x_[0], x_[2] - x_[1], slope(0), slope(1));
    d_[n - 1] = edge_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3],
                           slope(n - 2), slope(n - 3));
  }

  double operator()(double xq) const {
    const std::size_t n = x_.size();
    if (xq <= x_.front()) return y_.front() + d_.front() * (xq - x_.front());
    if (xq >= x_.back()) return y_.back() + d_.back() * (xq - x_.back());
    std::size_t lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= xq ? lo : hi) = mid;
    }
    const double h = x_[lo + 1] - x_[lo];
    const double t = (xq - x_[lo]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * y_[lo] + h10 * h * d_[lo] + h01 * y_[lo + 1] + h11 * h * d_[lo + 1];
  }

 private:
  double slope(std::size_t k) const { return (y_[k + 1] - y_[k]) / (x_[k + 1] - x_[k]); }

  static double edge_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return d;
  }

  std::vector<double> x_, y_, d_;
};

inline double lerp_clamped(const std::vector<double>& x, const std::vector<double>& y, double xq) {
  if (xq <= x.front()) return y.front();
  if (xq >= x.back()) return y.back();
  std::size_t lo = 0, hi = x.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (x[mid] <= xq ? lo : hi) = mid;
  }
  const double t = (xq - x[lo]) / (x[lo + 1] - x[lo]);
  return y[lo] + t * (y[lo + 1] - y[lo]);
}

}  // namespace atomplane
