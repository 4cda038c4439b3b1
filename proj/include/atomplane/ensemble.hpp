#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "atomplane/constants.hpp"
#include "atomplane/errors.hpp"
#include "atomplane/grid.hpp"
#include "atomplane/parallel.hpp"
#include "atomplane/ramp.hpp"
#include "atomplane/rng.hpp"
#include "atomplane/stack.hpp"

namespace atomplane {

// Classical point-particle ensemble (structure-of-arrays).
struct AtomEnsemble {
  std::vector<double> x, y;    // m
  std::vector<double> vx, vy;  // m/s
  std::vector<std::uint8_t> alive;
  double mass = PhysicalConstants{}.mass_rb87();
  std::uint64_t seed = 0;

  std::size_t size() const { return x.size(); }
  std::size_t alive_count() const {
    std::size_t n = 0;
    for (auto a : alive) n += a;
    return n;
  }
};

// Gaussian cloud: per-axis position rms = source_radius, per-axis velocity
// variance kB T / m (2D Maxwell-Boltzmann). Bit-identical for a given seed.
inline AtomEnsemble sample_ensemble(std::size_t n, double temperature, double source_radius,
                                    std::uint64_t seed, double center_x = 0.0, double center_y = 0.0,
                                    const PhysicalConstants& pc = {}) {
  if (n < 1) throw InvalidArgumentError("sample_ensemble: need at least one atom");
  if (!(temperature >= 0.0)) throw InvalidArgumentError("sample_ensemble: temperature must be >= 0");
  if (!(source_radius >= 0.0)) throw InvalidArgumentError("sample_ensemble: radius must be >= 0");
  AtomEnsemble e;
  e.seed = seed;
  e.x.resize(n);
  e.y.resize(n);
  e.vx.resize(n);
  e.vy.resize(n);
  e.alive.assign(n, 1);
  Rng rng(seed);
  const double sv = std::sqrt(pc.k_boltzmann() * temperature / pc.mass_rb87());
  for (std::size_t i = 0; i < n; ++i) {
    e.x[i] = center_x + source_radius * rng.gaussian();
    e.y[i] = center_y + source_radius * rng.gaussian();
    e.vx[i] = sv * rng.gaussian();
    e.vy[i] = sv * rng.gaussian();
  }
  return e;
}

struct ClassicalParams {
  double dt = 10e-6;                              // s
  EnergyValue escape_threshold = kb_microkelvin(2.0);
  bool escape_enabled = true;
  double lifetime = 0.0;                          // s; 0 disables the loss channel
  int threads = 1;
};

// Velocity-Verlet propagation through a PotentialStack. Atoms whose total
// energy exceeds the escape threshold, whose pre-drawn lifetime expires, or
// which leave the grid are flagged dead and frozen.
class ClassicalEngine {
 public:
  ClassicalEngine(const PotentialStack& stack, ClassicalParams params,
                  const PhysicalConstants& pc = {})
      : stack_(stack), params_(params), pc_(pc) {
    if (!(params_.dt > 0.0)) throw ConfigError("classical engine: dt must be positive");
    const double fmax = stack_.max_curvature_frequency(BeamPowers{1.0, 1.0, 1.0}, pc.mass_rb87());
    if (fmax > 0.0 && params_.dt > 0.1 / fmax) {
      throw ConfigError("classical engine: dt exceeds 0.1/f_max for the composed potential");
    }
  }

  // Draws per-atom death times once so the loss channel is deterministic
  // under any threading.
  void arm_lifetime(AtomEnsemble& ens) {
    death_time_.assign(ens.size(), INFINITY);
    if (params_.lifetime > 0.0) {
      Rng rng(ens.seed ^ 0x9e3779b97f4a7c15ull);
      for (auto& dt : death_time_) dt = rng.exponential(params_.lifetime);
    }
  }

  double time() const { return t_; }

  void step(AtomEnsemble& ens, const BeamPowers& powers) {
    if (death_time_.size() != ens.size()) arm_lifetime(ens);
    const double dt = params_.dt;
    const double m = ens.mass;
    const double e_escape = to_joule(params_.escape_threshold, pc_);
    const Grid2D& g = stack_.grid();
    const double xmin = g.origin_x, xmax = g.origin_x + (g.nx - 1) * g.pitch;
    const double ymin = g.origin_y, ymax = g.origin_y + (g.ny - 1) * g.pitch;
    const double t_next = t_ + dt;
    parallel_for(ens.size(), params_.threads, [&](std::size_t i) {
      if (!ens.alive[i]) return;
      if (t_next >= death_time_[i]) {
        ens.alive[i] = 0;
        return;
      }
      double x = ens.x[i], y = ens.y[i];
      auto [fx0, fy0] = stack_.force_at(powers, x, y);
      const double ax0 = fx0 / m, ay0 = fy0 / m;
      x += ens.vx[i] * dt + 0.5 * ax0 * dt * dt;
      y += ens.vy[i] * dt + 0.5 * ay0 * dt * dt;
      if (x < xmin || x > xmax || y < ymin || y > ymax) {
        ens.alive[i] = 0;
        ens.x[i] = x;
        ens.y[i] = y;
        return;
      }
      auto [fx1, fy1] = stack_.force_at(powers, x, y);
      const double vx = ens.vx[i] + 0.5 * (ax0 + fx1 / m) * dt;
      const double vy = ens.vy[i] + 0.5 * (ay0 + fy1 / m) * dt;
      ens.x[i] = x;
      ens.y[i] = y;
      ens.vx[i] = vx;
      ens.vy[i] = vy;
      if (params_.escape_enabled) {
        const double energy = 0.5 * m * (vx * vx + vy * vy) + stack_.value_at(powers, x, y);
        if (energy > e_escape) ens.alive[i] = 0;
      }
    });
    t_ = t_next;
  }

 private:
  const PotentialStack& stack_;
  ClassicalParams params_;
  PhysicalConstants pc_;
  std::vector<double> death_time_;
  double t_ = 0.0;
};

// 2D histogram of alive atoms; each atom lands in its nearest cell. Total
// mass equals the number of alive in-bounds atoms.
inline ScalarField density_histogram(const AtomEnsemble& ens, const Grid2D& grid) {
  ScalarField out(grid);
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (!ens.alive[i]) continue;
    const auto idx = grid.world_to_index(ens.x[i], ens.y[i]);
    if (idx) out(idx->first, idx->second) += 1.0;
  }
  return out;
}

}  // namespace atomplane
