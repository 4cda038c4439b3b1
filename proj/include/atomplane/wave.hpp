#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "atomplane/constants.hpp"
#include "atomplane/errors.hpp"
#include "atomplane/fft.hpp"
#include "atomplane/grid.hpp"
#include "atomplane/parallel.hpp"
#include "atomplane/ramp.hpp"
#include "atomplane/rng.hpp"
#include "atomplane/stack.hpp"

namespace atomplane {

inline double thermal_de_broglie(double temperature, const PhysicalConstants& pc = {}) {
  if (!(temperature > 0.0)) throw InvalidArgumentError("de Broglie: temperature must be positive");
  return pc.planck_h() / std::sqrt(2.0 * M_PI * pc.mass_rb87() * pc.k_boltzmann() * temperature);
}

// Matter-wave state on a grid. |amp|^2 is areal density (1/m^2); the norm
// sum |amp|^2 pitch^2 is 1 for a normalized state. With interactions the
// coupling g absorbs the atom number (g = g_2D * N for a unit-normalized
// state).
struct Wavefunction {
  Grid2D grid;
  ComplexVec amp;
  double interaction_g = 0.0;  // J m^2

  Wavefunction() = default;
  explicit Wavefunction(const Grid2D& g) : grid(g), amp(g.size(), {0.0, 0.0}) {}

  double norm() const {
    double s = 0.0;
    for (const auto& a : amp) s += std::norm(a);
    return s * grid.pitch * grid.pitch;
  }

  void normalize() {
    const double n = norm();
    if (!(n > 0.0)) throw InvalidArgumentError("wavefunction: cannot normalize zero state");
    const double scale = 1.0 / std::sqrt(n);
    for (auto& a : amp) a *= scale;
  }
};

// Enforces the sampling invariant for a thermal momentum scale.
inline void check_wave_sampling(const Grid2D& grid, double temperature,
                                const PhysicalConstants& pc = {}) {
  const double lam = thermal_de_broglie(temperature, pc);
  if (grid.pitch > lam / 8.0 * (1.0 + 1e-12)) {
    throw SamplingError("wave grid pitch must be <= lambda_dB/8 for the configured temperature");
  }
}

// Normalized gaussian packet, per-axis position rms sigma, optional boost.
inline Wavefunction gaussian_packet(const Grid2D& grid, double cx, double cy, double sigma,
                                    double kx = 0.0, double ky = 0.0) {
  if (!(sigma > 0.0)) throw InvalidArgumentError("gaussian_packet: sigma must be positive");
  if (sigma < 2.0 * grid.pitch) throw SamplingError("gaussian_packet: sigma under-resolved");
  Wavefunction psi(grid);
  for (int j = 0; j < grid.ny; ++j) {
    const double dy = grid.y(j) - cy;
    for (int i = 0; i < grid.nx; ++i) {
      const double dx = grid.x(i) - cx;
      const double envelope = std::exp(-(dx * dx + dy * dy) / (4.0 * sigma * sigma));
      const double phase = kx * grid.x(i) + ky * grid.y(j);
      psi.amp[static_cast<std::size_t>(j) * grid.nx + i] =
          envelope * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  psi.normalize();
  return psi;
}

// Thermal matter-wave source: Maxwell-Boltzmann momentum spectrum at T with
// seeded random phases, under a gaussian density envelope of per-axis rms
// sigma. Expands like an 8 nK cloud while staying a single wavefunction.
inline Wavefunction thermal_speckle_source(const Grid2D& grid, double cx, double cy, double sigma,
                                           double temperature, std::uint64_t seed,
                                           const PhysicalConstants& pc = {}) {
  check_wave_sampling(grid, temperature, pc);
  if (!(sigma > 0.0)) throw InvalidArgumentError("thermal source: sigma must be positive");
  Wavefunction psi(grid);
  Fft2d fft(grid.nx, grid.ny);
  Rng rng(seed);
  // |psi_k|^2 ~ exp(-hbar^2 k^2 / (2 m kB T))
  const double kscale = pc.hbar() * pc.hbar() / (4.0 * pc.mass_rb87() * pc.k_boltzmann() * temperature);
  const double dkx = 2.0 * M_PI / (grid.nx * grid.pitch);
  const double dky = 2.0 * M_PI / (grid.ny * grid.pitch);
  for (int j = 0; j < grid.ny; ++j) {
    const int fj = j <= grid.ny / 2 ? j : j - grid.ny;
    const double ky = fj * dky;
    for (int i = 0; i < grid.nx; ++i) {
      const int fi = i <= grid.nx / 2 ? i : i - grid.nx;
      const double kx = fi * dkx;
      const double mag = std::exp(-kscale * (kx * kx + ky * ky));
      const double th = rng.uniform(0.0, 2.0 * M_PI);
      psi.amp[static_cast<std::size_t>(j) * grid.nx + i] =
          mag * std::complex<double>(std::cos(th), std::sin(th));
    }
  }
  fft.inverse(psi.amp.data(), 1);
  for (int j = 0; j < grid.ny; ++j) {
    const double dy = grid.y(j) - cy;
    for (int i = 0; i < grid.nx; ++i) {
      const double dx = grid.x(i) - cx;
      psi.amp[static_cast<std::size_t>(j) * grid.nx + i] *=
          std::exp(-(dx * dx + dy * dy) / (4.0 * sigma * sigma));
    }
  }
  psi.normalize();
  return psi;
}

struct WaveParams {
  double dt = 5e-6;                 // s
  int threads = 1;
  bool absorber = false;            // cos^2 amplitude mask on the outer border
  double absorber_fraction = 0.08;  // of each axis (split between the two sides)
};

// Strang-split spectral propagator: V(dt/2) K(dt) V(dt/2) per step, optional
// nonlinear term folded into the potential half-steps, optional absorbing
// mask applied after each step.
class WaveEngine {
 public:
  WaveEngine(const Grid2D& grid, WaveParams params, const PhysicalConstants& pc = {})
      : grid_(grid), params_(params), pc_(pc), fft_(grid.nx, grid.ny) {
    if (!(params_.dt != 0.0)) throw ConfigError("wave engine: dt must be nonzero");
    build_kinetic_phase(params_.dt);
    if (params_.absorber) build_absorber();
  }

  const Grid2D& grid() const { return grid_; }
  double dt() const { return params_.dt; }

  // CFL-like guard: potential phase per step must stay small.
  void check_cfl(const PotentialStack& stack, const BeamPowers& powers) const {
    const double umax = stack.max_abs_potential(powers);
    if (std::abs(params_.dt) * umax / pc_.hbar() > 0.1 + 1e-12) {
      throw ConfigError("wave engine: dt * max|U| / hbar exceeds 0.1 rad per step");
    }
  }

  void evolve(Wavefunction& psi, const PotentialStack& stack, const BeamPowers& powers,
              int steps) {
    if (!psi.grid.same_geometry(grid_)) throw InvalidArgumentError("wave engine: grid mismatch");
    check_cfl(stack, powers);
    ensure_potential_phase(stack, powers, psi.interaction_g != 0.0);
    for (int s = 0; s < steps; ++s) {
      apply_potential_half(psi);
      fft_.forward(psi.amp.data(), params_.threads);
      apply_kinetic(psi);
      fft_.inverse(psi.amp.data(), params_.threads);
      apply_scale(psi, fft_.normalization());
      apply_potential_half(psi);
      if (params_.absorber) apply_absorber(psi);
    }
  }

  // Kinetic + potential + interaction energy (J).
  double energy(const Wavefunction& psi, const PotentialStack& stack,
                const BeamPowers& powers) const {
    const double cell = grid_.pitch * grid_.pitch;
    double pot = 0.0, inter = 0.0;
    for (int j = 0; j < grid_.ny; ++j) {
      for (int i = 0; i < grid_.nx; ++i) {
        const double dens = std::norm(psi.amp[static_cast<std::size_t>(j) * grid_.nx + i]);
        pot += stack.cell_value(powers, i, j) * dens;
        inter += 0.5 * psi.interaction_g * dens * dens;
      }
    }
    pot *= cell;
    inter *= cell;
    ComplexVec k = psi.amp;
    const_cast<Fft2d&>(fft_).forward(k.data(), params_.threads);
    double kin = 0.0;
    const double pref = pc_.hbar() * pc_.hbar() / (2.0 * pc_.mass_rb87());
    const double dkx = 2.0 * M_PI / (grid_.nx * grid_.pitch);
    const double dky = 2.0 * M_PI / (grid_.ny * grid_.pitch);
    double ksum = 0.0;
    for (int j = 0; j < grid_.ny; ++j) {
      const int fj = j <= grid_.ny / 2 ? j : j - grid_.ny;
      const double ky = fj * dky;
      for (int i = 0; i < grid_.nx; ++i) {
        const int fi = i <= grid_.nx / 2 ? i : i - grid_.nx;
        const double kx = fi * dkx;
        const double w = std::norm(k[static_cast<std::size_t>(j) * grid_.nx + i]);
        kin += pref * (kx * kx + ky * ky) * w;
        ksum += w;
      }
    }
    const double n = psi.norm();
    kin = ksum > 0.0 ? kin / ksum * n : 0.0;  // Parseval-normalized per unit norm
    return (kin + pot + inter) / (n > 0.0 ? n : 1.0);
  }

  // Imaginary-time relaxation to the lowest-energy state. Converged when the
  // per-step relative energy change drops below tol; throws ConvergenceError
  // with the final residual otherwise.
  Wavefunction ground_state(const ScalarField& potential, double g, double tau,
                            double tol = 1e-10, int max_steps = 20000,
                            const Wavefunction* initial = nullptr) {
    if (!potential.grid().same_geometry(grid_)) {
      throw InvalidArgumentError("ground_state: potential grid mismatch");
    }
    if (!(tau > 0.0)) throw InvalidArgumentError("ground_state: tau must be positive");
    PotentialStack stack(grid_);
    stack.set_pattern(potential);
    const BeamPowers powers{0.0, 0.0, 1.0};

    Wavefunction psi = initial ? *initial : uniform_seed();
    psi.interaction_g = g;
    psi.normalize();

    build_imag_kinetic(tau);
    std::vector<double> upot(grid_.size());
    for (int j = 0; j < grid_.ny; ++j)
      for (int i = 0; i < grid_.nx; ++i) upot[static_cast<std::size_t>(j) * grid_.nx + i] =
          potential(i, j);

    const int check_every = 10;
    double e_prev = energy(psi, stack, powers);
    double residual = INFINITY;
    for (int s = 1; s <= max_steps; ++s) {
      imag_step(psi, upot, g, tau);
      if (s % check_every == 0) {
        const double e = energy(psi, stack, powers);
        residual = std::abs(e - e_prev) / std::max(std::abs(e), 1e-300) / check_every;
        e_prev = e;
        if (residual < tol) return psi;
      }
    }
    throw ConvergenceError("ground_state: imaginary-time relaxation did not converge", residual);
  }

 private:
  Wavefunction uniform_seed() const {
    Wavefunction psi(grid_);
    // deterministic symmetric seed with a slight center bias
    for (int j = 0; j < grid_.ny; ++j) {
      const double y = grid_.y(j);
      for (int i = 0; i < grid_.nx; ++i) {
        const double x = grid_.x(i);
        const double r2 = x * x + y * y;
        psi.amp[static_cast<std::size_t>(j) * grid_.nx + i] =
            1.0 + 0.1 * std::exp(-r2 / (0.05 * (grid_.width() * grid_.width() +
                                                grid_.height() * grid_.height())));
      }
    }
    return psi;
  }

  void build_kinetic_phase(double dt) {
    kinetic_phase_.resize(grid_.size());
    const double pref = pc_.hbar() / (2.0 * pc_.mass_rb87()) * dt;
    const double dkx = 2.0 * M_PI / (grid_.nx * grid_.pitch);
    const double dky = 2.0 * M_PI / (grid_.ny * grid_.pitch);
    for (int j = 0; j < grid_.ny; ++j) {
      const int fj = j <= grid_.ny / 2 ? j : j - grid_.ny;
      const double ky = fj * dky;
      for (int i = 0; i < grid_.nx; ++i) {
        const int fi = i <= grid_.nx / 2 ? i : i - grid_.nx;
        const double kx = fi * dkx;
        const double ph = -pref * (kx * kx + ky * ky);
        kinetic_phase_[static_cast<std::size_t>(j) * grid_.nx + i] = {std::cos(ph), std::sin(ph)};
      }
    }
  }

  void build_imag_kinetic(double tau) {
    imag_kinetic_.resize(grid_.size());
    const double pref = pc_.hbar() / (2.0 * pc_.mass_rb87()) * tau;
    const double dkx = 2.0 * M_PI / (grid_.nx * grid_.pitch);
    const double dky = 2.0 * M_PI / (grid_.ny * grid_.pitch);
    for (int j = 0; j < grid_.ny; ++j) {
      const int fj = j <= grid_.ny / 2 ? j : j - grid_.ny;
      const double ky = fj * dky;
      for (int i = 0; i < grid_.nx; ++i) {
        const int fi = i <= grid_.nx / 2 ? i : i - grid_.nx;
        const double kx = fi * dkx;
        imag_kinetic_[static_cast<std::size_t>(j) * grid_.nx + i] =
            std::exp(-pref * (kx * kx + ky * ky));
      }
    }
  }

  void build_absorber() {
    absorber_.resize(grid_.size(), 1.0);
    const double bx = 0.5 * params_.absorber_fraction * grid_.nx;
    const double by = 0.5 * params_.absorber_fraction * grid_.ny;
    for (int j = 0; j < grid_.ny; ++j) {
      for (int i = 0; i < grid_.nx; ++i) {
        double m = 1.0;
        const double ex = std::min(i + 0.5, grid_.nx - 0.5 - i);  // cells from nearer x edge
        const double ey = std::min(j + 0.5, grid_.ny - 0.5 - j);
        if (ex < bx) {
          const double s = 1.0 - ex / bx;
          const double c = std::cos(0.5 * M_PI * s);
          m *= c * c;
        }
        if (ey < by) {
          const double s = 1.0 - ey / by;
          const double c = std::cos(0.5 * M_PI * s);
          m *= c * c;
        }
        absorber_[static_cast<std::size_t>(j) * grid_.nx + i] = m;
      }
    }
  }

  void ensure_potential_phase(const PotentialStack& stack, const BeamPowers& powers,
                              bool nonlinear) {
    if (nonlinear != nonlinear_) phase_valid_ = false;
    nonlinear_ = nonlinear;
    if (nonlinear_) {
      // cache the linear part only; the g|psi|^2 term changes every step
      if (!phase_valid_ || !(powers == cached_powers_)) {
        linear_potential_.resize(grid_.size());
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i)
            linear_potential_[static_cast<std::size_t>(j) * grid_.nx + i] =
                stack.cell_value(powers, i, j);
        cached_powers_ = powers;
        phase_valid_ = true;
      }
      return;
    }
    if (phase_valid_ && powers == cached_powers_ && !potential_phase_.empty()) return;
    potential_phase_.resize(grid_.size());
    const double pref = -0.5 * params_.dt / pc_.hbar();
    parallel_for(static_cast<std::size_t>(grid_.ny), params_.threads, [&](std::size_t j) {
      for (int i = 0; i < grid_.nx; ++i) {
        const double ph = pref * stack.cell_value(powers, i, static_cast<int>(j));
        potential_phase_[j * grid_.nx + i] = {std::cos(ph), std::sin(ph)};
      }
    });
    cached_powers_ = powers;
    phase_valid_ = true;
  }

  void apply_potential_half(Wavefunction& psi) {
    if (!nonlinear_) {
      parallel_for(psi.amp.size(), params_.threads,
                   [&](std::size_t i) { psi.amp[i] *= potential_phase_[i]; });
      return;
    }
    const double pref = -0.5 * params_.dt / pc_.hbar();
    const double g = psi.interaction_g;
    parallel_for(psi.amp.size(), params_.threads, [&](std::size_t i) {
      const double ph = pref * (linear_potential_[i] + g * std::norm(psi.amp[i]));
      psi.amp[i] *= std::complex<double>(std::cos(ph), std::sin(ph));
    });
  }

  void apply_kinetic(Wavefunction& psi) {
    parallel_for(psi.amp.size(), params_.threads,
                 [&](std::size_t i) { psi.amp[i] *= kinetic_phase_[i]; });
  }

  void apply_scale(Wavefunction& psi, double s) {
    parallel_for(psi.amp.size(), params_.threads, [&](std::size_t i) { psi.amp[i] *= s; });
  }

  void apply_absorber(Wavefunction& psi) {
    parallel_for(psi.amp.size(), params_.threads,
                 [&](std::size_t i) { psi.amp[i] *= absorber_[i]; });
  }

  void imag_step(Wavefunction& psi, const std::vector<double>& upot, double g, double tau) {
    const double pref = -0.5 * tau / pc_.hbar();
    auto half_v = [&] {
      parallel_for(psi.amp.size(), params_.threads, [&](std::size_t i) {
        const double w = std::exp(pref * (upot[i] + g * std::norm(psi.amp[i])));
        psi.amp[i] *= w;
      });
    };
    half_v();
    fft_.forward(psi.amp.data(), params_.threads);
    parallel_for(psi.amp.size(), params_.threads,
                 [&](std::size_t i) { psi.amp[i] *= imag_kinetic_[i]; });
    fft_.inverse(psi.amp.data(), params_.threads);
    apply_scale(psi, fft_.normalization());
    half_v();
    psi.normalize();
  }

  Grid2D grid_;
  WaveParams params_;
  PhysicalConstants pc_;
  Fft2d fft_;
  ComplexVec kinetic_phase_;
  std::vector<std::complex<double>> potential_phase_;
  std::vector<double> imag_kinetic_;
  std::vector<double> linear_potential_;
  std::vector<double> absorber_;
  BeamPowers cached_powers_{-1.0, -1.0, -1.0};
  bool phase_valid_ = false;
  bool nonlinear_ = false;
};

// |psi|^2 * pitch^2 per cell; sums to the norm.
inline ScalarField wave_density(const Wavefunction& psi) {
  ScalarField out(psi.grid);
  const double cell = psi.grid.pitch * psi.grid.pitch;
  for (std::size_t i = 0; i < psi.amp.size(); ++i) out.raw()[i] = std::norm(psi.amp[i]) * cell;
  return out;
}

}  // namespace atomplane
