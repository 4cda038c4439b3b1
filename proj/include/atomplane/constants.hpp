#pragma once

#include <cmath>
#include <string>

#include "atomplane/errors.hpp"

namespace atomplane {

// Apparatus-wide physical constants. SI units internally everywhere; µK/nK
// and Hz appear only at interfaces.
class PhysicalConstants {
 public:
  PhysicalConstants() = default;

  PhysicalConstants(double k_boltzmann, double hbar, double planck_h, double mass_rb87,
                    double g_gravity, double lambda_pattern, double lambda_trap)
      : k_boltzmann_(k_boltzmann),
        hbar_(hbar),
        planck_h_(planck_h),
        mass_rb87_(mass_rb87),
        g_gravity_(g_gravity),
        lambda_pattern_(lambda_pattern),
        lambda_trap_(lambda_trap) {
    for (double v : {k_boltzmann, hbar, planck_h, mass_rb87, g_gravity, lambda_pattern, lambda_trap}) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidArgumentError("physical constants must be finite and strictly positive");
      }
    }
  }

  double k_boltzmann() const { return k_boltzmann_; }    // J/K
  double hbar() const { return hbar_; }                  // J s
  double planck_h() const { return planck_h_; }          // J s
  double mass_rb87() const { return mass_rb87_; }        // kg
  double g_gravity() const { return g_gravity_; }        // m/s^2
  double lambda_pattern() const { return lambda_pattern_; }  // 532 nm, repulsive
  double lambda_trap() const { return lambda_trap_; }        // 1064 nm, planar trap

 private:
  double k_boltzmann_ = 1.380649e-23;
  double hbar_ = 1.054571817e-34;
  double planck_h_ = 6.62607015e-34;
  double mass_rb87_ = 1.44316e-25;
  double g_gravity_ = 9.80665;
  double lambda_pattern_ = 532e-9;
  double lambda_trap_ = 1064e-9;
};

enum class EnergyUnit { joule, kb_nanokelvin, hertz_times_h };

inline std::string to_string(EnergyUnit u) {
  switch (u) {
    case EnergyUnit::joule: return "joule";
    case EnergyUnit::kb_nanokelvin: return "kB_nK";
    case EnergyUnit::hertz_times_h: return "Hz_h";
  }
  throw InvalidArgumentError("unknown energy unit");
}

inline EnergyUnit parse_energy_unit(const std::string& s) {
  if (s == "joule" || s == "J") return EnergyUnit::joule;
  if (s == "kB_nK" || s == "kb_nanokelvin") return EnergyUnit::kb_nanokelvin;
  if (s == "Hz_h" || s == "hertz_times_h") return EnergyUnit::hertz_times_h;
  throw InvalidArgumentError("unknown energy unit: " + s);
}

struct EnergyValue {
  double value = 0.0;
  EnergyUnit unit = EnergyUnit::joule;
};

inline EnergyValue joules(double v) { return {v, EnergyUnit::joule}; }
inline EnergyValue kb_nanokelvin(double v) { return {v, EnergyUnit::kb_nanokelvin}; }
inline EnergyValue kb_microkelvin(double v) { return {v * 1e3, EnergyUnit::kb_nanokelvin}; }
inline EnergyValue hertz_times_h(double v) { return {v, EnergyUnit::hertz_times_h}; }

inline double to_joule(const EnergyValue& e, const PhysicalConstants& pc = {}) {
  switch (e.unit) {
    case EnergyUnit::joule: return e.value;
    case EnergyUnit::kb_nanokelvin: return e.value * 1e-9 * pc.k_boltzmann();
    case EnergyUnit::hertz_times_h: return e.value * pc.planck_h();
  }
  throw InvalidArgumentError("unknown energy unit");
}

inline EnergyValue convert_energy(const EnergyValue& e, EnergyUnit target,
                                  const PhysicalConstants& pc = {}) {
  const double j = to_joule(e, pc);
  switch (target) {
    case EnergyUnit::joule: return {j, target};
    case EnergyUnit::kb_nanokelvin: return {j / (1e-9 * pc.k_boltzmann()), target};
    case EnergyUnit::hertz_times_h: return {j / pc.planck_h(), target};
  }
  throw InvalidArgumentError("unknown energy unit");
}

}  // namespace atomplane
