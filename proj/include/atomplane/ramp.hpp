#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "atomplane/errors.hpp"

namespace atomplane {

struct BeamPowers {
  double co2 = 0.0;
  double planar = 0.0;
  double pattern = 0.0;

  bool operator==(const BeamPowers&) const = default;
};

struct RampSegment {
  double t_start = 0.0;
  double t_end = 0.0;
  double p_start = 0.0;
  double p_end = 0.0;
};

// Piecewise-linear relative-power schedules for the three beams. Before the
// first segment the first value holds; past the last segment the final value
// holds.
struct RampSchedule {
  std::vector<RampSegment> co2;
  std::vector<RampSegment> planar;
  std::vector<RampSegment> pattern;

  static void validate_track(const std::vector<RampSegment>& track, const std::string& name) {
    for (std::size_t i = 0; i < track.size(); ++i) {
      const RampSegment& s = track[i];
      if (!(s.t_end > s.t_start)) throw InvalidArgumentError("ramp " + name + ": segment times must increase");
      if (s.p_start < 0.0 || s.p_start > 1.0 || s.p_end < 0.0 || s.p_end > 1.0)
        throw InvalidArgumentError("ramp " + name + ": powers must be in [0,1]");
      if (i > 0) {
        if (std::abs(s.t_start - track[i - 1].t_end) > 1e-12)
          throw InvalidArgumentError("ramp " + name + ": segments must be contiguous");
        if (std::abs(s.p_start - track[i - 1].p_end) > 1e-12)
          throw InvalidArgumentError("ramp " + name + ": power must be continuous across segments");
      }
    }
  }

  void validate() const {
    validate_track(co2, "co2");
    validate_track(planar, "planar_1064");
    validate_track(pattern, "pattern_532");
  }

  static double track_at(const std::vector<RampSegment>& track, double t) {
    if (track.empty()) return 0.0;
    if (t <= track.front().t_start) return track.front().p_start;
    if (t >= track.back().t_end) return track.back().p_end;
    for (const RampSegment& s : track) {
      if (t <= s.t_end) {
        const double u = (t - s.t_start) / (s.t_end - s.t_start);
        return s.p_start + u * (s.p_end - s.p_start);
      }
    }
    return track.back().p_end;
  }

  BeamPowers at(double t) const {
    if (t < 0.0) throw InvalidArgumentError("ramp: time must be >= 0");
    return {track_at(co2, t), track_at(planar, t), track_at(pattern, t)};
  }

  double end_time() const {
    double e = 0.0;
    for (const auto* tr : {&co2, &planar, &pattern}) {
      if (!tr->empty()) e = std::max(e, tr->back().t_end);
    }
    return e;
  }

  // Loading sequence: 1064 nm up / CO2 down to 20% over 1000 ms, 100 ms
  // equilibration hold, then CO2 off and the 532 nm pattern up in 20 ms.
  static RampSchedule paper_loading(double pattern_final = 1.0) {
    if (pattern_final < 0.0 || pattern_final > 1.0)
      throw InvalidArgumentError("ramp: pattern power must be in [0,1]");
    RampSchedule r;
    r.co2 = {{0.0, 1.0, 1.0, 0.2}, {1.0, 1.1, 0.2, 0.2}, {1.1, 1.12, 0.2, 0.0}};
    r.planar = {{0.0, 1.0, 0.0, 1.0}, {1.0, 1.12, 1.0, 1.0}};
    r.pattern = {{0.0, 1.1, 0.0, 0.0}, {1.1, 1.12, 0.0, pattern_final}};
    return r;
  }

  // Post-release steady state (atoms already in the 2D trap).
  static RampSchedule released(double pattern_power = 1.0) {
    RampSchedule r;
    r.co2 = {{0.0, 1e-9, 0.0, 0.0}};
    r.planar = {{0.0, 1e-9, 1.0, 1.0}};
    r.pattern = {{0.0, 1e-9, pattern_power, pattern_power}};
    return r;
  }

  static double release_time() { return 1.12; }
};

inline BeamPowers apply_ramp(const RampSchedule& sched, double t) { return sched.at(t); }

}  // namespace atomplane
