#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "atomplane/analysis.hpp"
#include "atomplane/csvio.hpp"
#include "atomplane/ensemble.hpp"
#include "atomplane/geometry.hpp"
#include "atomplane/optics.hpp"
#include "atomplane/pgm.hpp"
#include "atomplane/ramp.hpp"
#include "atomplane/slm.hpp"
#include "atomplane/stack.hpp"
#include "atomplane/trap.hpp"
#include "atomplane/version.hpp"
#include "atomplane/wave.hpp"

namespace atomplane {

using json = nlohmann::json;

struct ValidationIssue {
  std::string path;
  std::string message;
};

struct ValidationResult {
  json normalized;
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class Validator {
 public:
  explicit Validator(std::vector<ValidationIssue>& issues) : issues_(issues) {}

  void fail(const std::string& path, const std::string& msg) { issues_.push_back({path, msg}); }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) return;
    for (const auto& [k, v] : obj.items()) {
      if (!allowed.count(k)) fail(path + "." + k, "unknown key");
    }
  }

  double number(const json& obj, const std::string& path, const std::string& key, double def,
                double lo, double hi, json& out) {
    double v = def;
    if (obj.contains(key)) {
      if (!obj[key].is_number()) {
        fail(path + "." + key, "must be a number");
      } else {
        v = obj[key].get<double>();
      }
    }
    if (!(v >= lo && v <= hi)) {
      fail(path + "." + key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      v = std::clamp(v, lo, hi);
    }
    out[key] = v;
    return v;
  }

  bool boolean(const json& obj, const std::string& path, const std::string& key, bool def,
               json& out) {
    bool v = def;
    if (obj.contains(key)) {
      if (!obj[key].is_boolean()) fail(path + "." + key, "must be a boolean");
      else v = obj[key].get<bool>();
    }
    out[key] = v;
    return v;
  }

  std::string choice(const json& obj, const std::string& path, const std::string& key,
                     const std::string& def, const std::vector<std::string>& allowed, json& out) {
    std::string v = def;
    if (obj.contains(key)) {
      if (!obj[key].is_string()) {
        fail(path + "." + key, "must be a string");
      } else {
        v = obj[key].get<std::string>();
      }
    }
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      fail(path + "." + key, "must be one of {" + opts + "}");
      v = def;
    }
    out[key] = v;
    return v;
  }

  std::pair<double, double> vec2(const json& obj, const std::string& path, const std::string& key,
                                 double dx, double dy, json& out) {
    double x = dx, y = dy;
    if (obj.contains(key)) {
      const json& a = obj[key];
      if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
        fail(path + "." + key, "must be a [x, y] number pair");
      } else {
        x = a[0].get<double>();
        y = a[1].get<double>();
      }
    }
    out[key] = json::array({x, y});
    return {x, y};
  }

 private:
  std::vector<ValidationIssue>& issues_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Config validation: every violation collected, defaults injected, the
// normalized config echoed back.
// ---------------------------------------------------------------------------

inline ValidationResult validate_config(const json& raw) {
  ValidationResult res;
  detail::Validator v(res.issues);
  json& out = res.normalized;
  if (!raw.is_object()) {
    v.fail("", "config must be a JSON object");
    return res;
  }
  v.check_keys(raw, "", {"description", "engine", "seed", "threads", "trap", "imaging",
                         "pattern", "ramp", "run", "analysis"});

  out["description"] = raw.value("description", std::string{});
  const std::string engine =
      v.choice(raw, "", "engine", "classical", {"classical", "wave"}, out);
  if (raw.contains("seed") && !raw["seed"].is_number_unsigned()) {
    v.fail(".seed", "must be a non-negative integer");
    out["seed"] = 1;
  } else {
    out["seed"] = raw.value("seed", 1ull);
  }
  {
    json tmp;
    const double th = v.number(raw, "", "threads", 1.0, 1.0, 256.0, tmp);
    out["threads"] = static_cast<int>(th);
  }

  // trap
  {
    const json t = raw.value("trap", json::object());
    json& ot = out["trap"];
    ot = json::object();
    v.check_keys(t, ".trap", {"fringe_spacing_um", "vertical_freq_hz", "depth_u0_nK",
                              "escape_depth_uK", "inplane_freq_hz", "rayleigh_range_mm",
                              "gravity", "co2_waist_um", "co2_depth_nK", "co2_center_um"});
    const double d = v.number(t, ".trap", "fringe_spacing_um", 8.0, 0.6, 1000.0, ot);
    const double fz = v.number(t, ".trap", "vertical_freq_hz", 810.0, 0.0, 1e6, ot);
    const double u0_default =
        fz > 0.0 ? convert_energy(calibrate_depth_for_frequency(std::max(fz, 1e-9), d * 1e-6),
                                  EnergyUnit::kb_nanokelvin)
                       .value
                 : 0.0;
    v.number(t, ".trap", "depth_u0_nK", u0_default, 0.0, 1e9, ot);
    v.number(t, ".trap", "escape_depth_uK", 2.0, 0.0, 1e6, ot);
    v.number(t, ".trap", "inplane_freq_hz", 1.0, 0.0, 1e4, ot);
    v.number(t, ".trap", "rayleigh_range_mm", 1.6, 1e-3, 1e3, ot);
    v.boolean(t, ".trap", "gravity", true, ot);
    v.number(t, ".trap", "co2_waist_um", 30.0, 1.0, 1e4, ot);
    v.number(t, ".trap", "co2_depth_nK", 50.0, 0.0, 1e6, ot);
    v.vec2(t, ".trap", "co2_center_um", 0.0, 0.0, ot);
  }

  // imaging
  {
    const json im = raw.value("imaging", json::object());
    json& oi = out["imaging"];
    oi = json::object();
    v.check_keys(im, ".imaging", {"magnification", "psf_model", "psf_fwhm_um", "max_depth_uK",
                                  "field_extent_um"});
    v.number(im, ".imaging", "magnification", 0.036, 1e-6, 0.999999, oi);
    v.choice(im, ".imaging", "psf_model", "gaussian", {"gaussian", "airy"}, oi);
    v.number(im, ".imaging", "psf_fwhm_um", 0.9, 1e-3, 100.0, oi);
    v.number(im, ".imaging", "max_depth_uK", 2.5, 0.0, 1e4, oi);
    v.vec2(im, ".imaging", "field_extent_um", 600.0, 400.0, oi);
  }

  // pattern
  {
    const json p = raw.value("pattern", json::object());
    json& op = out["pattern"];
    op = json::object();
    v.check_keys(p, ".pattern", {"source", "path", "preset"});
    const std::string source =
        v.choice(p, ".pattern", "source", "none", {"none", "file", "preset"}, op);
    if (source == "file") {
      std::string path = p.value("path", std::string{});
      if (path.empty()) v.fail(".pattern.path", "required when source is 'file'");
      else if (!std::filesystem::exists(path)) v.fail(".pattern.path", "file not found: " + path);
      op["path"] = path;
    } else if (source == "preset") {
      const json pr = p.value("preset", json::object());
      json& opr = op["preset"];
      opr = json::object();
      const std::string name = v.choice(pr, ".pattern.preset", "name", "open_plane",
                                        {"dumbbell", "ring", "kiwi", "open_plane", "grating"}, opr);
      if (name == "dumbbell") {
        v.check_keys(pr, ".pattern.preset",
                     {"name", "reservoir_radius_um", "channel_length_um", "channel_width_um",
                      "wall_thickness_um"});
        v.number(pr, ".pattern.preset", "reservoir_radius_um", 35.0, 0.1, 1e4, opr);
        v.number(pr, ".pattern.preset", "channel_length_um", 35.0, 0.0, 1e4, opr);
        v.number(pr, ".pattern.preset", "channel_width_um", 30.0, 0.0, 1e4, opr);
        v.number(pr, ".pattern.preset", "wall_thickness_um", 2.16, 0.1, 100.0, opr);
      } else if (name == "ring") {
        v.check_keys(pr, ".pattern.preset",
                     {"name", "inner_diameter_um", "outer_diameter_um", "wall_thickness_um"});
        const double di = v.number(pr, ".pattern.preset", "inner_diameter_um", 43.0, 0.0, 1e4, opr);
        const double dout = v.number(pr, ".pattern.preset", "outer_diameter_um", 76.0, 0.1, 1e4, opr);
        if (!(dout > di)) v.fail(".pattern.preset.outer_diameter_um", "must exceed inner diameter");
        v.number(pr, ".pattern.preset", "wall_thickness_um", 2.16, 0.1, 100.0, opr);
      } else if (name == "kiwi") {
        v.check_keys(pr, ".pattern.preset", {"name", "length_um", "wall_thickness_um"});
        v.number(pr, ".pattern.preset", "length_um", 150.0, 1.0, 1e4, opr);
        v.number(pr, ".pattern.preset", "wall_thickness_um", 2.88, 0.1, 100.0, opr);
      } else if (name == "grating") {
        v.check_keys(pr, ".pattern.preset", {"name", "pitch_px", "phase_px"});
        v.number(pr, ".pattern.preset", "pitch_px", 4.0, 1.0, 4096.0, opr);
        v.number(pr, ".pattern.preset", "phase_px", 0.0, -4096.0, 4096.0, opr);
      } else {
        v.check_keys(pr, ".pattern.preset", {"name"});
      }
    }
  }

  // ramp
  {
    const json r = raw.value("ramp", json::object());
    json& orr = out["ramp"];
    orr = json::object();
    v.check_keys(r, ".ramp", {"type", "pattern_final_power", "segments"});
    const std::string type =
        v.choice(r, ".ramp", "type", "released", {"paper_loading", "released", "custom"}, orr);
    v.number(r, ".ramp", "pattern_final_power", 1.0, 0.0, 1.0, orr);
    if (type == "custom") {
      if (!r.contains("segments") || !r["segments"].is_object()) {
        v.fail(".ramp.segments", "required for custom ramps");
      } else {
        orr["segments"] = r["segments"];
        for (const std::string beam : {"co2", "planar", "pattern"}) {
          if (!r["segments"].contains(beam) || !r["segments"][beam].is_array()) {
            v.fail(".ramp.segments." + beam, "must be an array of [t0,t1,p0,p1] rows");
            continue;
          }
          for (const auto& seg : r["segments"][beam]) {
            if (!seg.is_array() || seg.size() != 4) {
              v.fail(".ramp.segments." + beam, "each segment must be [t0,t1,p0,p1]");
            }
          }
        }
      }
    }
  }

  // run
  double duration_ms = 0.0, dt_us = 10.0;
  {
    const json r = raw.value("run", json::object());
    json& orn = out["run"];
    orn = json::object();
    v.check_keys(r, ".run",
                 {"t_start_s", "duration_ms", "dt_us", "snapshot_every_ms", "snapshot_times_ms",
                  "snapshot_include_t0", "grid_extent_um", "grid_pitch_um", "atom_count",
                  "temperature_nK", "source_radius_um", "source_center_um", "wave_source",
                  "absorber", "snapshot_rebin", "write_pgm", "interaction_g"});
    v.number(r, ".run", "t_start_s", RampSchedule::release_time(), 0.0, 1e4, orn);
    duration_ms = v.number(r, ".run", "duration_ms", 0.0, 0.0, 1e6, orn);
    dt_us = v.number(r, ".run", "dt_us", 10.0, 1e-3, 1e5, orn);
    v.vec2(r, ".run", "grid_extent_um", 600.0, 400.0, orn);
    v.number(r, ".run", "grid_pitch_um", 2.0, 1e-3, 100.0, orn);
    v.number(r, ".run", "atom_count", 10000.0, 1.0, 1e8, orn);
    v.number(r, ".run", "temperature_nK", 8.0, 0.0, 1e6, orn);
    v.number(r, ".run", "source_radius_um", 1.0, 1e-3, 1e4, orn);
    v.vec2(r, ".run", "source_center_um", 0.0, 0.0, orn);
    v.choice(r, ".run", "wave_source", "thermal_speckle", {"thermal_speckle", "packet"}, orn);
    v.boolean(r, ".run", "absorber", engine == "wave", orn);
    v.number(r, ".run", "snapshot_rebin", 1.0, 1.0, 64.0, orn);
    v.boolean(r, ".run", "write_pgm", false, orn);
    v.number(r, ".run", "interaction_g", 0.0, 0.0, 1e-20, orn);
    const bool include_t0 = v.boolean(r, ".run", "snapshot_include_t0", true, orn);

    std::vector<double> snaps;
    if (r.contains("snapshot_times_ms")) {
      if (!r["snapshot_times_ms"].is_array()) {
        v.fail(".run.snapshot_times_ms", "must be an array of numbers");
      } else {
        for (const auto& e : r["snapshot_times_ms"]) {
          if (!e.is_number()) {
            v.fail(".run.snapshot_times_ms", "must contain numbers only");
            continue;
          }
          snaps.push_back(e.get<double>());
        }
      }
    } else {
      json tmp;
      const double every = v.number(r, ".run", "snapshot_every_ms", 0.0, 0.0, 1e6, tmp);
      orn["snapshot_every_ms"] = every;
      if (every > 0.0) {
        if (include_t0) snaps.push_back(0.0);
        for (double t = every; t <= duration_ms * (1.0 + 1e-12); t += every) snaps.push_back(t);
      } else if (duration_ms > 0.0) {
        if (include_t0) snaps.push_back(0.0);
        snaps.push_back(duration_ms);
      }
    }
    std::sort(snaps.begin(), snaps.end());
    for (double t : snaps) {
      if (t < 0.0 || t > duration_ms * (1.0 + 1e-12)) {
        v.fail(".run.snapshot_times_ms",
               "snapshot time " + std::to_string(t) + " ms outside [0, duration]");
      }
      const double steps = t * 1e3 / dt_us;
      if (std::abs(steps - std::round(steps)) > 1e-6 * std::max(1.0, steps)) {
        v.fail(".run.snapshot_times_ms",
               "snapshot time " + std::to_string(t) + " ms is not a multiple of dt");
      }
    }
    orn["snapshot_times_ms"] = snaps;
  }

  // analysis directives
  {
    const json a = raw.value("analysis", json::array());
    json& oa = out["analysis"];
    oa = json::array();
    if (!a.is_array()) {
      v.fail(".analysis", "must be an array of directives");
    } else {
      int idx = 0;
      for (const auto& d : a) {
        const std::string path = ".analysis[" + std::to_string(idx++) + "]";
        json od = json::object();
        if (!d.is_object()) {
          v.fail(path, "must be an object");
          continue;
        }
        const std::string type = v.choice(
            d, path, "type", "expansion_fit",
            {"expansion_fit", "imbalance", "two_regime", "fringe_stability", "mtf_psf"}, od);
        if (type == "expansion_fit") {
          v.check_keys(d, path, {"type"});
        } else if (type == "imbalance") {
          v.check_keys(d, path, {"type", "mask_initial", "mask_final"});
          for (const std::string mk : {"mask_initial", "mask_final"}) {
            if (!d.contains(mk) || !d[mk].is_object()) {
              v.fail(path + "." + mk, "required mask object");
              od[mk] = json::object();
              continue;
            }
            const json m = d[mk];
            json om = json::object();
            const std::string mtype =
                v.choice(m, path + "." + mk, "type", "halfplane", {"halfplane", "disc", "rect"}, om);
            if (mtype == "halfplane") {
              v.choice(m, path + "." + mk, "axis", "x", {"x", "y"}, om);
              v.choice(m, path + "." + mk, "side", "negative", {"negative", "positive"}, om);
              v.number(m, path + "." + mk, "split_um", 0.0, -1e6, 1e6, om);
            } else if (mtype == "disc") {
              v.vec2(m, path + "." + mk, "center_um", 0.0, 0.0, om);
              v.number(m, path + "." + mk, "radius_um", 10.0, 1e-3, 1e6, om);
            } else {
              v.vec2(m, path + "." + mk, "center_um", 0.0, 0.0, om);
              v.vec2(m, path + "." + mk, "half_um", 10.0, 10.0, om);
            }
            od[mk] = om;
          }
        } else if (type == "two_regime") {
          v.check_keys(d, path, {"type"});
        } else if (type == "fringe_stability") {
          v.check_keys(d, path, {"type", "cadence_s", "duration_s", "drift_deg_per_hour",
                                 "noise_amplitude", "phase0_deg"});
          v.number(d, path, "cadence_s", 60.0, 1e-3, 1e5, od);
          v.number(d, path, "duration_s", 3600.0, 1e-3, 1e6, od);
          v.number(d, path, "drift_deg_per_hour", 15.0, -1e4, 1e4, od);
          v.number(d, path, "noise_amplitude", 0.0, 0.0, 10.0, od);
          v.number(d, path, "phase0_deg", 0.0, -180.0, 180.0, od);
        } else if (type == "mtf_psf") {
          v.check_keys(d, path, {"type", "periods_um", "grid_pitch_um"});
          v.number(d, path, "grid_pitch_um", 0.09, 1e-3, 10.0, od);
          json periods = json::array();
          if (d.contains("periods_um")) {
            if (!d["periods_um"].is_array()) {
              v.fail(path + ".periods_um", "must be an array");
            } else {
              for (const auto& e : d["periods_um"]) {
                if (!e.is_number() || e.get<double>() <= 0.0) {
                  v.fail(path + ".periods_um", "periods must be positive numbers");
                } else {
                  periods.push_back(e.get<double>());
                }
              }
            }
          } else {
            periods = json::array({7.2, 3.6, 2.16, 1.44, 0.72});
          }
          if (periods.size() < 4) v.fail(path + ".periods_um", "need >= 4 periods");
          od["periods_um"] = periods;
        }
        oa.push_back(od);
      }
    }
    const bool needs_dynamics = [&] {
      for (const auto& d : oa) {
        const std::string t = d.value("type", "");
        if (t == "expansion_fit" || t == "imbalance" || t == "two_regime") return true;
      }
      return false;
    }();
    if (needs_dynamics && duration_ms <= 0.0) {
      v.fail(".run.duration_ms", "dynamics analyses require a positive duration");
    }
  }

  return res;
}

inline ValidationResult validate_config_text(const std::string& text) {
  json raw = json::parse(text, nullptr, false);
  if (raw.is_discarded()) {
    ValidationResult res;
    res.issues.push_back({"", "config is not valid JSON"});
    return res;
  }
  return validate_config(raw);
}

// ---------------------------------------------------------------------------
// Normalized-config accessors (assume validation passed)
// ---------------------------------------------------------------------------

namespace detail {

inline ImagingSystem imaging_from(const json& cfg) {
  const json& im = cfg.at("imaging");
  ImagingSystem sys;
  sys.magnification = im.at("magnification").get<double>();
  sys.psf_model = parse_psf_model(im.at("psf_model").get<std::string>());
  sys.psf_fwhm = im.at("psf_fwhm_um").get<double>() * 1e-6;
  sys.max_depth = kb_microkelvin(im.at("max_depth_uK").get<double>());
  sys.field_extent_x = im.at("field_extent_um")[0].get<double>() * 1e-6;
  sys.field_extent_y = im.at("field_extent_um")[1].get<double>() * 1e-6;
  return sys;
}

inline TrapConfig trap_from(const json& cfg) {
  const json& t = cfg.at("trap");
  TrapConfig tc;
  tc.fringe_spacing = t.at("fringe_spacing_um").get<double>() * 1e-6;
  tc.depth_u0 = kb_nanokelvin(t.at("depth_u0_nK").get<double>());
  tc.escape_depth = kb_microkelvin(t.at("escape_depth_uK").get<double>());
  tc.inplane_freq = t.at("inplane_freq_hz").get<double>();
  tc.rayleigh_range = t.at("rayleigh_range_mm").get<double>() * 1e-3;
  tc.gravity = t.at("gravity").get<bool>();
  return tc;
}

inline RampSchedule ramp_from(const json& cfg) {
  const json& r = cfg.at("ramp");
  const std::string type = r.at("type").get<std::string>();
  const double pfinal = r.at("pattern_final_power").get<double>();
  if (type == "paper_loading") return RampSchedule::paper_loading(pfinal);
  if (type == "released") return RampSchedule::released(pfinal);
  RampSchedule sched;
  auto track = [&](const char* key, std::vector<RampSegment>& dst) {
    for (const auto& seg : r.at("segments").at(key)) {
      dst.push_back({seg[0].get<double>(), seg[1].get<double>(), seg[2].get<double>(),
                     seg[3].get<double>()});
    }
  };
  track("co2", sched.co2);
  track("planar", sched.planar);
  track("pattern", sched.pattern);
  sched.validate();
  return sched;
}

inline SlmPattern pattern_from(const json& cfg, const ImagingSystem& sys,
                               std::vector<std::string>* warnings) {
  const json& p = cfg.at("pattern");
  const std::string source = p.at("source").get<std::string>();
  if (source == "file") return load_slm_pattern_file(p.at("path").get<std::string>());
  if (source == "none") return SlmPattern();
  const json& pr = p.at("preset");
  const std::string name = pr.at("name").get<std::string>();
  auto um = [&](const char* key) { return pr.at(key).get<double>() * 1e-6; };
  if (name == "dumbbell") {
    OutlineResult r = dumbbell_outline(um("reservoir_radius_um"), um("channel_length_um"),
                                       um("channel_width_um"), um("wall_thickness_um"), sys);
    if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
    return std::move(r.pattern);
  }
  if (name == "ring") {
    OutlineResult r = ring_outline(um("inner_diameter_um"), um("outer_diameter_um"),
                                   um("wall_thickness_um"), sys);
    if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
    return std::move(r.pattern);
  }
  if (name == "kiwi") {
    OutlineResult r = kiwi_outline(um("length_um"), sys, um("wall_thickness_um"));
    if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
    return std::move(r.pattern);
  }
  if (name == "grating") {
    return grating_pattern(static_cast<int>(pr.at("pitch_px").get<double>()),
                           static_cast<int>(pr.at("phase_px").get<double>()));
  }
  return SlmPattern();  // open_plane
}

inline RegionMask mask_from(const json& m, const Grid2D& g) {
  const std::string type = m.at("type").get<std::string>();
  if (type == "halfplane") {
    const char axis = m.at("axis").get<std::string>()[0];
    const int side = m.at("side").get<std::string>() == "positive" ? +1 : -1;
    return halfplane_mask(g, axis, side, m.at("split_um").get<double>() * 1e-6);
  }
  if (type == "disc") {
    return disc_mask(g, m.at("center_um")[0].get<double>() * 1e-6,
                     m.at("center_um")[1].get<double>() * 1e-6,
                     m.at("radius_um").get<double>() * 1e-6);
  }
  RegionMask mask(g);
  const double cx = m.at("center_um")[0].get<double>() * 1e-6;
  const double cy = m.at("center_um")[1].get<double>() * 1e-6;
  const double hx = m.at("half_um")[0].get<double>() * 1e-6;
  const double hy = m.at("half_um")[1].get<double>() * 1e-6;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      mask(i, j) = std::abs(g.x(i) - cx) <= hx && std::abs(g.y(j) - cy) <= hy ? 1 : 0;
  return mask;
}

inline std::string snap_label(double t_ms) {
  char buf[64];
  if (std::abs(t_ms - std::round(t_ms)) < 1e-9) {
    std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(t_ms)));
  } else {
    std::snprintf(buf, sizeof(buf), "%.3f", t_ms);
  }
  return std::string("snap_") + buf + "ms.csv";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scenario runner
// ---------------------------------------------------------------------------

struct ScenarioOutcome {
  json report;
  int exit_code = 0;  // 0 ok, 3 simulation error, 4 analysis non-convergence
};

class ScenarioRunner {
 public:
  ScenarioRunner(json normalized, std::filesystem::path out_dir)
      : cfg_(std::move(normalized)), out_(std::move(out_dir)) {}

  ScenarioOutcome run() {
    namespace fs = std::filesystem;
    fs::create_directories(out_);
    std::ofstream(out_ / "normalized_config.json") << cfg_.dump(2) << "\n";

    json report;
    report["provenance"] = {
        {"config_fnv1a64", detail::hex64(detail::fnv1a64(cfg_.dump()))},
        {"seed", cfg_.at("seed").get<std::uint64_t>()},
        {"threads", cfg_.at("threads").get<int>()},
        {"version", kVersion},
    };
    report["engine"] = cfg_.at("engine");
    report["warnings"] = json::array();

    int exit_code = 0;
    try {
      build_world(report);
      run_dynamics(report);
      const int analysis_code = run_analyses(report);
      exit_code = analysis_code;
    } catch (const ConvergenceError& e) {
      report["error"] = {{"stage", stage_}, {"message", e.what()}};
      write_failed(e.what());
      exit_code = 4;
    } catch (const std::exception& e) {
      report["error"] = {{"stage", stage_}, {"message", e.what()}};
      write_failed(e.what());
      exit_code = 3;
    }
    report["status"] = exit_code == 0 ? "ok" : "failed";
    std::ofstream(out_ / "report.json") << report.dump(2) << "\n";
    return {report, exit_code};
  }

 private:
  void write_failed(const std::string& why) {
    std::ofstream(out_ / "FAILED") << why << "\n";
  }

  void build_world(json& report) {
    stage_ = "setup";
    threads_ = cfg_.at("threads").get<int>();
    seed_ = cfg_.at("seed").get<std::uint64_t>();
    engine_ = cfg_.at("engine").get<std::string>();
    imaging_ = detail::imaging_from(cfg_);
    trap_ = detail::trap_from(cfg_);
    ramp_ = detail::ramp_from(cfg_);
    const json& run = cfg_.at("run");
    t_start_ = run.at("t_start_s").get<double>();
    duration_ = run.at("duration_ms").get<double>() * 1e-3;
    dt_ = run.at("dt_us").get<double>() * 1e-6;
    temperature_ = run.at("temperature_nK").get<double>() * 1e-9;
    for (const auto& t : run.at("snapshot_times_ms")) snap_times_.push_back(t.get<double>() * 1e-3);

    const double ex = run.at("grid_extent_um")[0].get<double>() * 1e-6;
    const double ey = run.at("grid_extent_um")[1].get<double>() * 1e-6;
    const double pitch = run.at("grid_pitch_um").get<double>() * 1e-6;
    int nx = std::max(2, static_cast<int>(std::round(ex / pitch)));
    int ny = std::max(2, static_cast<int>(std::round(ey / pitch)));
    if (engine_ == "wave") {
      nx = (nx + 3) / 4 * 4;
      ny = (ny + 3) / 4 * 4;
    }
    grid_ = Grid2D::centered(nx, ny, pitch);
    report["grid"] = {{"nx", nx}, {"ny", ny}, {"pitch_um", pitch * 1e6}};

    stack_.emplace(grid_);
    stack_->set_planar(inplane_potential(trap_, grid_));
    std::vector<std::string> warnings;
    const std::string pattern_source = cfg_.at("pattern").at("source").get<std::string>();
    if (pattern_source != "none") {
      pattern_ = detail::pattern_from(cfg_, imaging_, &warnings);
      stack_->set_pattern(project_to_atom_plane(pattern_, imaging_, grid_, threads_));
      write_field_csv_file((out_ / "potential.csv").string(),
                           convert_field(*stack_->pattern_map()), "kB_nK");
      if (cfg_.at("run").at("write_pgm").get<bool>()) write_quicklook();
    }
    {
      const json& t = cfg_.at("trap");
      const double w = t.at("co2_waist_um").get<double>() * 1e-6;
      const double depth = t.at("co2_depth_nK").get<double>() * 1e-9 * PhysicalConstants{}.k_boltzmann();
      const double cx = t.at("co2_center_um")[0].get<double>() * 1e-6;
      const double cy = t.at("co2_center_um")[1].get<double>() * 1e-6;
      if (depth > 0.0) {
        ScalarField co2(grid_);
        for (int j = 0; j < grid_.ny; ++j)
          for (int i = 0; i < grid_.nx; ++i) {
            const double dx = grid_.x(i) - cx, dy = grid_.y(j) - cy;
            co2(i, j) = -depth * std::exp(-2.0 * (dx * dx + dy * dy) / (w * w));
          }
        stack_->set_co2(co2);
      }
    }
    for (const auto& w : warnings) report["warnings"].push_back(w);

    // trap diagnostics
    const VerticalFrequency vf = vertical_trap_frequency(trap_);
    json diag = {
        {"fringe_spacing_um", trap_.fringe_spacing * 1e6},
        {"crossing_angle_deg", trap_.crossing_angle() * 180.0 / M_PI},
        {"vertical_freq_analytic_hz", vf.analytic_hz},
        {"vertical_freq_curvature_hz", vf.curvature_hz},
        {"depth_u0_nK", convert_energy(trap_.depth_u0, EnergyUnit::kb_nanokelvin).value},
        {"effective_depth_under_gravity_nK",
         convert_energy(effective_trap_depth(trap_), EnergyUnit::kb_nanokelvin).value},
    };
    if (temperature_ > 0.0) {
      diag["dimensionality_ratio"] = dimensionality_ratio(vf.analytic_hz, temperature_);
    }
    report["trap_diagnostics"] = diag;
  }

  ScalarField convert_field(const ScalarField& joules_field) const {
    ScalarField f = joules_field;
    const double scale = 1.0 / (1e-9 * PhysicalConstants{}.k_boltzmann());
    for (double& v : f.raw()) v *= scale;
    return f;
  }

  void write_quicklook() const {
    const ScalarField& u = *stack_->pattern_map();
    const double umax = std::max(field_max(u), 1e-300);
    GrayImage img{u.grid().nx, u.grid().ny, {}};
    img.pixels.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      img.pixels[i] = static_cast<std::uint8_t>(std::clamp(u.raw()[i] / umax * 255.0, 0.0, 255.0));
    }
    write_pgm_file((out_ / "potential.pgm").string(), img);
  }

  void run_dynamics(json& report) {
    if (duration_ <= 0.0) return;
    stage_ = "simulation";
    const json& run = cfg_.at("run");
    const int rebin_f = static_cast<int>(run.at("snapshot_rebin").get<double>());
    const double src_x = run.at("source_center_um")[0].get<double>() * 1e-6;
    const double src_y = run.at("source_center_um")[1].get<double>() * 1e-6;
    const double src_r = run.at("source_radius_um").get<double>() * 1e-6;
    const long n_steps = std::lround(duration_ / dt_);

    std::vector<long> snap_steps;
    for (double t : snap_times_) snap_steps.push_back(std::lround(t / dt_));

    auto record_snapshot = [&](long stepno, const ScalarField& dens, const std::string& unit) {
      const double t_ms = stepno * dt_ * 1e3;
      ScalarField disk = dens;
      if (rebin_f > 1 && dens.grid().nx % rebin_f == 0 && dens.grid().ny % rebin_f == 0) {
        disk = rebin(dens, rebin_f);
      }
      write_field_csv_file((out_ / detail::snap_label(t_ms)).string(), disk, unit);
      snapshots_.push_back({stepno * dt_, dens});
    };

    if (engine_ == "classical") {
      const std::size_t n_atoms =
          static_cast<std::size_t>(run.at("atom_count").get<double>());
      AtomEnsemble ens = sample_ensemble(n_atoms, temperature_, src_r, seed_, src_x, src_y);
      ClassicalParams params;
      params.dt = dt_;
      params.threads = threads_;
      params.escape_threshold = trap_.escape_depth;
      ClassicalEngine eng(*stack_, params);
      eng.arm_lifetime(ens);
      std::size_t snap_idx = 0;
      std::vector<std::pair<double, double>> alive_trace;
      for (long s = 0; s <= n_steps; ++s) {
        if (snap_idx < snap_steps.size() && snap_steps[snap_idx] == s) {
          record_snapshot(s, density_histogram(ens, grid_), "atoms_per_cell");
          alive_trace.emplace_back(s * dt_, static_cast<double>(ens.alive_count()));
          ++snap_idx;
        }
        if (s == n_steps) break;
        ens_powers_ = ramp_.at(t_start_ + s * dt_);
        eng.step(ens, ens_powers_);
      }
      write_trace_csv_file((out_ / "trace_alive.csv").string(), "alive", alive_trace);
      report["simulation"] = {{"steps", n_steps},
                              {"atoms", n_atoms},
                              {"alive_final", ens.alive_count()}};
    } else {
      check_wave_sampling(grid_, std::max(temperature_, 1e-12));
      WaveParams wp;
      wp.dt = dt_;
      wp.threads = threads_;
      wp.absorber = run.at("absorber").get<bool>();
      WaveEngine eng(grid_, wp);
      Wavefunction psi =
          run.at("wave_source").get<std::string>() == "packet"
              ? gaussian_packet(grid_, src_x, src_y, src_r)
              : thermal_speckle_source(grid_, src_x, src_y, src_r, temperature_, seed_);
      psi.interaction_g = run.at("interaction_g").get<double>();
      std::size_t snap_idx = 0;
      for (long s = 0; s <= n_steps; ++s) {
        if (snap_idx < snap_steps.size() && snap_steps[snap_idx] == s) {
          record_snapshot(s, wave_density(psi), "norm_per_cell");
          ++snap_idx;
        }
        if (s == n_steps) break;
        eng.evolve(psi, *stack_, ramp_.at(t_start_ + s * dt_), 1);
      }
      report["simulation"] = {{"steps", n_steps}, {"final_norm", psi.norm()}};
    }
  }

  int run_analyses(json& report) {
    stage_ = "analysis";
    int code = 0;
    json& out = report["analyses"];
    out = json::object();
    for (const auto& d : cfg_.at("analysis")) {
      const std::string type = d.at("type").get<std::string>();
      try {
        if (type == "expansion_fit") out["expansion_fit"] = analyze_expansion();
        else if (type == "imbalance") out["imbalance"] = analyze_imbalance(d);
        else if (type == "two_regime") out["two_regime"] = analyze_two_regime(d);
        else if (type == "fringe_stability") out["fringe_stability"] = analyze_fringe(d);
        else if (type == "mtf_psf") out["mtf_psf"] = analyze_mtf(d);
      } catch (const ConvergenceError& e) {
        out[type] = {{"error", e.what()}};
        code = 4;
      }
    }
    return code;
  }

  json analyze_expansion() {
    RadiusSeries series;
    for (const auto& [t, dens] : snapshots_) {
      const GaussianRadiusFit f = fit_gaussian_radius(dens);
      series.samples.push_back({t, f.radius, f.radius_err});
    }
    const TemperatureFit tf = fit_temperature(series, PhysicalConstants{}.mass_rb87());
    json radii = json::array();
    for (const auto& s : series.samples) {
      radii.push_back({{"t_ms", s.t * 1e3}, {"radius_um", s.radius * 1e6},
                       {"radius_err_um", s.radius_err * 1e6}});
    }
    return {{"temperature_nK", tf.temperature * 1e9},
            {"temperature_err_nK", tf.temperature_err * 1e9},
            {"r0_um", std::sqrt(std::max(tf.r0_squared, 0.0)) * 1e6},
            {"slope_m2_per_s2", tf.slope},
            {"unphysical", tf.unphysical},
            {"radii", radii}};
  }

  json analyze_imbalance(const json& d) {
    const RegionMask mi = detail::mask_from(d.at("mask_initial"), grid_);
    const RegionMask mf = detail::mask_from(d.at("mask_final"), grid_);
    imbalance_trace_.samples.clear();
    json undefined = json::array();
    for (const auto& [t, dens] : snapshots_) {
      const auto dn = imbalance(dens, mi, mf);
      if (dn) imbalance_trace_.samples.push_back({t, *dn});
      else undefined.push_back(t * 1e3);
    }
    std::vector<std::pair<double, double>> rows;
    for (const auto& s : imbalance_trace_.samples) rows.emplace_back(s.t, s.value);
    write_trace_csv_file((out_ / "trace_imbalance.csv").string(), "imbalance", rows);
    json res = {{"samples", imbalance_trace_.samples.size()},
                {"trace_csv", "trace_imbalance.csv"}};
    if (!imbalance_trace_.samples.empty()) {
      res["dn_first"] = imbalance_trace_.samples.front().value;
      res["dn_final"] = imbalance_trace_.samples.back().value;
    }
    if (!undefined.empty()) res["undefined_at_ms"] = undefined;
    return res;
  }

  json analyze_two_regime(const json&) {
    if (imbalance_trace_.samples.empty()) {
      throw InvalidArgumentError("two_regime: requires an imbalance directive before it");
    }
    const TwoRegimeFit f = fit_two_regime(imbalance_trace_);
    return {{"breakpoint_ms", f.breakpoint * 1e3},
            {"ballistic_slope_per_s", f.slope},
            {"tau_ms", f.tau * 1e3},
            {"omega_rad_per_s", f.omega},
            {"frequency_hz", f.omega / (2.0 * M_PI)},
            {"phase_rad", f.phase},
            {"offset", f.offset},
            {"amplitude", f.amplitude},
            {"ssr", f.ssr},
            {"r_squared", f.r_squared},
            {"degenerate", f.degenerate},
            {"converged", f.converged}};
  }

  json analyze_fringe(const json& d) {
    const double cadence = d.at("cadence_s").get<double>();
    const double duration = d.at("duration_s").get<double>();
    const double drift = d.at("drift_deg_per_hour").get<double>() * M_PI / 180.0 / 3600.0;
    const double noise = d.at("noise_amplitude").get<double>();
    const double phi0 = d.at("phase0_deg").get<double>() * M_PI / 180.0;
    const double dfr = trap_.fringe_spacing;
    const Grid2D g(64, 256, dfr / 16.0, -32.0 * dfr / 16.0, -128.0 * dfr / 16.0);
    std::vector<std::pair<double, ScalarField>> images;
    int k = 0;
    for (double t = 0.0; t <= duration * (1.0 + 1e-12); t += cadence, ++k) {
      images.emplace_back(
          t, synthetic_fringe_image(trap_, phi0 + drift * t, noise, g, seed_ + 1000 + k));
    }
    const auto series = phase_drift_series(images, dfr);
    std::vector<std::pair<double, double>> rows;
    std::vector<double> ts, ph;
    int ambiguous = 0;
    for (const auto& p : series) {
      rows.emplace_back(p.t, p.phase_unwrapped);
      ts.push_back(p.t);
      ph.push_back(p.phase_unwrapped);
      ambiguous += p.ambiguous ? 1 : 0;
    }
    write_trace_csv_file((out_ / "trace_phase.csv").string(), "phase_rad", rows);
    const LineFit lf = fit_line(ts, ph);
    const double rec_drift = lf.slope * 3600.0 * 180.0 / M_PI;
    const double endpoint = (ph.back() - ph.front()) * 180.0 / M_PI;
    double rms = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double r = ph[i] - (lf.intercept + lf.slope * ts[i]);
      rms += r * r;
    }
    rms = std::sqrt(rms / ts.size()) * 180.0 / M_PI;
    const double true_total = drift * duration * 180.0 / M_PI;
    return {{"n_images", series.size()},
            {"drift_true_deg_per_hour", d.at("drift_deg_per_hour").get<double>()},
            {"drift_recovered_deg_per_hour", rec_drift},
            {"endpoint_shift_deg", endpoint},
            {"endpoint_error_deg", endpoint - true_total},
            {"rms_residual_deg", rms},
            {"ambiguous_spans", ambiguous},
            {"trace_csv", "trace_phase.csv"}};
  }

  json analyze_mtf(const json& d) {
    const double pitch = d.at("grid_pitch_um").get<double>() * 1e-6;
    std::vector<double> periods;
    for (const auto& p : d.at("periods_um")) periods.push_back(p.get<double>() * 1e-6);
    const PsfKernel kernel = psf_kernel(imaging_, pitch);
    std::vector<std::pair<double, ScalarField>> pairs;
    json samples = json::array();
    for (double period : periods) {
      const double width = std::max(6.0 * period, 24e-6) + 2.0 * kernel.radius * pitch;
      const int nx = static_cast<int>(std::ceil(width / pitch));
      const int ny = std::max(16, 4 * kernel.radius);
      const Grid2D g = Grid2D::centered(nx, ny, pitch);
      pairs.emplace_back(period, convolve(ideal_grating_image(g, period), kernel, threads_));
    }
    const MtfCurve curve = mtf_from_images(pairs);
    for (const auto& s : curve.samples) {
      samples.push_back({{"period_um", s.period * 1e6}, {"contrast", s.contrast},
                         {"flat", s.flat_flagged}});
    }
    const PsfProfile prof = psf_from_mtf(curve);
    return {{"samples", samples},
            {"first_minimum_um", prof.first_minimum * 1e6},
            {"fwhm_um", prof.fwhm * 1e6},
            {"native_resolution_um", prof.native_resolution * 1e6}};
  }

  json cfg_;
  std::filesystem::path out_;
  std::string stage_ = "setup";
  std::string engine_;
  int threads_ = 1;
  std::uint64_t seed_ = 1;
  double t_start_ = 0.0, duration_ = 0.0, dt_ = 1e-5, temperature_ = 8e-9;
  std::vector<double> snap_times_;
  Grid2D grid_;
  ImagingSystem imaging_;
  TrapConfig trap_;
  RampSchedule ramp_;
  SlmPattern pattern_;
  BeamPowers ens_powers_;
  std::optional<PotentialStack> stack_;
  std::vector<std::pair<double, ScalarField>> snapshots_;
  ImbalanceTrace imbalance_trace_;
};

inline ScenarioOutcome run_scenario(const json& normalized, const std::string& out_dir,
                                    std::optional<std::uint64_t> seed_override = {},
                                    std::optional<int> threads_override = {}) {
  json cfg = normalized;
  if (seed_override) cfg["seed"] = *seed_override;
  if (threads_override) cfg["threads"] = *threads_override;
  ScenarioRunner runner(cfg, out_dir);
  return runner.run();
}

// ---------------------------------------------------------------------------
// Ready-to-run preset configs
// ---------------------------------------------------------------------------

inline json preset_config(const std::string& name) {
  json c;
  c["seed"] = 20260810;
  c["threads"] = 1;
  if (name == "expansion") {
    c["description"] = "Ballistic expansion thermometry in the empty planar trap";
    c["engine"] = "classical";
    c["pattern"] = {{"source", "none"}};
    c["ramp"] = {{"type", "released"}, {"pattern_final_power", 0.0}};
    c["run"] = {{"duration_ms", 100.0}, {"dt_us", 10.0},   {"snapshot_every_ms", 4.0},
                {"snapshot_include_t0", false},            {"grid_extent_um", {600.0, 400.0}},
                {"grid_pitch_um", 2.0}, {"atom_count", 10000}, {"temperature_nK", 8.0},
                {"source_radius_um", 1.0}};
    c["analysis"] = json::array({{{"type", "expansion_fit"}}});
  } else if (name == "dumbbell") {
    c["description"] = "Matter-wave transport between dumbbell reservoirs";
    c["engine"] = "wave";
    c["pattern"] = {{"source", "preset"},
                    {"preset", {{"name", "dumbbell"}, {"reservoir_radius_um", 35.0},
                                {"channel_length_um", 35.0}, {"channel_width_um", 30.0},
                                {"wall_thickness_um", 2.16}}}};
    c["ramp"] = {{"type", "released"}, {"pattern_final_power", 0.016}};
    c["run"] = {{"duration_ms", 300.0},  {"dt_us", 12.5},
                {"snapshot_every_ms", 5.0}, {"grid_extent_um", {224.0, 112.0}},
                {"grid_pitch_um", 0.25},  {"temperature_nK", 8.0},
                {"source_radius_um", 8.0}, {"source_center_um", {-52.5, 0.0}},
                {"wave_source", "thermal_speckle"}, {"absorber", true}, {"snapshot_rebin", 4}};
    c["analysis"] = json::array(
        {{{"type", "imbalance"},
          {"mask_initial", {{"type", "halfplane"}, {"axis", "x"}, {"side", "negative"}, {"split_um", 0.0}}},
          {"mask_final", {{"type", "halfplane"}, {"axis", "x"}, {"side", "positive"}, {"split_um", 0.0}}}},
         {{"type", "two_regime"}}});
  } else if (name == "ring") {
    c["description"] = "Atoms filling the ring channel from a left-side source";
    c["engine"] = "classical";
    c["pattern"] = {{"source", "preset"},
                    {"preset", {{"name", "ring"}, {"inner_diameter_um", 43.0},
                                {"outer_diameter_um", 76.0}, {"wall_thickness_um", 2.16}}}};
    c["ramp"] = {{"type", "released"}, {"pattern_final_power", 1.0}};
    c["run"] = {{"duration_ms", 100.0}, {"dt_us", 10.0}, {"snapshot_every_ms", 10.0},
                {"grid_extent_um", {110.0, 110.0}}, {"grid_pitch_um", 0.5},
                {"atom_count", 20000}, {"temperature_nK", 8.0}, {"source_radius_um", 3.0},
                {"source_center_um", {-29.75, 0.0}}};
    c["analysis"] = json::array(
        {{{"type", "imbalance"},
          {"mask_initial", {{"type", "halfplane"}, {"axis", "x"}, {"side", "negative"}, {"split_um", 0.0}}},
          {"mask_final", {{"type", "halfplane"}, {"axis", "x"}, {"side", "positive"}, {"split_um", 0.0}}}}});
  } else if (name == "kiwi") {
    c["description"] = "Expansion into the kiwi-bird outline (demo artwork)";
    c["engine"] = "classical";
    c["pattern"] = {{"source", "preset"},
                    {"preset", {{"name", "kiwi"}, {"length_um", 150.0}, {"wall_thickness_um", 2.88}}}};
    c["ramp"] = {{"type", "released"}, {"pattern_final_power", 1.0}};
    c["run"] = {{"duration_ms", 300.0}, {"dt_us", 10.0}, {"snapshot_every_ms", 50.0},
                {"grid_extent_um", {200.0, 160.0}}, {"grid_pitch_um", 0.5},
                {"atom_count", 20000}, {"temperature_nK", 8.0}, {"source_radius_um", 3.0},
                {"source_center_um", {0.0, 0.0}}};
    c["analysis"] = json::array();
  } else if (name == "mtf") {
    c["description"] = "Grating MTF sweep and PSF recovery";
    c["engine"] = "classical";
    c["pattern"] = {{"source", "none"}};
    c["ramp"] = {{"type", "released"}, {"pattern_final_power", 0.0}};
    c["run"] = {{"duration_ms", 0.0}};
    c["analysis"] = json::array(
        {{{"type", "mtf_psf"}, {"periods_um", {7.2, 3.6, 2.16, 1.44, 0.72}}, {"grid_pitch_um", 0.09}}});
  } else if (name == "fringe-stability") {
    c["description"] = "Hour-long fringe drift tracking at 60 s cadence";
    c["engine"] = "classical";
    c["pattern"] = {{"source", "none"}};
    c["ramp"] = {{"type", "released"}, {"pattern_final_power", 0.0}};
    c["run"] = {{"duration_ms", 0.0}};
    c["analysis"] = json::array({{{"type", "fringe_stability"}, {"cadence_s", 60.0},
                                  {"duration_s", 3600.0}, {"drift_deg_per_hour", 15.0},
                                  {"noise_amplitude", 0.0}}});
  } else {
    throw InvalidArgumentError(
        "unknown preset: " + name +
        " (available: expansion, dumbbell, ring, kiwi, mtf, fringe-stability)");
  }
  const ValidationResult vr = validate_config(c);
  if (!vr.ok()) {
    std::string msg = "internal preset failed validation:";
    for (const auto& i : vr.issues) msg += " " + i.path + ": " + i.message + ";";
    throw ConfigError(msg);
  }
  return vr.normalized;
}

// Re-run the snapshot-based analyses of a finished run directory.
inline ScenarioOutcome reanalyze_run(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(run_dir);
  std::ifstream cf(dir / "normalized_config.json");
  if (!cf) throw FormatError("analyze: missing normalized_config.json in " + run_dir);
  json cfg = json::parse(std::string((std::istreambuf_iterator<char>(cf)),
                                     std::istreambuf_iterator<char>()));
  // rebuild the snapshot list from files
  std::vector<std::pair<double, fs::path>> snaps;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("snap_", 0) == 0 && name.size() > 11 &&
        name.substr(name.size() - 6) == "ms.csv") {
      snaps.emplace_back(std::stod(name.substr(5, name.size() - 11)), e.path());
    }
  }
  std::sort(snaps.begin(), snaps.end());
  if (snaps.empty()) throw FormatError("analyze: no snap_*ms.csv files in " + run_dir);

  json report;
  report["provenance"] = {{"config_fnv1a64", detail::hex64(detail::fnv1a64(cfg.dump()))},
                          {"seed", cfg.at("seed").get<std::uint64_t>()},
                          {"reanalysis", true},
                          {"version", kVersion}};
  int code = 0;
  const FieldCsv first = read_field_csv_file(snaps.front().second.string());
  const Grid2D grid = first.field.grid();
  std::vector<std::pair<double, ScalarField>> densities;
  densities.emplace_back(snaps.front().first * 1e-3, first.field);
  for (std::size_t i = 1; i < snaps.size(); ++i) {
    densities.emplace_back(snaps[i].first * 1e-3, read_field_csv_file(snaps[i].second.string()).field);
  }
  json& out = report["analyses"];
  out = json::object();
  ImbalanceTrace trace;
  for (const auto& d : cfg.at("analysis")) {
    const std::string type = d.at("type").get<std::string>();
    try {
      if (type == "expansion_fit") {
        RadiusSeries series;
        for (const auto& [t, dens] : densities) {
          const GaussianRadiusFit f = fit_gaussian_radius(dens);
          series.samples.push_back({t, f.radius, f.radius_err});
        }
        const TemperatureFit tf = fit_temperature(series, PhysicalConstants{}.mass_rb87());
        out["expansion_fit"] = {{"temperature_nK", tf.temperature * 1e9},
                                {"temperature_err_nK", tf.temperature_err * 1e9},
                                {"unphysical", tf.unphysical}};
      } else if (type == "imbalance") {
        const RegionMask mi = detail::mask_from(d.at("mask_initial"), grid);
        const RegionMask mf = detail::mask_from(d.at("mask_final"), grid);
        trace.samples.clear();
        for (const auto& [t, dens] : densities) {
          const auto dn = imbalance(dens, mi, mf);
          if (dn) trace.samples.push_back({t, *dn});
        }
        out["imbalance"] = {{"samples", trace.samples.size()},
                            {"dn_first", trace.samples.empty() ? 0.0 : trace.samples.front().value},
                            {"dn_final", trace.samples.empty() ? 0.0 : trace.samples.back().value}};
      } else if (type == "two_regime") {
        const TwoRegimeFit f = fit_two_regime(trace);
        out["two_regime"] = {{"breakpoint_ms", f.breakpoint * 1e3},
                             {"tau_ms", f.tau * 1e3},
                             {"omega_rad_per_s", f.omega},
                             {"degenerate", f.degenerate},
                             {"converged", f.converged}};
      }
    } catch (const ConvergenceError& e) {
      out[type] = {{"error", e.what()}};
      code = 4;
    }
  }
  report["status"] = code == 0 ? "ok" : "failed";
  std::ofstream(dir / "report.json") << report.dump(2) << "\n";
  return {report, code};
}

}  // namespace atomplane
