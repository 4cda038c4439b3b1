#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "atomplane/csvio.hpp"
#include "atomplane/optics.hpp"
#include "atomplane/scenario.hpp"
#include "atomplane/slm.hpp"
#include "atomplane/trap.hpp"
#include "atomplane/version.hpp"

namespace {

using atomplane::json;

json load_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw atomplane::FormatError("cannot open config " + path);
  return json::parse(std::string((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>()));
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<int> threads) {
  json raw;
  try {
    raw = load_json_file(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const atomplane::ValidationResult vr = atomplane::validate_config(raw);
  if (!vr.ok()) {
    std::cerr << "invalid config (" << vr.issues.size() << " issue(s)):\n";
    for (const auto& i : vr.issues) std::cerr << "  " << i.path << ": " << i.message << "\n";
    return 2;
  }
  try {
    const atomplane::ScenarioOutcome outcome =
        atomplane::run_scenario(vr.normalized, out_dir, seed, threads);
    std::cout << "report: " << (std::filesystem::path(out_dir) / "report.json").string() << "\n";
    if (outcome.exit_code != 0) {
      std::cerr << "run finished with status " << outcome.exit_code << "\n";
    }
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "simulation error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_project(const std::string& pattern_path, const std::string& out_dir, double pitch_um,
                double magnification, double fwhm_um, double depth_uk, const std::string& model,
                int threads) {
  try {
    const atomplane::SlmPattern pattern = atomplane::load_slm_pattern_file(pattern_path);
    atomplane::ImagingSystem sys;
    sys.magnification = magnification;
    sys.psf_fwhm = fwhm_um * 1e-6;
    sys.max_depth = atomplane::kb_microkelvin(depth_uk);
    sys.psf_model = atomplane::parse_psf_model(model);
    const double pitch = pitch_um * 1e-6;
    const int nx = static_cast<int>(std::ceil(sys.field_extent_x / pitch));
    const int ny = static_cast<int>(std::ceil(sys.field_extent_y / pitch));
    const atomplane::Grid2D grid = atomplane::Grid2D::centered(nx, ny, pitch);
    const atomplane::ScalarField u =
        atomplane::project_to_atom_plane(pattern, sys, grid, threads);
    std::filesystem::create_directories(out_dir);
    atomplane::ScalarField nk = u;
    const double scale = 1.0 / (1e-9 * atomplane::PhysicalConstants{}.k_boltzmann());
    for (double& v : nk.raw()) v *= scale;
    atomplane::write_field_csv_file(
        (std::filesystem::path(out_dir) / "potential.csv").string(), nk, "kB_nK");
    const double umax = std::max(atomplane::field_max(nk), 1e-300);
    atomplane::GrayImage img{grid.nx, grid.ny, {}};
    img.pixels.resize(nk.size());
    for (std::size_t i = 0; i < nk.size(); ++i) {
      img.pixels[i] =
          static_cast<std::uint8_t>(std::clamp(nk.raw()[i] / umax * 255.0, 0.0, 255.0));
    }
    atomplane::write_pgm_file((std::filesystem::path(out_dir) / "potential.pgm").string(), img);
    std::cout << "wrote potential.csv and potential.pgm (" << grid.nx << "x" << grid.ny
              << ", peak " << atomplane::field_max(nk) << " nK kB)\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

int cmd_trap(double spacing_um, double freq_hz, const std::string& out_dir) {
  try {
    atomplane::TrapConfig cfg;
    cfg.fringe_spacing = spacing_um * 1e-6;
    cfg.depth_u0 = atomplane::calibrate_depth_for_frequency(freq_hz, cfg.fringe_spacing);
    const atomplane::VerticalFrequency vf = atomplane::vertical_trap_frequency(cfg);
    const auto depth_nk =
        atomplane::convert_energy(cfg.depth_u0, atomplane::EnergyUnit::kb_nanokelvin);
    const auto eff =
        atomplane::convert_energy(atomplane::effective_trap_depth(cfg),
                                  atomplane::EnergyUnit::kb_nanokelvin);
    std::cout << "fringe spacing:        " << spacing_um << " um\n"
              << "crossing angle:        " << cfg.crossing_angle() * 180.0 / M_PI << " deg\n"
              << "calibrated depth:      " << depth_nk.value << " nK kB\n"
              << "f_z analytic:          " << vf.analytic_hz << " Hz\n"
              << "f_z curvature:         " << vf.curvature_hz << " Hz\n"
              << "depth under gravity:   " << eff.value << " nK kB\n"
              << "ratio at 8 nK:         " << atomplane::dimensionality_ratio(vf.analytic_hz, 8e-9)
              << "\n";
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      const auto prof = atomplane::vertical_profile(cfg, 6.0 * cfg.fringe_spacing, 4096);
      std::vector<std::pair<double, double>> rows;
      for (std::size_t i = 0; i < prof.z.size(); ++i) rows.emplace_back(prof.z[i], prof.potential[i]);
      atomplane::write_trace_csv_file(
          (std::filesystem::path(out_dir) / "vertical_profile.csv").string(), "U_J", rows);
      std::cout << "wrote vertical_profile.csv\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale simulator of a 2D atomtronic quantum-simulation apparatus"};
  app.set_version_flag("--version", atomplane::kVersion);
  app.require_subcommand(1);

  // run
  std::string run_config, run_out = "run_out";
  std::uint64_t seed_flag = 0;
  int threads_flag = 0;
  auto* run = app.add_subcommand("run", "Execute a scenario config");
  run->add_option("--config", run_config, "Scenario JSON config")->required();
  run->add_option("--out", run_out, "Output directory");
  run->add_option("--seed", seed_flag, "Override the config seed");
  run->add_option("--threads", threads_flag, "Worker threads (performance only)");

  // project
  std::string proj_pattern, proj_out = "project_out", proj_model = "gaussian";
  double proj_pitch = 0.5, proj_mag = 0.036, proj_fwhm = 0.9, proj_depth = 2.5;
  int proj_threads = 1;
  auto* project = app.add_subcommand("project", "Project an SLM graymap to the atom plane");
  project->add_option("--pattern", proj_pattern, "P5 graymap path")->required();
  project->add_option("--out", proj_out, "Output directory");
  project->add_option("--pitch-um", proj_pitch, "Target grid pitch (um)");
  project->add_option("--magnification", proj_mag, "Imaging magnification");
  project->add_option("--psf-fwhm-um", proj_fwhm, "PSF FWHM (um)");
  project->add_option("--max-depth-uK", proj_depth, "Full-power depth (uK kB)");
  project->add_option("--psf-model", proj_model, "gaussian|airy");
  project->add_option("--threads", proj_threads, "Worker threads");

  // trap
  double trap_spacing = 8.0, trap_freq = 810.0;
  std::string trap_out;
  auto* trap = app.add_subcommand("trap", "Planar-trap diagnostics");
  trap->add_option("--fringe-spacing-um", trap_spacing, "Fringe spacing (um)");
  trap->add_option("--vertical-freq-hz", trap_freq, "Target vertical frequency (Hz)");
  trap->add_option("--out", trap_out, "Directory for vertical_profile.csv");

  // analyze
  std::string analyze_dir;
  auto* analyze = app.add_subcommand("analyze", "Re-run analyses on a saved run directory");
  analyze->add_option("--run", analyze_dir, "Run directory")->required();

  // preset
  std::string preset_name, preset_out;
  auto* preset = app.add_subcommand("preset", "Emit a ready-to-run config");
  preset->add_option("name", preset_name,
                     "expansion|dumbbell|ring|kiwi|mtf|fringe-stability")->required();
  preset->add_option("--out", preset_out, "Write to file instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return cmd_run(run_config, run_out,
                   run->count("--seed") ? std::optional<std::uint64_t>(seed_flag) : std::nullopt,
                   run->count("--threads") ? std::optional<int>(threads_flag) : std::nullopt);
  }
  if (project->parsed()) {
    return cmd_project(proj_pattern, proj_out, proj_pitch, proj_mag, proj_fwhm, proj_depth,
                       proj_model, proj_threads);
  }
  if (trap->parsed()) return cmd_trap(trap_spacing, trap_freq, trap_out);
  if (analyze->parsed()) {
    try {
      const atomplane::ScenarioOutcome outcome = atomplane::reanalyze_run(analyze_dir);
      std::cout << "report: " << (std::filesystem::path(analyze_dir) / "report.json").string()
                << "\n";
      return outcome.exit_code;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
  }
  if (preset->parsed()) {
    try {
      const json cfg = atomplane::preset_config(preset_name);
      if (preset_out.empty()) {
        std::cout << cfg.dump(2) << "\n";
      } else {
        std::ofstream(preset_out) << cfg.dump(2) << "\n";
        std::cout << "wrote " << preset_out << "\n";
      }
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  return 0;
}
