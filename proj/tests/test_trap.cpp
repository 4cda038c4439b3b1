#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atomplane/analysis.hpp"
#include "atomplane/trap.hpp"

using namespace atomplane;
using Catch::Approx;

TEST_CASE("fringe spacing from crossing angle") {
  // 6 degrees gives 10.17 um, not the paper's 8 um (documented inconsistency)
  CHECK(fringe_spacing_from_angle(1064e-9, 6.0 * M_PI / 180.0) ==
        Approx(10.165e-6).epsilon(1e-3));
  // counter-propagating limit
  CHECK(fringe_spacing_from_angle(1064e-9, M_PI) == Approx(532e-9).epsilon(1e-12));
  // inverse: 8 um needs ~7.63 degrees
  CHECK(crossing_angle_for_spacing(1064e-9, 8e-6) * 180.0 / M_PI ==
        Approx(7.626).epsilon(1e-3));
  CHECK_THROWS_AS(fringe_spacing_from_angle(1064e-9, 0.0), InvalidArgumentError);
  CHECK_THROWS_AS(fringe_spacing_from_angle(1064e-9, -1.0), InvalidArgumentError);
  // strictly decreasing in theta
  double prev = INFINITY;
  for (double deg = 1.0; deg <= 179.0; deg += 2.0) {
    const double d = fringe_spacing_from_angle(1064e-9, deg * M_PI / 180.0);
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("depth calibration inverts the analytic frequency") {
  const EnergyValue u0 = calibrate_depth_for_frequency(810.0, 8e-6);
  CHECK(convert_energy(u0, EnergyUnit::kb_nanokelvin).value == Approx(877.83).epsilon(1e-3));
  TrapConfig cfg;
  cfg.depth_u0 = u0;
  const VerticalFrequency f = vertical_trap_frequency(cfg);
  CHECK(f.analytic_hz == Approx(810.0).epsilon(1e-9));
  // quadrupling the depth doubles the frequency
  TrapConfig cfg4 = cfg;
  cfg4.depth_u0 = joules(4.0 * to_joule(u0));
  CHECK(vertical_trap_frequency(cfg4).analytic_hz == Approx(1620.0).epsilon(1e-9));
  // limit f -> 0
  CHECK(to_joule(calibrate_depth_for_frequency(1e-6, 8e-6)) < 1e-40);
  CHECK_THROWS_AS(calibrate_depth_for_frequency(-1.0, 8e-6), InvalidArgumentError);
}

TEST_CASE("curvature method agrees with analytic within 0.5% at 64 samples") {
  TrapConfig cfg;
  const VerticalFrequency f = vertical_trap_frequency(cfg, 64);
  CHECK(std::abs(f.curvature_hz - f.analytic_hz) / f.analytic_hz < 0.005);
  // convergence order >= 2: quadrupling the sampling cuts the error ~16x
  const VerticalFrequency f2 = vertical_trap_frequency(cfg, 256);
  const double e1 = std::abs(f.curvature_hz - f.analytic_hz);
  const double e2 = std::abs(f2.curvature_hz - f.analytic_hz);
  CHECK(e2 < e1 / 8.0);
  CHECK_THROWS_AS(vertical_trap_frequency(TrapConfig{.depth_u0 = joules(0.0)}),
                  InvalidArgumentError);
}

TEST_CASE("vertical profile fringe structure") {
  TrapConfig cfg;
  const double u0 = to_joule(cfg.depth_u0);
  SECTION("central minimum and node without gravity/envelope") {
    const VerticalProfile p =
        vertical_profile(cfg, 4.0 * cfg.fringe_spacing, 4097, {false, false});
    // z = 0 is the center sample
    CHECK(p.potential[2048] == Approx(-u0).epsilon(1e-12));
    // z = d/2 lies between fringes at exactly zero
    const int node = 2048 + 4096 / 8;
    CHECK(std::abs(p.potential[node]) < 1e-12 * u0);
  }
  SECTION("gravity-free profile is symmetric and periodic") {
    const VerticalProfile p =
        vertical_profile(cfg, 4.0 * cfg.fringe_spacing, 4097, {false, false});
    const int n = static_cast<int>(p.z.size());
    for (int i = 0; i < n; ++i) {
      CHECK(p.potential[i] == Approx(p.potential[n - 1 - i]).margin(1e-12 * u0));
    }
    // period d: 4096 samples over 4 fringes -> shift of 1024
    for (int i = 0; i + 1024 < n; ++i) {
      CHECK(p.potential[i] == Approx(p.potential[i + 1024]).margin(1e-9 * u0));
    }
  }
  SECTION("undersampling is rejected") {
    CHECK_THROWS_AS(vertical_profile(cfg, 10.0 * cfg.fringe_spacing, 32), SamplingError);
  }
  SECTION("with gravity the 2 uK trap keeps a depth of order 2 uK") {
    TrapConfig deep = cfg;
    deep.depth_u0 = kb_microkelvin(2.0);
    const EnergyValue eff = effective_trap_depth(deep);
    const double eff_uk = convert_energy(eff, EnergyUnit::kb_nanokelvin).value / 1e3;
    CHECK(eff_uk > 1.0);
    CHECK(eff_uk < 2.5);
  }
  SECTION("effective depth under gravity decreases with the fringe depth") {
    double prev = INFINITY;
    for (double uk : {2.0, 1.5, 1.0, 0.878, 0.6}) {
      TrapConfig c = cfg;
      c.depth_u0 = kb_microkelvin(uk);
      const double eff = to_joule(effective_trap_depth(c));
      CHECK(eff <= prev * (1.0 + 1e-9));
      prev = eff;
    }
    // gravity-dominated threshold: a very weak fringe holds nothing
    TrapConfig weak = cfg;
    weak.depth_u0 = kb_nanokelvin(100.0);
    CHECK(to_joule(effective_trap_depth(weak)) == 0.0);
  }
}

TEST_CASE("in-plane potential") {
  TrapConfig cfg;
  const Grid2D g = Grid2D::centered(31, 31, 20e-6);
  const ScalarField u = inplane_potential(cfg, g);
  SECTION("center is the zero minimum") { CHECK(u(15, 15) == 0.0); }
  SECTION("1 Hz at 300 um matches the hand-evaluated value") {
    const ScalarField row = inplane_potential(cfg, Grid2D(3, 3, 300e-6, -300e-6, -300e-6));
    // cell (2,1) sits at (300 um, 0)
    CHECK(row(2, 1) == Approx(2.5638e-31).epsilon(1e-3));
  }
  SECTION("f = 0 gives the free plane") {
    TrapConfig free_cfg = cfg;
    free_cfg.inplane_freq = 0.0;
    const ScalarField z = inplane_potential(free_cfg, g);
    CHECK(field_max(z) == 0.0);
  }
  SECTION("rotational symmetry on symmetric grids") {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        CHECK(u(i, j) == u(g.nx - 1 - i, j));
        CHECK(u(i, j) == u(j, i));
      }
  }
  SECTION("grid wider than 2x Rayleigh range is rejected") {
    CHECK_THROWS_AS(inplane_potential(cfg, Grid2D::centered(41, 41, 100e-6)),
                    InvalidArgumentError);
  }
}

TEST_CASE("dimensionality ratio") {
  CHECK(dimensionality_ratio(810.0, 8e-9) == Approx(4.859).epsilon(1e-3));
  CHECK(dimensionality_ratio(1620.0, 8e-9) ==
        Approx(2.0 * dimensionality_ratio(810.0, 8e-9)).epsilon(1e-12));
  CHECK(dimensionality_ratio(810.0, 8e-3) < 1e-4);  // classical limit
  CHECK_THROWS_AS(dimensionality_ratio(810.0, 0.0), InvalidArgumentError);
}

TEST_CASE("synthetic fringe images") {
  TrapConfig cfg;
  const double d = cfg.fringe_spacing;
  const Grid2D g(16, 512, d / 16.0, 0.0, -256.0 * d / 16.0);
  SECTION("maxima at z = 0 mod d for zero phase") {
    const ScalarField img = synthetic_fringe_image(cfg, 0.0, 0.0, g);
    // z = 0 is row 256
    const double center = img(8, 256);
    CHECK(center == Approx(1.5).epsilon(1e-12));
    // half a period away is the minimum
    CHECK(img(8, 256 + 8) == Approx(0.5).margin(1e-9));
  }
  SECTION("phase pi inverts the pattern") {
    const ScalarField a = synthetic_fringe_image(cfg, 0.0, 0.0, g);
    const ScalarField b = synthetic_fringe_image(cfg, M_PI, 0.0, g);
    for (int j = 0; j < g.ny; ++j) {
      CHECK(a(0, j) - 1.0 == Approx(-(b(0, j) - 1.0)).margin(1e-9));
    }
  }
  SECTION("undersampled grid is rejected") {
    CHECK_THROWS_AS(synthetic_fringe_image(cfg, 0.0, 0.0, Grid2D(8, 32, d / 4.0)),
                    SamplingError);
  }
}

TEST_CASE("ramp schedule hits the paper's loading anchors") {
  const RampSchedule r = RampSchedule::paper_loading(1.0);
  const BeamPowers p0 = apply_ramp(r, 0.0);
  CHECK(p0.co2 == 1.0);
  CHECK(p0.planar == 0.0);
  CHECK(p0.pattern == 0.0);
  const BeamPowers p1 = apply_ramp(r, 1.0);
  CHECK(p1.co2 == Approx(0.2));
  CHECK(p1.planar == Approx(1.0));
  CHECK(p1.pattern == 0.0);
  const BeamPowers p2 = apply_ramp(r, 1.12);
  CHECK(p2.co2 == 0.0);
  CHECK(p2.planar == 1.0);
  CHECK(p2.pattern == 1.0);
  const BeamPowers p3 = apply_ramp(r, 10.0);  // held past the schedule
  CHECK(p3.co2 == 0.0);
  CHECK(p3.pattern == 1.0);
  CHECK_THROWS_AS(apply_ramp(r, -0.1), InvalidArgumentError);
}

TEST_CASE("ramp output is continuous across segment boundaries") {
  const RampSchedule r = RampSchedule::paper_loading(0.7);
  for (double tb : {1.0, 1.1, 1.12}) {
    const BeamPowers before = r.at(tb - 1e-9);
    const BeamPowers after = r.at(tb + 1e-9);
    CHECK(before.co2 == Approx(after.co2).margin(1e-6));
    CHECK(before.planar == Approx(after.planar).margin(1e-6));
    CHECK(before.pattern == Approx(after.pattern).margin(1e-6));
  }
  RampSchedule bad;
  bad.co2 = {{0.0, 1.0, 0.0, 0.5}, {1.5, 2.0, 0.5, 0.0}};  // gap
  CHECK_THROWS_AS(bad.validate(), InvalidArgumentError);
}

TEST_CASE("fringe drift injected and recovered through the analysis fit") {
  TrapConfig cfg;
  const double d = cfg.fringe_spacing;
  const Grid2D g(8, 256, d / 16.0, 0.0, -128.0 * d / 16.0);
  // 15 deg/hour over one simulated hour, one image per minute
  const double drift_rate = 15.0 * M_PI / 180.0 / 3600.0;
  std::vector<std::pair<double, ScalarField>> images;
  for (int k = 0; k <= 60; ++k) {
    const double t = 60.0 * k;
    images.emplace_back(t, synthetic_fringe_image(cfg, drift_rate * t, 0.0, g));
  }
  const auto series = phase_drift_series(images, d);
  const double recovered = (series.back().phase_unwrapped - series.front().phase_unwrapped);
  CHECK(recovered * 180.0 / M_PI == Approx(15.0).margin(1.0));
}
