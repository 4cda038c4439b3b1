#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "atomplane/constants.hpp"
#include "atomplane/csvio.hpp"
#include "atomplane/grid.hpp"
#include "atomplane/pgm.hpp"
#include "atomplane/rng.hpp"
#include "atomplane/slm.hpp"

using namespace atomplane;
using Catch::Approx;

TEST_CASE("energy conversions hit the reference values") {
  // Boltzmann-constant definition
  CHECK(to_joule(kb_microkelvin(1.0)) == Approx(1.380649e-29).epsilon(1e-12));
  // h * 810 Hz in nK
  const EnergyValue e = convert_energy(hertz_times_h(810.0), EnergyUnit::kb_nanokelvin);
  CHECK(e.value == Approx(38.873868894).epsilon(1e-9));
  // zero maps to zero in any unit
  for (EnergyUnit u : {EnergyUnit::joule, EnergyUnit::kb_nanokelvin, EnergyUnit::hertz_times_h}) {
    CHECK(convert_energy(joules(0.0), u).value == 0.0);
  }
}

TEST_CASE("energy conversion round trips to 1e-12") {
  const double vals[] = {1e-31, 3.7e-29, 2.5e-23, 8.1e-19};
  for (double j : vals) {
    for (EnergyUnit u : {EnergyUnit::kb_nanokelvin, EnergyUnit::hertz_times_h}) {
      const EnergyValue there = convert_energy(joules(j), u);
      const EnergyValue back = convert_energy(there, EnergyUnit::joule);
      CHECK(back.value == Approx(j).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(parse_energy_unit("furlongs"), InvalidArgumentError);
}

TEST_CASE("physical constants must be positive") {
  CHECK_THROWS_AS(PhysicalConstants(0.0, 1, 1, 1, 1, 1, 1), InvalidArgumentError);
  const PhysicalConstants pc;
  CHECK(pc.mass_rb87() == Approx(1.44316e-25));
  CHECK(pc.lambda_pattern() == Approx(532e-9));
  CHECK(pc.lambda_trap() == Approx(1064e-9));
}

TEST_CASE("grid world/index mapping") {
  const Grid2D g(8, 5, 2e-6, -3e-6, 1e-6);
  SECTION("origin and one-step translation") {
    auto idx = g.world_to_index(-3e-6, 1e-6);
    REQUIRE(idx.has_value());
    CHECK(idx->first == 0);
    CHECK(idx->second == 0);
    idx = g.world_to_index(-3e-6 + 2e-6, 1e-6);
    REQUIRE(idx.has_value());
    CHECK(idx->first == 1);
    CHECK(idx->second == 0);
  }
  SECTION("out of bounds is an explicit signal") {
    CHECK_FALSE(g.world_to_index(1.0, 0.0).has_value());
    CHECK_THROWS_AS(g.world_to_index(NAN, 0.0), InvalidArgumentError);
  }
  SECTION("round trip is exact on all in-bounds indices") {
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const auto [x, y] = g.index_to_world(i, j);
        const auto idx = g.world_to_index(x, y);
        REQUIRE(idx.has_value());
        CHECK(idx->first == i);
        CHECK(idx->second == j);
      }
    }
  }
  SECTION("invalid construction rejected") {
    CHECK_THROWS_AS(Grid2D(0, 3, 1e-6), InvalidArgumentError);
    CHECK_THROWS_AS(Grid2D(3, 3, -1e-6), InvalidArgumentError);
  }
}

TEST_CASE("rng streams are deterministic") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.gaussian(), vb = b.gaussian(), vc = c.gaussian();
    all_equal = all_equal && va == vb;
    any_diff = any_diff || va != vc;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("pgm round trip and format errors") {
  GrayImage img{3, 2, {0, 128, 255, 7, 9, 11}};
  std::stringstream ss;
  write_pgm(ss, img);
  const GrayImage back = read_pgm(ss);
  CHECK(back.width == 3);
  CHECK(back.height == 2);
  CHECK(back.pixels == img.pixels);

  std::stringstream bad16("P5\n2 2\n65535\n........");
  CHECK_THROWS_AS(read_pgm(bad16), FormatError);
  std::stringstream badmagic("P6\n2 2\n255\n....");
  CHECK_THROWS_AS(read_pgm(badmagic), FormatError);
  std::stringstream truncated("P5\n4 4\n255\nxy");
  CHECK_THROWS_AS(read_pgm(truncated), FormatError);
}

TEST_CASE("slm patterns load with device defaults and LUT hook") {
  SlmPattern p;
  CHECK(p.width == 1280);
  CHECK(p.height == 768);
  CHECK(p.pixel_pitch == Approx(20e-6));
  CHECK(p.relative_intensity(0) == 0.0);
  CHECK(p.relative_intensity(255) == 1.0);
  CHECK(p.relative_intensity(51) == Approx(0.2));
  p.intensity_lut.assign(256, 0.5);
  CHECK(p.relative_intensity(17) == 0.5);

  GrayImage img{4, 2, {255, 0, 255, 0, 0, 255, 0, 255}};
  std::stringstream ss;
  write_pgm(ss, img);
  const SlmPattern q = load_slm_pattern(ss);
  CHECK(q.width == 4);
  CHECK(q.levels == img.pixels);  // checkerboard preserved bit-exactly
}

TEST_CASE("grating pattern geometry") {
  SECTION("pitch 2 alternates full-range columns") {
    const SlmPattern g = grating_pattern(2, 0, 8, 2);
    for (int i = 0; i < 8; ++i) {
      CHECK(g.at(i, 0) == (i % 2 == 0 ? 255 : 0));
    }
  }
  SECTION("pitch 1 alternates with stripe width 1") {
    const SlmPattern g = grating_pattern(1, 0, 8, 1);
    for (int i = 0; i < 8; ++i) CHECK(g.at(i, 0) == (i % 2 == 0 ? 255 : 0));
  }
  SECTION("pitch 2*nx gives a half bright, half dark edge") {
    const int nx = 16;
    const SlmPattern g = grating_pattern(2 * nx, 0, nx, 1);
    for (int i = 0; i < nx; ++i) CHECK(g.at(i, 0) == 255);
    const SlmPattern h = grating_pattern(2 * nx, -nx, nx, 1);
    for (int i = 0; i < nx; ++i) CHECK(h.at(i, 0) == 0);
  }
  SECTION("phase shifts the stripes") {
    const SlmPattern g = grating_pattern(4, 2, 8, 1);
    CHECK(g.at(0, 0) == 0);
    CHECK(g.at(2, 0) == 255);
  }
  CHECK_THROWS_AS(grating_pattern(0), InvalidArgumentError);
}

TEST_CASE("field csv round trip preserves bits") {
  Grid2D g(4, 3, 0.5e-6, -1e-6, 2e-6);
  ScalarField f(g);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) f(i, j) = std::sin(i * 3.7 + j * 1.3) * 1e-29;
  std::stringstream ss;
  write_field_csv(ss, f, "kB_nK");
  const FieldCsv back = read_field_csv(ss);
  CHECK(back.unit == "kB_nK");
  CHECK(back.field.grid().nx == 4);
  CHECK(back.field.grid().pitch == f.grid().pitch);
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 4; ++i) CHECK(back.field(i, j) == f(i, j));
}

TEST_CASE("rebin conserves mass and halves resolution") {
  Grid2D g(8, 8, 1e-6);
  ScalarField f(g, 1.0);
  const ScalarField c = rebin(f, 2);
  CHECK(c.grid().nx == 4);
  CHECK(field_sum(c) == Approx(field_sum(f)));
  CHECK_THROWS_AS(rebin(f, 3), InvalidArgumentError);
}
