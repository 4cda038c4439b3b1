#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atomplane/optics.hpp"

using namespace atomplane;
using Catch::Approx;

namespace {

ImagingSystem default_sys() { return ImagingSystem{}; }

// Independent oracle: square wave of the given period blurred by a gaussian,
// evaluated with erf sums (see the analytic convolution of stripe indicators).
double blurred_square_contrast(double period, double fwhm) {
  const double sig = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const double s2 = sig * std::sqrt(2.0);
  auto val = [&](double x) {
    double tot = 0.0;
    for (int k = -80; k <= 80; ++k) {
      const double a = k * period - 0.25 * period;
      const double b = k * period + 0.25 * period;
      tot += 0.5 * (std::erf((b - x) / s2) - std::erf((a - x) / s2));
    }
    return tot;
  };
  const double vmax = val(0.0), vmin = val(0.5 * period);
  return (vmax - vmin) / (vmax + vmin);
}

}  // namespace

TEST_CASE("psf kernel normalization and delta limit") {
  const ImagingSystem sys = default_sys();
  const PsfKernel k = psf_kernel(sys, 0.1e-6);
  REQUIRE(k.separable);
  double sum = 0.0;
  for (double t : k.taps1d) sum += t;
  CHECK(sum == Approx(1.0).epsilon(1e-6));

  ImagingSystem tiny = sys;
  tiny.psf_fwhm = 0.005e-6;  // <= pitch/10
  const PsfKernel d = psf_kernel(tiny, 0.1e-6);
  CHECK(d.is_delta());

  CHECK_THROWS_AS(psf_kernel(sys, 0.5e-6), SamplingError);  // pitch > fwhm/3
}

TEST_CASE("airy kernel first zero sits at 1.185 fwhm") {
  CHECK(kAiryFirstZeroX / (2.0 * kAiryHalfMaxX) == Approx(1.1853).epsilon(1e-3));
  CHECK(airy_first_zero_radius(0.9e-6) == Approx(1.0668e-6).epsilon(1e-3));
  // sanity of the intensity profile itself
  CHECK(airy_intensity(0.0) == 1.0);
  CHECK(airy_intensity(kAiryHalfMaxX) == Approx(0.5).epsilon(1e-6));
  CHECK(std::abs(airy_intensity(kAiryFirstZeroX)) < 1e-9);

  ImagingSystem sys = default_sys();
  sys.psf_model = PsfModel::airy;
  const PsfKernel k = psf_kernel(sys, 0.1e-6);
  REQUIRE_FALSE(k.separable);
  double sum = 0.0;
  for (double t : k.taps2d) sum += t;
  CHECK(sum == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("convolution conserves integrated intensity for interior patterns") {
  const Grid2D g = Grid2D::centered(120, 100, 0.1e-6);
  ScalarField f(g);
  // compact blob well away from edges
  for (int j = 40; j < 60; ++j)
    for (int i = 50; i < 70; ++i) f(i, j) = 1.0 + 0.3 * std::sin(i * 0.8) * std::cos(j * 1.1);
  const double before = field_sum(f);
  for (PsfModel model : {PsfModel::gaussian, PsfModel::airy}) {
    ImagingSystem sys = default_sys();
    sys.psf_model = model;
    const ScalarField out = convolve(f, psf_kernel(sys, g.pitch), 2);
    CHECK(field_sum(out) == Approx(before).epsilon(1e-6));
  }
}

TEST_CASE("projection reproduces the calibrated depth and linearity") {
  ImagingSystem sys = default_sys();
  const Grid2D target = Grid2D::centered(200, 160, 0.5e-6);

  SECTION("uniform 255 pattern gives a uniform 2.5 uK interior") {
    SlmPattern p;
    std::fill(p.levels.begin(), p.levels.end(), std::uint8_t{255});
    const ScalarField u = project_to_atom_plane(p, sys, target);
    const double depth = to_joule(sys.max_depth);
    CHECK(u(100, 80) == Approx(depth).epsilon(1e-9));
    CHECK(u(40, 40) == Approx(depth).epsilon(1e-9));
    CHECK(field_max(u) <= depth * (1.0 + 1e-12));
    CHECK(field_min(u) >= 0.0);
  }

  SECTION("projection is linear in pattern intensity") {
    SlmPattern p;
    for (int j = 300; j < 400; ++j)
      for (int i = 500; i < 700; ++i) p.at(i, j) = 255;
    SlmPattern half = p;
    half.intensity_lut.resize(256);
    for (int l = 0; l < 256; ++l) half.intensity_lut[l] = 0.5 * (l / 255.0);
    const ScalarField u1 = project_to_atom_plane(p, sys, target);
    const ScalarField u2 = project_to_atom_plane(half, sys, target);
    for (std::size_t k = 0; k < u1.size(); ++k) {
      CHECK(u2.raw()[k] == Approx(0.5 * u1.raw()[k]).margin(1e-9 * to_joule(sys.max_depth)));
    }
  }

  SECTION("target pitch coarser than the projected pixel is rejected") {
    const Grid2D coarse = Grid2D::centered(64, 64, 1.0e-6);  // pixel footprint is 0.72 um
    CHECK_THROWS_AS(project_to_atom_plane(SlmPattern(), sys, coarse), SamplingError);
  }
}

TEST_CASE("single bright pixel maps to a ~0.9 um spot") {
  ImagingSystem sys = default_sys();
  const Grid2D target = Grid2D::centered(240, 240, 0.09e-6);
  SlmPattern p;
  p.at(p.width / 2, p.height / 2) = 255;
  const ScalarField u = project_to_atom_plane(p, sys, target);
  // locate the peak, then the half-maximum width along x
  int pi = 0, pj = 0;
  double peak = -1.0;
  for (int j = 0; j < target.ny; ++j)
    for (int i = 0; i < target.nx; ++i)
      if (u(i, j) > peak) {
        peak = u(i, j);
        pi = i;
        pj = j;
      }
  REQUIRE(peak > 0.0);
  double left = 0, right = 0;
  for (int i = pi; i >= 0; --i)
    if (u(i, pj) < 0.5 * peak) {
      left = target.x(i + 1);
      break;
    }
  for (int i = pi; i < target.nx; ++i)
    if (u(i, pj) < 0.5 * peak) {
      right = target.x(i - 1);
      break;
    }
  const double fwhm = right - left;
  // geometric image is 0.72 um; blurred spot should come out near 0.9 um
  CHECK(fwhm > 0.7e-6);
  CHECK(fwhm < 1.2e-6);
}

TEST_CASE("mtf contrast measurements match the analytic blur oracle") {
  ImagingSystem sys = default_sys();
  const double pitch = 0.09e-6;
  const PsfKernel kernel = psf_kernel(sys, pitch);
  const double periods[] = {7.2e-6, 3.6e-6, 2.16e-6, 1.44e-6, 0.72e-6};
  const double expected[] = {0.999995, 0.962937, 0.684670, 0.316969, 0.004890};
  std::vector<std::pair<double, ScalarField>> pairs;
  for (double period : periods) {
    const int nx = static_cast<int>(std::ceil((6.0 * period + 8e-6) / pitch));
    const Grid2D g = Grid2D::centered(nx, 96, pitch);
    pairs.emplace_back(period, convolve(ideal_grating_image(g, period), kernel));
  }
  const MtfCurve curve = mtf_from_images(pairs);
  REQUIRE(curve.samples.size() == 5);
  for (int k = 0; k < 5; ++k) {
    CHECK(curve.samples[k].period == Approx(periods[k]));
    CHECK(curve.samples[k].contrast == Approx(expected[k]).margin(0.01));
  }
  // monotone non-increasing as the period shrinks
  for (int k = 1; k < 5; ++k) {
    CHECK(curve.samples[k].contrast <= curve.samples[k - 1].contrast + 1e-12);
  }
}

TEST_CASE("mtf edge cases") {
  const Grid2D g = Grid2D::centered(200, 16, 0.1e-6);
  SECTION("perfect binary grating has unit contrast") {
    const MtfCurve c = mtf_from_images({{2e-6, ideal_grating_image(g, 2e-6)}});
    CHECK(c.samples[0].contrast == Approx(1.0));
    CHECK_FALSE(c.samples[0].flat_flagged);
  }
  SECTION("uniform image reports zero contrast with a flag") {
    ScalarField flat(g, 0.7);
    const MtfCurve c = mtf_from_images({{2e-6, flat}});
    CHECK(c.samples[0].contrast == 0.0);
    CHECK(c.samples[0].flat_flagged);
  }
  SECTION("fewer than three periods is rejected") {
    CHECK_THROWS_AS(mtf_from_images({{15e-6, ideal_grating_image(g, 15e-6)}}),
                    InvalidArgumentError);
  }
}

TEST_CASE("psf_from_mtf recovers a gaussian PSF from its analytic MTF") {
  const double fwhm = 0.9e-6;
  const double sig = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  MtfCurve curve;
  // samples uniform in frequency from near 0 to where the MTF is ~3e-4
  const int n = 20;
  for (int k = n; k >= 1; --k) {
    const double f = k * (1.0 / 0.6e-6) / n;
    curve.samples.push_back({1.0 / f, std::exp(-2.0 * M_PI * M_PI * sig * sig * f * f), false});
  }
  const PsfProfile prof = psf_from_mtf(curve);
  CHECK(prof.fwhm == Approx(fwhm).epsilon(0.05));
}

TEST_CASE("psf_from_mtf on the measured-resolution pipeline lands near 0.9 um") {
  // the five acceptance periods through a true 0.9 um gaussian
  const double periods[] = {7.2e-6, 3.6e-6, 2.16e-6, 1.44e-6, 0.72e-6};
  MtfCurve curve;
  for (double p : periods) curve.samples.push_back({p, blurred_square_contrast(p, 0.9e-6), false});
  const PsfProfile prof = psf_from_mtf(curve);
  // frozen from the python prototype: first_min 0.989 um, fwhm 0.816 um
  CHECK(prof.first_minimum == Approx(0.989e-6).epsilon(0.04));
  CHECK(prof.fwhm == Approx(0.816e-6).epsilon(0.04));
}

TEST_CASE("psf_from_mtf flat spectrum gives a delta-like psf") {
  MtfCurve curve;
  for (int k = 10; k >= 1; --k) curve.samples.push_back({1.0 / (k * 2e5), 1.0, false});
  const PsfProfile prof = psf_from_mtf(curve);
  CHECK(prof.fwhm <= 2.0 * prof.native_resolution);
}

TEST_CASE("psf_from_mtf input validation") {
  MtfCurve tiny;
  tiny.samples = {{2e-6, 0.5, false}, {1e-6, 0.2, false}};
  CHECK_THROWS_AS(psf_from_mtf(tiny), InvalidArgumentError);
  MtfCurve dup;
  dup.samples = {{2e-6, 0.9, false}, {2e-6, 0.8, false}, {1e-6, 0.4, false}, {0.5e-6, 0.1, false}};
  CHECK_THROWS_AS(psf_from_mtf(dup), InvalidArgumentError);
}

TEST_CASE("grating to psf round trip recovers the blur width within 15%") {
  ImagingSystem sys = default_sys();
  const double pitch = 0.09e-6;
  const PsfKernel kernel = psf_kernel(sys, pitch);
  std::vector<std::pair<double, ScalarField>> pairs;
  for (int px : {10, 5, 3, 2, 1}) {
    // SLM gratings at the device scale: period 2*ceil(px/2) pixels
    const double period = grating_period_px(px) * sys.atom_plane_pixel();
    const int nx = static_cast<int>(std::ceil((6.0 * period + 8e-6) / pitch));
    const Grid2D g = Grid2D::centered(nx, 64, pitch);
    pairs.emplace_back(period, convolve(ideal_grating_image(g, period), kernel));
  }
  // periods {14.4, 4.32(x2), 2.88, 1.44} contain duplicates after the
  // ceil(stripe) mapping; drop duplicates and add a sub-resolution period
  std::vector<std::pair<double, ScalarField>> unique;
  for (auto& pr : pairs) {
    bool dup = false;
    for (auto& u : unique) dup = dup || std::abs(u.first - pr.first) < 1e-12;
    if (!dup) unique.push_back(std::move(pr));
  }
  {
    const double period = 0.72e-6;
    const int nx = static_cast<int>(std::ceil((6.0 * period + 8e-6) / pitch));
    const Grid2D g = Grid2D::centered(nx, 64, pitch);
    unique.emplace_back(period, convolve(ideal_grating_image(g, period), kernel));
  }
  const MtfCurve curve = mtf_from_images(unique);
  const PsfProfile prof = psf_from_mtf(curve);
  CHECK(prof.fwhm == Approx(0.9e-6).epsilon(0.15));
}
