#pragma once

#include <cstdint>
#include <istream>
#include <vector>

#include "atomplane/errors.hpp"
#include "atomplane/pgm.hpp"

namespace atomplane {

inline constexpr int kSlmWidth = 1280;
inline constexpr int kSlmHeight = 768;
inline constexpr double kSlmPixelPitch = 20e-6;  // m

// 8-bit grayscale frame at the modulator plane. Level -> relative intensity
// is linear (level/255) unless a 256-entry lookup table is installed; the
// device transfer curve is not published, so the LUT is a hook.
struct SlmPattern {
  int width = kSlmWidth;
  int height = kSlmHeight;
  double pixel_pitch = kSlmPixelPitch;
  std::vector<std::uint8_t> levels;       // row-major
  std::vector<double> intensity_lut;      // empty = linear level/255

  SlmPattern() : levels(static_cast<std::size_t>(kSlmWidth) * kSlmHeight, 0) {}
  SlmPattern(int w, int h, double pitch = kSlmPixelPitch)
      : width(w), height(h), pixel_pitch(pitch) {
    if (w <= 0 || h <= 0) throw InvalidArgumentError("SlmPattern: non-positive dimensions");
    if (!(pitch > 0.0)) throw InvalidArgumentError("SlmPattern: non-positive pixel pitch");
    levels.assign(static_cast<std::size_t>(w) * h, 0);
  }

  std::uint8_t& at(int ix, int iy) { return levels[static_cast<std::size_t>(iy) * width + ix]; }
  std::uint8_t at(int ix, int iy) const { return levels[static_cast<std::size_t>(iy) * width + ix]; }

  double relative_intensity(std::uint8_t level) const {
    if (!intensity_lut.empty()) {
      if (intensity_lut.size() != 256) throw InvalidArgumentError("intensity LUT must have 256 entries");
      return intensity_lut[level];
    }
    return level / 255.0;
  }
};

inline SlmPattern load_slm_pattern(std::istream& in) {
  const GrayImage img = read_pgm(in);
  SlmPattern p(img.width, img.height);
  p.levels = img.pixels;
  return p;
}

inline SlmPattern load_slm_pattern_file(const std::string& path) {
  const GrayImage img = read_pgm_file(path);
  SlmPattern p(img.width, img.height);
  p.levels = img.pixels;
  return p;
}

inline void save_slm_pattern_file(const std::string& path, const SlmPattern& p) {
  GrayImage img{p.width, p.height, p.levels};
  write_pgm_file(path, img);
}

// Stripe width of a grating of the given pitch: equal on/off stripes of
// ceil(pitch/2) pixels, so the full period is 2*ceil(pitch/2).
inline int grating_stripe_px(int pitch_px) { return (pitch_px + 1) / 2; }
inline int grating_period_px(int pitch_px) { return 2 * grating_stripe_px(pitch_px); }

// Binary vertical-stripe square wave, bright stripe starting at column
// -phase_px. pitch 2 alternates 255,0; pitch 2*nx is a half/half edge.
inline SlmPattern grating_pattern(int pitch_px, int phase_px = 0,
                                  int width = kSlmWidth, int height = kSlmHeight) {
  if (pitch_px < 1) throw InvalidArgumentError("grating_pattern: pitch must be >= 1 pixel");
  SlmPattern p(width, height);
  const int stripe = grating_stripe_px(pitch_px);
  const int period = 2 * stripe;
  for (int ix = 0; ix < width; ++ix) {
    const int phase = ((ix + phase_px) % period + period) % period;
    const std::uint8_t v = phase < stripe ? 255 : 0;
    for (int iy = 0; iy < height; ++iy) p.at(ix, iy) = v;
  }
  return p;
}

}  // namespace atomplane
