#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "atomplane/errors.hpp"

namespace atomplane {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, top row first
};

namespace detail {

// Skips whitespace and '#' comment lines between header tokens.
inline int next_pnm_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      if (!tok.empty()) return 0;
    } else {
      tok.push_back(static_cast<char>(c));
    }
    c = in.get();
  }
  return tok.empty() ? -1 : 0;
}

}  // namespace detail

// Binary 8-bit portable graymap (magic "P5", maxval 255).
inline GrayImage read_pgm(std::istream& in) {
  std::string tok;
  if (detail::next_pnm_token(in, tok) != 0 || tok != "P5") {
    throw FormatError("graymap: expected magic P5");
  }
  long vals[3];
  for (int k = 0; k < 3; ++k) {
    if (detail::next_pnm_token(in, tok) != 0) throw FormatError("graymap: truncated header");
    try {
      std::size_t pos = 0;
      vals[k] = std::stol(tok, &pos);
      if (pos != tok.size()) throw FormatError("graymap: bad header token '" + tok + "'");
    } catch (const std::logic_error&) {
      throw FormatError("graymap: bad header token '" + tok + "'");
    }
  }
  const long w = vals[0], h = vals[1], maxval = vals[2];
  if (w <= 0 || h <= 0) throw FormatError("graymap: non-positive dimensions");
  if (maxval != 255) throw FormatError("graymap: only 8-bit (maxval 255) supported");
  GrayImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size())) {
    throw FormatError("graymap: truncated pixel payload");
  }
  return img;
}

inline GrayImage read_pgm_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("graymap: cannot open " + path);
  return read_pgm(f);
}

inline void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_pgm_file(const std::string& path, const GrayImage& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("graymap: cannot open " + path + " for writing");
  write_pgm(f, img);
}

}  // namespace atomplane
