#include "splitreloc/frame.hpp"

#include <cstring>
#include <fstream>

#include "splitreloc/errors.hpp"
#include "splitreloc/rng.hpp"

namespace splitreloc {

Frame synthetic_frame(uint32_t height, uint32_t width, uint64_t seed,
                      uint64_t frame_index) {
  Frame f;
  f.height = height;
  f.width = width;
  size_t n = static_cast<size_t>(height) * width * 3;
  f.rgb.resize(n);
  SplitMix64 rng(stream_key(seed, frame_index));
  size_t i = 0;
  while (i + 8 <= n) {
    uint64_t r = rng.next_u64();
    for (int b = 0; b < 8; ++b) f.rgb[i++] = static_cast<uint8_t>(r >> (8 * b));
  }
  if (i < n) {
    uint64_t r = rng.next_u64();
    for (int b = 0; i < n; ++b) f.rgb[i++] = static_cast<uint8_t>(r >> (8 * b));
  }
  return f;
}

namespace {

// Reads one PPM header token, skipping whitespace and '#' comment lines.
std::string ppm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok += static_cast<char>(c);
  }
  return tok;
}

}  // namespace

Frame load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open ppm: " + path);
  if (ppm_token(in) != "P6") raise(Errc::parse_error, "not a binary P6 ppm: " + path);
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(ppm_token(in));
    h = std::stol(ppm_token(in));
    maxval = std::stol(ppm_token(in));
  } catch (const std::exception&) {
    raise(Errc::parse_error, "bad ppm header: " + path);
  }
  if (w <= 0 || h <= 0 || maxval != 255) {
    raise(Errc::parse_error, "unsupported ppm dimensions or maxval: " + path);
  }
  Frame f;
  f.width = static_cast<uint32_t>(w);
  f.height = static_cast<uint32_t>(h);
  f.rgb.resize(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(f.rgb.data()), static_cast<std::streamsize>(f.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(f.rgb.size())) {
    raise(Errc::parse_error, "truncated ppm payload: " + path);
  }
  return f;
}

void save_ppm(const Frame& frame, const std::string& path) {
  if (frame.rgb.size() != static_cast<size_t>(frame.height) * frame.width * 3) {
    raise(Errc::invalid_argument, "frame byte count does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io_error, "cannot write ppm: " + path);
  out << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.rgb.data()),
            static_cast<std::streamsize>(frame.rgb.size()));
  if (!out) raise(Errc::io_error, "write failed: " + path);
}

}  // namespace splitreloc
