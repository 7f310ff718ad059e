#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace splitreloc {

// Interleaved 8-bit RGB image, row-major.
struct Frame {
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<uint8_t> rgb;  // height * width * 3 bytes
};

// Deterministic pseudo-random frame: pixel bytes come from the splitmix64
// stream keyed by (seed, frame_index), eight bytes per draw, little-endian.
Frame synthetic_frame(uint32_t height, uint32_t width, uint64_t seed,
                      uint64_t frame_index);

// Binary PPM (P6, maxval 255).
Frame load_ppm(const std::string& path);
void save_ppm(const Frame& frame, const std::string& path);

}  // namespace splitreloc
