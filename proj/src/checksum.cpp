#include "splitreloc/checksum.hpp"

#include <zlib.h>

namespace splitreloc {

uint32_t crc32_ieee(const void* data, size_t len, uint32_t crc) {
  return static_cast<uint32_t>(
      ::crc32(crc, static_cast<const Bytef*>(data), static_cast<uInt>(len)));
}

}  // namespace splitreloc
