#pragma once

#include <cstddef>
#include <cstdint>

namespace splitreloc {

// CRC-32 (IEEE 802.3 polynomial, reflected, init/final 0xFFFFFFFF) — the
// same function zlib exposes. Guards wire frames and golden activations.
uint32_t crc32_ieee(const void* data, size_t len, uint32_t crc = 0);

}  // namespace splitreloc
