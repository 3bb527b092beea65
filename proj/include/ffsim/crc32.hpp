#pragma once

#include <cstddef>
#include <cstdint>

namespace ffsim {

// Standard CRC-32 (polynomial 0x04C11DB7, reflected, init/final 0xFFFFFFFF).
// crc32("123456789") == 0xCBF43926.
uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);

}  // namespace ffsim
