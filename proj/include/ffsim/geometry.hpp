#pragma once

#include <cstdint>

namespace ffsim {

// Shape and timing of a simulated NAND chip. Latencies are simulated
// microseconds per operation; no wall-clock time is ever measured.
struct FlashGeometry {
  uint32_t num_blocks = 1024;
  uint32_t pages_per_block = 64;
  uint32_t page_size = 2048;
  uint32_t oob_size = 64;
  uint32_t endurance_limit = 10000;
  uint64_t t_read_us = 25;
  uint64_t t_prog_us = 200;
  uint64_t t_erase_us = 1500;
  double bit_error_rate = 0.0;

  uint64_t total_pages() const { return uint64_t(num_blocks) * pages_per_block; }

  // Throws Error(InvalidGeometry) listing the first violated constraint.
  void validate() const;
};

}  // namespace ffsim
