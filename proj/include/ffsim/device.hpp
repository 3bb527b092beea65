#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ffsim/errors.hpp"
#include "ffsim/geometry.hpp"

namespace ffsim {

enum class PageState : uint8_t { Free = 0, Programmed = 1, Corrupt = 2 };
enum class BadKind : uint8_t { Good = 0, Factory = 1, Worn = 2 };

struct TraceCounters {
  uint64_t page_reads = 0;
  uint64_t page_writes = 0;
  uint64_t block_erases = 0;
  uint64_t simulated_time_us = 0;
};

struct TraceEvent {
  char op;  // 'R', 'W' or 'E'
  uint32_t block;
  uint32_t page;  // 0 for erases
  uint64_t time_us;
};

// Fires PowerLoss on the (trigger_op_index + 1)-th flash operation after
// arming. At most one plan per device lifetime.
struct CrashPlan {
  uint64_t trigger_op_index = 0;
};

// Deterministic NAND chip model: program/read at page granularity, erase at
// block granularity, erase-before-write enforced, endurance tracked per
// block. All behavior (including factory bad blocks and injected bit errors)
// derives from the geometry and the creation seed.
class FlashDevice {
 public:
  FlashDevice(const FlashGeometry& geom, uint64_t seed, double factory_bad_fraction = 0.0);

  struct PageImage {
    std::vector<uint8_t> data;
    std::vector<uint8_t> oob;
  };

  // Writes data/oob (padded with 0xFF) to a Free page of a good block.
  void program_page(uint32_t block, uint32_t page, std::span<const uint8_t> data,
                    std::span<const uint8_t> oob);

  // Returns a copy of the page. Free pages read as all 0xFF. When
  // bit_error_rate > 0, a read of a Programmed page flips one uniformly
  // chosen data bit of the copy with that probability (stored bytes remain
  // intact). Corrupt pages return the stored image, which the crash handler
  // already damaged.
  PageImage read_page(uint32_t block, uint32_t page);

  // Resets all pages of a good block to Free and bumps its erase count.
  // Reaching the endurance limit marks the block worn-bad after the erase
  // completes.
  void erase_block(uint32_t block);

  void mark_bad(uint32_t block);
  bool is_bad(uint32_t block) const;
  BadKind bad_kind(uint32_t block) const;

  void arm_crash(const CrashPlan& plan);
  bool crash_armed() const { return crash_armed_; }

  const FlashGeometry& geometry() const { return geom_; }
  const TraceCounters& counters() const { return counters_; }
  uint64_t seed() const { return seed_; }

  PageState page_state(uint32_t block, uint32_t page) const;
  uint64_t erase_count(uint32_t block) const;
  std::vector<uint64_t> erase_histogram() const;

  // max - min erase count over good blocks; requires at least one good block.
  uint64_t wear_spread() const;

  uint32_t good_block_count() const;

  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  const std::vector<TraceEvent>& trace_log() const { return trace_; }

  // Binary image round-trip. Persists geometry, seed, RNG position, per-block
  // erase counts and bad flags, per-page state and contents. Trace counters
  // and any armed crash plan are runtime-only and reset on load.
  void dump(const std::string& path) const;
  static FlashDevice load(const std::string& path);

 private:
  struct Block {
    uint64_t erase_count = 0;
    BadKind bad = BadKind::Good;
    std::vector<PageState> states;
    // Lazily allocated per page: empty vector means "reads as 0xFF".
    std::vector<std::vector<uint8_t>> data;
    std::vector<std::vector<uint8_t>> oob;
  };

  void check_block(uint32_t block) const;
  void check_page(uint32_t block, uint32_t page) const;
  void tick_crash(char op, uint32_t block, uint32_t page);
  void note(char op, uint32_t block, uint32_t page, uint64_t dt);
  uint64_t next_u64();
  double next_unit();
  void set_oob_bad_marker(uint32_t block);

  FlashGeometry geom_;
  uint64_t seed_;
  std::mt19937_64 rng_;
  uint64_t rng_draws_ = 0;
  std::vector<Block> blocks_;
  TraceCounters counters_;
  bool trace_enabled_ = false;
  std::vector<TraceEvent> trace_;
  bool crash_armed_ = false;
  bool crash_spent_ = false;
  uint64_t crash_countdown_ = 0;
};

}  // namespace ffsim
