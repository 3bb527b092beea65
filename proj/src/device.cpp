#include "ffsim/device.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace ffsim {
namespace {

bool is_pow2(uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

uint64_t get_u64(const uint8_t*& p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  p += 8;
  return v;
}

constexpr char kImageMagic[8] = {'F', 'L', 'S', 'H', 'S', 'I', 'M', '1'};

}  // namespace

void FlashGeometry::validate() const {
  if (num_blocks < 2) throw Error(ErrorCode::InvalidGeometry, "num_blocks must be >= 2");
  if (pages_per_block < 1 || pages_per_block > 1024)
    throw Error(ErrorCode::InvalidGeometry, "pages_per_block must be in [1, 1024]");
  if (page_size < 512 || !is_pow2(page_size))
    throw Error(ErrorCode::InvalidGeometry, "page_size must be a power of two >= 512");
  if (oob_size < 16) throw Error(ErrorCode::InvalidGeometry, "oob_size must be >= 16");
  if (endurance_limit < 1) throw Error(ErrorCode::InvalidGeometry, "endurance_limit must be >= 1");
  if (bit_error_rate < 0.0 || bit_error_rate > 1.0)
    throw Error(ErrorCode::InvalidGeometry, "bit_error_rate must be in [0, 1]");
}

FlashDevice::FlashDevice(const FlashGeometry& geom, uint64_t seed, double factory_bad_fraction)
    : geom_(geom), seed_(seed), rng_(seed) {
  geom_.validate();
  if (factory_bad_fraction < 0.0 || factory_bad_fraction > 0.5)
    throw Error(ErrorCode::InvalidGeometry, "factory_bad_fraction must be in [0, 0.5]");

  blocks_.resize(geom_.num_blocks);
  for (auto& b : blocks_) {
    b.states.assign(geom_.pages_per_block, PageState::Free);
    b.data.resize(geom_.pages_per_block);
    b.oob.resize(geom_.pages_per_block);
  }

  // Factory bad blocks: exactly floor(fraction * num_blocks), never block 0,
  // drawn from the device PRNG so equal seeds give equal layouts.
  auto count = static_cast<uint32_t>(factory_bad_fraction * geom_.num_blocks);
  std::unordered_set<uint32_t> chosen;
  while (chosen.size() < count) {
    uint32_t candidate = 1 + static_cast<uint32_t>(next_u64() % (geom_.num_blocks - 1));
    chosen.insert(candidate);
  }
  for (uint32_t b : chosen) {
    blocks_[b].bad = BadKind::Factory;
    set_oob_bad_marker(b);
  }
}

uint64_t FlashDevice::next_u64() {
  ++rng_draws_;
  return rng_();
}

double FlashDevice::next_unit() {
  // 53-bit mantissa draw in [0, 1).
  return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

void FlashDevice::check_block(uint32_t block) const {
  if (block >= geom_.num_blocks) throw Error(ErrorCode::OutOfRange, "block index");
  if (blocks_[block].bad != BadKind::Good) throw Error(ErrorCode::BadBlockAccess, "bad block");
}

void FlashDevice::check_page(uint32_t block, uint32_t page) const {
  if (page >= geom_.pages_per_block) throw Error(ErrorCode::OutOfRange, "page index");
  (void)block;
}

void FlashDevice::note(char op, uint32_t block, uint32_t page, uint64_t dt) {
  counters_.simulated_time_us += dt;
  if (trace_enabled_) trace_.push_back({op, block, page, counters_.simulated_time_us});
}

void FlashDevice::set_oob_bad_marker(uint32_t block) {
  auto& oob0 = blocks_[block].oob[0];
  if (oob0.empty()) oob0.assign(geom_.oob_size, 0xFF);
  oob0[0] = 0x00;
}

void FlashDevice::arm_crash(const CrashPlan& plan) {
  if (crash_armed_ || crash_spent_)
    throw Error(ErrorCode::CrashAlreadyArmed, "one crash plan per device lifetime");
  crash_armed_ = true;
  crash_countdown_ = plan.trigger_op_index;
}

void FlashDevice::tick_crash(char op, uint32_t block, uint32_t page) {
  if (!crash_armed_) return;
  if (crash_countdown_ > 0) {
    --crash_countdown_;
    return;
  }
  crash_armed_ = false;
  crash_spent_ = true;
  // The interrupted operation's effect is applied by the caller for 'W' and
  // 'E'; reads lose power with no state change.
  (void)op;
  (void)block;
  (void)page;
}

void FlashDevice::program_page(uint32_t block, uint32_t page, std::span<const uint8_t> data,
                               std::span<const uint8_t> oob) {
  check_block(block);
  check_page(block, page);
  if (data.size() > geom_.page_size) throw Error(ErrorCode::Oversize, "data larger than page");
  if (oob.size() > geom_.oob_size) throw Error(ErrorCode::Oversize, "oob larger than spare area");
  Block& b = blocks_[block];
  if (b.states[page] != PageState::Free)
    throw Error(ErrorCode::RewriteWithoutErase, "page not erased");

  bool fires = crash_armed_ && crash_countdown_ == 0;
  tick_crash('W', block, page);

  b.data[page].assign(geom_.page_size, 0xFF);
  std::copy(data.begin(), data.end(), b.data[page].begin());
  b.oob[page].assign(geom_.oob_size, 0xFF);
  std::copy(oob.begin(), oob.end(), b.oob[page].begin());

  if (fires) {
    // The torn program leaves a deterministically damaged image: one flipped
    // bit guarantees any checksum over the record fails.
    b.data[page][0] ^= 0x01;
    b.states[page] = PageState::Corrupt;
    counters_.page_writes += 1;
    note('W', block, page, geom_.t_prog_us);
    throw PowerLoss();
  }

  b.states[page] = PageState::Programmed;
  counters_.page_writes += 1;
  note('W', block, page, geom_.t_prog_us);
}

FlashDevice::PageImage FlashDevice::read_page(uint32_t block, uint32_t page) {
  check_block(block);
  check_page(block, page);

  bool fires = crash_armed_ && crash_countdown_ == 0;
  tick_crash('R', block, page);
  if (fires) throw PowerLoss();

  Block& b = blocks_[block];
  PageImage img;
  img.data = b.data[page].empty() ? std::vector<uint8_t>(geom_.page_size, 0xFF) : b.data[page];
  img.oob = b.oob[page].empty() ? std::vector<uint8_t>(geom_.oob_size, 0xFF) : b.oob[page];

  if (geom_.bit_error_rate > 0.0 && b.states[page] == PageState::Programmed) {
    if (next_unit() < geom_.bit_error_rate) {
      uint64_t bit = next_u64() % (uint64_t(geom_.page_size) * 8);
      img.data[bit / 8] ^= uint8_t(1u << (bit % 8));
    }
  }

  counters_.page_reads += 1;
  note('R', block, page, geom_.t_read_us);
  return img;
}

void FlashDevice::erase_block(uint32_t block) {
  check_block(block);

  bool fires = crash_armed_ && crash_countdown_ == 0;
  tick_crash('E', block, 0);

  // Erase is atomic at completion with the count recorded first, so a crash
  // mid-erase still yields a fully erased block.
  Block& b = blocks_[block];
  b.erase_count += 1;
  for (uint32_t p = 0; p < geom_.pages_per_block; ++p) {
    b.states[p] = PageState::Free;
    b.data[p].clear();
    b.data[p].shrink_to_fit();
    b.oob[p].clear();
    b.oob[p].shrink_to_fit();
  }
  counters_.block_erases += 1;
  note('E', block, 0, geom_.t_erase_us);
  if (b.erase_count >= geom_.endurance_limit) {
    b.bad = BadKind::Worn;
    set_oob_bad_marker(block);
  }
  if (fires) throw PowerLoss();
}

void FlashDevice::mark_bad(uint32_t block) {
  if (block >= geom_.num_blocks) throw Error(ErrorCode::OutOfRange, "block index");
  Block& b = blocks_[block];
  if (b.bad != BadKind::Good) return;
  set_oob_bad_marker(block);
  b.bad = BadKind::Worn;
}

bool FlashDevice::is_bad(uint32_t block) const {
  if (block >= geom_.num_blocks) throw Error(ErrorCode::OutOfRange, "block index");
  return blocks_[block].bad != BadKind::Good;
}

BadKind FlashDevice::bad_kind(uint32_t block) const {
  if (block >= geom_.num_blocks) throw Error(ErrorCode::OutOfRange, "block index");
  return blocks_[block].bad;
}

PageState FlashDevice::page_state(uint32_t block, uint32_t page) const {
  if (block >= geom_.num_blocks) throw Error(ErrorCode::OutOfRange, "block index");
  if (page >= geom_.pages_per_block) throw Error(ErrorCode::OutOfRange, "page index");
  return blocks_[block].states[page];
}

uint64_t FlashDevice::erase_count(uint32_t block) const {
  if (block >= geom_.num_blocks) throw Error(ErrorCode::OutOfRange, "block index");
  return blocks_[block].erase_count;
}

std::vector<uint64_t> FlashDevice::erase_histogram() const {
  std::vector<uint64_t> hist(geom_.num_blocks);
  for (uint32_t b = 0; b < geom_.num_blocks; ++b) hist[b] = blocks_[b].erase_count;
  return hist;
}

uint64_t FlashDevice::wear_spread() const {
  uint64_t lo = UINT64_MAX, hi = 0;
  bool any = false;
  for (const auto& b : blocks_) {
    if (b.bad != BadKind::Good) continue;
    any = true;
    lo = std::min(lo, b.erase_count);
    hi = std::max(hi, b.erase_count);
  }
  if (!any) throw Error(ErrorCode::DeviceTooSmall, "no good blocks left");
  return hi - lo;
}

uint32_t FlashDevice::good_block_count() const {
  uint32_t n = 0;
  for (const auto& b : blocks_)
    if (b.bad == BadKind::Good) ++n;
  return n;
}

void FlashDevice::dump(const std::string& path) const {
  std::string out;
  out.reserve(64 + blocks_.size() * (9 + geom_.pages_per_block * (1 + geom_.page_size + geom_.oob_size)));
  out.append(kImageMagic, sizeof(kImageMagic));
  put_u64(out, geom_.num_blocks);
  put_u64(out, geom_.pages_per_block);
  put_u64(out, geom_.page_size);
  put_u64(out, geom_.oob_size);
  put_u64(out, geom_.endurance_limit);
  put_u64(out, geom_.t_read_us);
  put_u64(out, geom_.t_prog_us);
  put_u64(out, geom_.t_erase_us);
  uint64_t ber_bits;
  static_assert(sizeof(ber_bits) == sizeof(geom_.bit_error_rate));
  std::memcpy(&ber_bits, &geom_.bit_error_rate, 8);
  put_u64(out, ber_bits);
  put_u64(out, seed_);
  put_u64(out, rng_draws_);

  for (const auto& b : blocks_) {
    put_u64(out, b.erase_count);
    out.push_back(static_cast<char>(b.bad));
    for (uint32_t p = 0; p < geom_.pages_per_block; ++p) {
      out.push_back(static_cast<char>(b.states[p]));
      if (b.data[p].empty())
        out.append(geom_.page_size, char(0xFF));
      else
        out.append(reinterpret_cast<const char*>(b.data[p].data()), geom_.page_size);
      if (b.oob[p].empty())
        out.append(geom_.oob_size, char(0xFF));
      else
        out.append(reinterpret_cast<const char*>(b.oob[p].data()), geom_.oob_size);
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::BadImage, "cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::BadImage, "short write to " + path);
}

FlashDevice FlashDevice::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::BadImage, "cannot open " + path);
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (raw.size() < sizeof(kImageMagic) + 11 * 8 ||
      std::memcmp(raw.data(), kImageMagic, sizeof(kImageMagic)) != 0)
    throw Error(ErrorCode::BadImage, "not a flash image");

  const uint8_t* p = reinterpret_cast<const uint8_t*>(raw.data()) + sizeof(kImageMagic);
  FlashGeometry g;
  g.num_blocks = static_cast<uint32_t>(get_u64(p));
  g.pages_per_block = static_cast<uint32_t>(get_u64(p));
  g.page_size = static_cast<uint32_t>(get_u64(p));
  g.oob_size = static_cast<uint32_t>(get_u64(p));
  g.endurance_limit = static_cast<uint32_t>(get_u64(p));
  g.t_read_us = get_u64(p);
  g.t_prog_us = get_u64(p);
  g.t_erase_us = get_u64(p);
  uint64_t ber_bits = get_u64(p);
  std::memcpy(&g.bit_error_rate, &ber_bits, 8);
  uint64_t seed = get_u64(p);
  uint64_t draws = get_u64(p);

  g.validate();
  uint64_t per_block = 9 + uint64_t(g.pages_per_block) * (1 + g.page_size + g.oob_size);
  uint64_t expect = sizeof(kImageMagic) + 11 * 8 + uint64_t(g.num_blocks) * per_block;
  if (raw.size() != expect) throw Error(ErrorCode::BadImage, "truncated flash image");

  FlashDevice dev(g, seed, 0.0);
  // Replay the stream position so post-load bit-error draws continue where
  // the dumped device stopped.
  dev.rng_.seed(seed);
  dev.rng_.discard(draws);
  dev.rng_draws_ = draws;

  for (uint32_t bi = 0; bi < g.num_blocks; ++bi) {
    Block& b = dev.blocks_[bi];
    b.erase_count = get_u64(p);
    uint8_t bad = *p++;
    if (bad > 2) throw Error(ErrorCode::BadImage, "bad-flag byte out of range");
    b.bad = static_cast<BadKind>(bad);
    for (uint32_t page = 0; page < g.pages_per_block; ++page) {
      uint8_t st = *p++;
      if (st > 2) throw Error(ErrorCode::BadImage, "page-state byte out of range");
      b.states[page] = static_cast<PageState>(st);
      bool data_blank = true, oob_blank = true;
      for (uint32_t i = 0; i < g.page_size; ++i)
        if (p[i] != 0xFF) { data_blank = false; break; }
      if (!data_blank) b.data[page].assign(p, p + g.page_size);
      p += g.page_size;
      for (uint32_t i = 0; i < g.oob_size; ++i)
        if (p[i] != 0xFF) { oob_blank = false; break; }
      if (!oob_blank) b.oob[page].assign(p, p + g.oob_size);
      p += g.oob_size;
    }
  }
  return dev;
}

}  // namespace ffsim
