#include "fs_internal.hpp"

#include <algorithm>
#include <cassert>

namespace ffsim {

bool all_ff(std::span<const uint8_t> bytes) {
  for (uint8_t b : bytes)
    if (b != 0xFF) return false;
  return true;
}

uint32_t checkpoint_region_blocks(uint32_t num_blocks) {
  return std::max<uint32_t>(2, num_blocks / 32);
}

uint32_t journal_region_blocks(uint32_t num_blocks) {
  return std::max<uint32_t>(2, num_blocks / 32);
}

std::vector<uint8_t> encode_meta(NodeKind kind, uint64_t size, const std::string& name) {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(kind));
  w.u64(size);
  w.str(name);
  return w.take();
}

std::optional<MetaPayload> decode_meta(std::span<const uint8_t> payload) {
  try {
    ByteReader r(payload);
    MetaPayload m;
    uint8_t k = r.u8();
    if (k != 1 && k != 2) return std::nullopt;
    m.kind = static_cast<NodeKind>(k);
    m.size = r.u64();
    m.name = r.str();
    if (!r.done()) return std::nullopt;
    return m;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::vector<std::string> split_path(const std::string& path) {
  if (path.empty() || path[0] != '/')
    throw Error(ErrorCode::InvalidPath, "path must be absolute: " + path);
  std::vector<std::string> parts;
  size_t i = 1;
  while (i <= path.size()) {
    size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    std::string comp = path.substr(i, j - i);
    if (!comp.empty()) {
      if (comp == "." || comp == ".." || comp.size() > 255 ||
          comp.find('\0') != std::string::npos)
        throw Error(ErrorCode::InvalidPath, "bad path component: " + comp);
      parts.push_back(std::move(comp));
    } else if (j < path.size()) {
      // interior empty component ("//") is rejected, trailing slash tolerated
      throw Error(ErrorCode::InvalidPath, "empty path component in " + path);
    }
    i = j + 1;
  }
  return parts;
}

std::vector<uint8_t> AnchorInfo::encode() const {
  ByteWriter w;
  w.u8(1);  // layout version
  w.u8(static_cast<uint8_t>(variant));
  w.u32(generation);
  w.u8(static_cast<uint8_t>(opts.codec));
  w.u32(opts.gc_watermark);
  w.u32(opts.wl_threshold);
  w.u8(opts.wl_enabled ? 1 : 0);
  w.u32(opts.fanout);
  w.u32(opts.cache_capacity);
  w.u32(opts.journal_cap_records);
  w.u32(regions.anchor_block);
  auto ids = [&w](const std::vector<uint32_t>& v) {
    w.u32(static_cast<uint32_t>(v.size()));
    for (uint32_t b : v) w.u32(b);
  };
  ids(regions.ckpt_blocks);
  ids(regions.commit_blocks);
  ids(regions.journal_blocks);
  return w.take();
}

std::optional<AnchorInfo> AnchorInfo::decode(std::span<const uint8_t> payload) {
  try {
    ByteReader r(payload);
    if (r.u8() != 1) return std::nullopt;
    AnchorInfo a;
    uint8_t v = r.u8();
    if (v < 1 || v > 3) return std::nullopt;
    a.variant = static_cast<Variant>(v);
    a.generation = r.u32();
    uint8_t codec = r.u8();
    if (codec > 2) return std::nullopt;
    a.opts.codec = static_cast<Codec>(codec);
    a.opts.gc_watermark = r.u32();
    a.opts.wl_threshold = r.u32();
    a.opts.wl_enabled = r.u8() != 0;
    a.opts.fanout = r.u32();
    a.opts.cache_capacity = r.u32();
    a.opts.journal_cap_records = r.u32();
    a.regions.anchor_block = r.u32();
    auto ids = [&r](std::vector<uint32_t>& v) {
      uint32_t n = r.u32();
      if (n > 1u << 20) throw Error(ErrorCode::BadImage, "region list");
      v.resize(n);
      for (auto& b : v) b = r.u32();
    };
    ids(a.regions.ckpt_blocks);
    ids(a.regions.commit_blocks);
    ids(a.regions.journal_blocks);
    if (!r.done()) return std::nullopt;
    return a;
  } catch (const Error&) {
    return std::nullopt;
  }
}

FsCore::FsCore(FlashDevice& dev, Variant variant, const AnchorInfo& anchor)
    : dev_(&dev), variant_(variant), opts_(anchor.opts), regions_(anchor.regions),
      anchor_generation_(anchor.generation) {
  const auto& g = dev.geometry();
  book_.assign(g.num_blocks, BlockBook{});
  for (uint32_t b = 0; b < g.num_blocks; ++b)
    if (dev.is_bad(b)) book_[b].role = BlockRole::Dead;
  auto reserve = [this](uint32_t b) { book_[b].role = BlockRole::Reserved; };
  reserve(regions_.anchor_block);
  for (uint32_t b : regions_.ckpt_blocks) reserve(b);
  for (uint32_t b : regions_.commit_blocks) reserve(b);
  for (uint32_t b : regions_.journal_blocks) reserve(b);
}

// Public ops: stale-handle gate, then variant hook. Mutating ops let the
// variant act before the first program (checkpoint invalidation).
void FsCore::mkdir(const std::string& path) {
  check_live();
  before_mutation();
  do_mkdir(path);
}

void FsCore::create_file(const std::string& path) {
  check_live();
  before_mutation();
  do_create(path);
}

void FsCore::write_file(const std::string& path, uint64_t offset,
                        std::span<const uint8_t> data) {
  check_live();
  before_mutation();
  do_write(path, offset, data);
}

std::vector<uint8_t> FsCore::read_file(const std::string& path, uint64_t offset,
                                       uint64_t length) {
  check_live();
  return do_read(path, offset, length);
}

void FsCore::remove(const std::string& path) {
  check_live();
  before_mutation();
  do_remove(path);
}

std::vector<DirEntry> FsCore::readdir(const std::string& path) {
  check_live();
  return do_readdir(path);
}

FsStat FsCore::stat(const std::string& path) {
  check_live();
  return do_stat(path);
}

GcStats FsCore::gc_step() {
  check_live();
  before_mutation();
  ensure_block_state();
  return gc_once();
}

void FsCore::wl_rebalance() {
  check_live();
  before_mutation();
  ensure_block_state();
  wl_once();
}

void FsCore::unmount(bool clean) {
  if (stale_) return;
  if (clean) do_clean_unmount();
  stale_ = true;
}

Codec FsCore::effective_codec() const {
  if (variant_ == Variant::Checkpoint) return Codec::None;
  return opts_.codec;
}

Loc FsCore::write_record(ChunkRecord& rec, BlockRole pool) {
  Loc loc = alloc_page(pool);
  rec.seq = seq_next_++;
  auto image = rec.encode();
  OobMirror mirror{rec.kind, rec.seq, rec.object_id};
  auto oob = mirror.encode();
  try {
    dev_->program_page(loc.block, loc.page, image, oob);
  } catch (...) {
    // Count the page as consumed so a later mount sees a consistent prefix.
    book_[loc.block].programmed = std::max(book_[loc.block].programmed, loc.page + 1);
    throw;
  }
  book_[loc.block].programmed = loc.page + 1;
  return loc;
}

ChunkRecord FsCore::read_record(Loc loc) {
  auto img = dev_->read_page(loc.block, loc.page);
  auto rec = ChunkRecord::decode(img.data);
  if (!rec)
    throw Error(ErrorCode::ChecksumMismatch,
                "unreadable record at block " + std::to_string(loc.block) + " page " +
                    std::to_string(loc.page));
  return std::move(*rec);
}

void FsCore::emit_file_data(uint32_t oid, uint32_t parent, uint64_t offset,
                            std::span<const uint8_t> data, const ChunkSink& sink) {
  const size_t cap = payload_capacity();
  const Codec want = effective_codec();
  size_t done = 0;
  // Everything before this cursor already failed a whole-window probe, so it
  // ships as raw pages without re-probing each one.
  size_t raw_until = 0;
  while (done < data.size()) {
    size_t remaining = data.size() - done;
    size_t raw = std::min<size_t>(remaining, kMaxRawSpan);
    Codec used = Codec::None;
    std::vector<uint8_t> stored;
    if (want == Codec::None || done < raw_until) {
      raw = std::min(raw, cap);
      stored.assign(data.begin() + done, data.begin() + done + raw);
    } else {
      // Shrink the raw span by halves until the encoded payload fits a page.
      // At raw == cap the no-expansion rule guarantees a fit.
      for (;;) {
        auto [c, enc] = compress(want, data.subspan(done, raw));
        if (c == Codec::None && raw > cap) {
          // The whole window is incompressible; remember that and emit it
          // page by page instead of probing every page of it again.
          raw_until = done + raw;
          raw = cap;
          stored.assign(data.begin() + done, data.begin() + done + raw);
          break;
        }
        if (enc.size() <= cap) {
          used = c;
          stored = std::move(enc);
          break;
        }
        raw = std::max(cap, raw / 2);
      }
    }
    ChunkRecord rec;
    rec.object_id = oid;
    rec.parent_id = parent;
    rec.kind = RecordKind::FileData;
    rec.codec = used;
    rec.file_offset = static_cast<uint32_t>(offset + done);
    rec.length_raw = static_cast<uint16_t>(raw);
    rec.length_stored = static_cast<uint16_t>(stored.size());
    rec.payload = std::move(stored);
    Loc loc = write_record(rec, BlockRole::Data);
    sink({static_cast<uint32_t>(offset + done), static_cast<uint32_t>(raw), loc});
    done += raw;
  }
}

void FsCore::ref_inc(Loc l) {
  uint32_t& n = page_refs_[loc_key(l)];
  if (n == 0) book_[l.block].live++;
  ++n;
}

void FsCore::ref_dec(Loc l) {
  auto it = page_refs_.find(loc_key(l));
  assert(it != page_refs_.end() && it->second > 0);
  if (--it->second == 0) {
    page_refs_.erase(it);
    assert(book_[l.block].live > 0);
    book_[l.block].live--;
  }
}

uint32_t FsCore::refs(Loc l) const {
  auto it = page_refs_.find(loc_key(l));
  return it == page_refs_.end() ? 0 : it->second;
}

Loc FsCore::alloc_page(BlockRole pool) {
  Head& head = pool == BlockRole::Index ? index_head_ : data_head_;
  if (head.block == UINT32_MAX || head.next_page >= pages_per_block()) {
    head.block = acquire_block(pool);
    head.next_page = 0;
  }
  return {head.block, head.next_page++};
}

uint32_t FsCore::acquire_block(BlockRole pool) {
  if (!in_gc_ && !in_wl_) maintain_watermark();
  if (free_blocks_.empty()) {
    if (!in_gc_ && !in_wl_) {
      // Watermark loop already ran; one more direct attempt before giving up.
      GcStats s = gc_once();
      (void)s;
    }
    if (free_blocks_.empty()) throw Error(ErrorCode::NoSpace, "no free blocks");
  }
  uint32_t b = pick_free_block();
  book_[b].role = pool;
  book_[b].programmed = 0;
  book_[b].live = 0;
  return b;
}

uint32_t FsCore::pick_free_block() {
  assert(!free_blocks_.empty());
  size_t chosen = free_blocks_.size() - 1;  // LIFO when wear leveling is off
  if (opts_.wl_enabled) {
    for (size_t i = 0; i < free_blocks_.size(); ++i) {
      uint32_t a = free_blocks_[i], b = free_blocks_[chosen];
      uint64_t ea = dev_->erase_count(a), eb = dev_->erase_count(b);
      if (ea < eb || (ea == eb && a < b)) chosen = i;
    }
  }
  uint32_t b = free_blocks_[chosen];
  free_blocks_.erase(free_blocks_.begin() + chosen);
  return b;
}

void FsCore::erase_and_recycle(uint32_t block) {
  dev_->erase_block(block);
  book_[block].programmed = 0;
  book_[block].live = 0;
  if (dev_->is_bad(block)) {
    book_[block].role = BlockRole::Dead;
    return;
  }
  book_[block].role = BlockRole::Pool;
  free_blocks_.push_back(block);
}

void FsCore::maintain_watermark() {
  while (free_blocks_.size() < opts_.gc_watermark) {
    GcStats s = gc_once();
    if (!s.erased_block) break;
  }
}

GcStats FsCore::gc_once() {
  if (in_gc_) return {};
  in_gc_ = true;
  GcStats stats;
  // Victim: fewest live pages among blocks holding at least one invalid page.
  // With wear leveling on, ties go to the lower erase count so collection
  // itself spreads wear; without it the tie-break is the plain block index,
  // which lets the recently freed block win again and again (the concentrated
  // wear that leveling is meant to cure). Index blocks only qualify once
  // fully dead (live tree nodes are never migrated).
  auto better = [this](uint32_t a, uint32_t b) {
    if (book_[a].live != book_[b].live) return book_[a].live < book_[b].live;
    if (opts_.wl_enabled) {
      uint64_t ea = dev_->erase_count(a), eb = dev_->erase_count(b);
      if (ea != eb) return ea < eb;
    }
    return a < b;
  };
  auto select = [&](bool honor_veto) {
    uint32_t best = UINT32_MAX;
    for (uint32_t b = 0; b < book_.size(); ++b) {
      const BlockBook& bb = book_[b];
      if (bb.role != BlockRole::Data && bb.role != BlockRole::Index) continue;
      if (b == data_head_.block || b == index_head_.block) continue;
      if (bb.programmed == 0 || bb.programmed <= bb.live) continue;
      if (bb.role == BlockRole::Index && bb.live > 0) continue;
      if (gc_hard_veto(b)) continue;
      if (honor_veto && veto_victim(b)) continue;
      if (best == UINT32_MAX || better(b, best)) best = b;
    }
    return best;
  };
  uint32_t victim = select(true);
  // Every candidate pinned: reclaim anyway rather than report a full device.
  if (victim == UINT32_MAX) victim = select(false);
  if (victim == UINT32_MAX) {
    in_gc_ = false;
    return stats;
  }
  try {
    stats.migrated_pages = migrate_block(victim);
    erase_and_recycle(victim);
    stats.erased_block = victim;
  } catch (...) {
    in_gc_ = false;
    throw;
  }
  in_gc_ = false;
  if (stats.erased_block) after_gc_erase();
  return stats;
}

void FsCore::after_gc_erase() {
  if (!opts_.wl_enabled || in_wl_) return;
  try {
    if (dev_->wear_spread() > opts_.wl_threshold) wl_once();
  } catch (const Error&) {
    // wear_spread throws only when no good blocks remain; nothing to level.
  }
}

void FsCore::wl_once() {
  if (in_wl_ || in_gc_) return;
  in_wl_ = true;
  // Move cold data: fully migrate the least-erased block that still holds
  // live pages, then erase it so its low-wear cells rejoin the free pool.
  uint32_t victim = UINT32_MAX;
  for (uint32_t b = 0; b < book_.size(); ++b) {
    const BlockBook& bb = book_[b];
    if (bb.role != BlockRole::Data) continue;
    if (b == data_head_.block || b == index_head_.block) continue;
    if (bb.live == 0) continue;
    if (gc_hard_veto(b) || veto_victim(b)) continue;
    if (victim == UINT32_MAX || dev_->erase_count(b) < dev_->erase_count(victim) ||
        (dev_->erase_count(b) == dev_->erase_count(victim) && b < victim))
      victim = b;
  }
  if (victim != UINT32_MAX) {
    try {
      migrate_block(victim);
      erase_and_recycle(victim);
    } catch (...) {
      in_wl_ = false;
      throw;
    }
  }
  in_wl_ = false;
}

}  // namespace ffsim
