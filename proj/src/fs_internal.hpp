#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ffsim/crc32.hpp"
#include "ffsim/errors.hpp"
#include "ffsim/fs.hpp"
#include "ffsim/record.hpp"

namespace ffsim {

struct Loc {
  uint32_t block = UINT32_MAX;
  uint32_t page = UINT32_MAX;

  bool valid() const { return block != UINT32_MAX; }
  bool operator==(const Loc&) const = default;
};

inline constexpr Loc kNilLoc{};

// Reserved object ids for filesystem plumbing records. User objects start at
// kRootOid + 1 and stay below 2^29 so they pack into tree keys.
inline constexpr uint32_t kRootOid = 1;
inline constexpr uint32_t kMaxUserOid = (1u << 29) - 1;
inline constexpr uint32_t kAnchorOid = 0xFFFFFFFFu;
inline constexpr uint32_t kCkptStreamOid = 0xFFFFFFF0u;
inline constexpr uint32_t kCkptSealOid = 0xFFFFFFF1u;
inline constexpr uint32_t kCommitOid = 0xFFFFFFF2u;
inline constexpr uint32_t kCkptInvalOid = 0xFFFFFFF3u;
inline constexpr uint32_t kJournalOid = 0xFFFFFFF4u;
inline constexpr uint32_t kIndexNodeOid = 0xFFFFFFF5u;

// Largest raw span one data record may cover (length_raw is u16).
inline constexpr uint32_t kMaxRawSpan = 65535;
// Files are capped so every byte offset fits the 29-bit tree-key space.
inline constexpr uint64_t kMaxFileBytes = (1ull << 29) - 1;

// Little-endian payload builder/parser for anchor, checkpoint, commit and
// journal payloads.
class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    for (int i = 0; i < 2; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void bytes(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void str(const std::string& s) {
    u16(static_cast<uint16_t>(s.size()));
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }
  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() {
    auto p = take(2);
    return uint16_t(p[0] | (uint16_t(p[1]) << 8));
  }
  uint32_t u32() {
    auto p = take(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    auto p = take(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
    return v;
  }
  std::string str() {
    uint16_t n = u16();
    auto p = take(n);
    return std::string(reinterpret_cast<const char*>(p.data()), n);
  }
  std::vector<uint8_t> blob(size_t n) {
    auto p = take(n);
    return std::vector<uint8_t>(p.begin(), p.end());
  }
  size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::span<const uint8_t> take(size_t n) {
    if (pos_ + n > data_.size())
      throw Error(ErrorCode::ChecksumMismatch, "truncated payload");
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

enum class BlockRole : uint8_t { Reserved, Pool, Data, Index, Dead };

struct BlockBook {
  BlockRole role = BlockRole::Pool;
  uint32_t programmed = 0;  // non-blank pages; always a prefix of the block
  uint32_t live = 0;        // pages with at least one index reference
};

struct RegionLayout {
  uint32_t anchor_block = UINT32_MAX;
  std::vector<uint32_t> ckpt_blocks;
  std::vector<uint32_t> commit_blocks;
  std::vector<uint32_t> journal_blocks;
};

struct AnchorInfo {
  Variant variant;
  uint32_t generation;
  FormatOptions opts;
  RegionLayout regions;

  std::vector<uint8_t> encode() const;
  static std::optional<AnchorInfo> decode(std::span<const uint8_t> payload);
};

bool all_ff(std::span<const uint8_t> bytes);

uint32_t checkpoint_region_blocks(uint32_t num_blocks);
uint32_t journal_region_blocks(uint32_t num_blocks);

// Meta record payload shared by all variants: node kind, size, leaf name.
struct MetaPayload {
  NodeKind kind;
  uint64_t size;
  std::string name;
};

std::vector<uint8_t> encode_meta(NodeKind kind, uint64_t size, const std::string& name);
std::optional<MetaPayload> decode_meta(std::span<const uint8_t> payload);

// Path handling shared by every variant.
std::vector<std::string> split_path(const std::string& path);

// Variant-independent engine: block bookkeeping, allocator, GC/WL skeleton,
// record IO with adaptive compression-aware chunking.
class FsCore : public FileSystem {
 public:
  uint64_t ram_units() const override = 0;

  void mkdir(const std::string& path) override;
  void create_file(const std::string& path) override;
  void write_file(const std::string& path, uint64_t offset,
                  std::span<const uint8_t> data) override;
  std::vector<uint8_t> read_file(const std::string& path, uint64_t offset,
                                 uint64_t length) override;
  void remove(const std::string& path) override;
  std::vector<DirEntry> readdir(const std::string& path) override;
  FsStat stat(const std::string& path) override;
  GcStats gc_step() override;
  void wl_rebalance() override;
  void unmount(bool clean) override;

  Variant variant() const override { return variant_; }
  const FormatOptions& options() const override { return opts_; }
  FlashDevice& device() override { return *dev_; }

 protected:
  FsCore(FlashDevice& dev, Variant variant, const AnchorInfo& anchor);

  // Per-op hooks implemented by the variants.
  virtual void do_mkdir(const std::string& path) = 0;
  virtual void do_create(const std::string& path) = 0;
  virtual void do_write(const std::string& path, uint64_t offset,
                        std::span<const uint8_t> data) = 0;
  virtual std::vector<uint8_t> do_read(const std::string& path, uint64_t offset,
                                       uint64_t length) = 0;
  virtual void do_remove(const std::string& path) = 0;
  virtual std::vector<DirEntry> do_readdir(const std::string& path) = 0;
  virtual FsStat do_stat(const std::string& path) = 0;
  virtual void do_clean_unmount() = 0;
  // Called before the first program of any mutating operation.
  virtual void before_mutation() {}
  // Migrates every live page off the block; returns pages written.
  virtual uint32_t migrate_block(uint32_t block) = 0;
  // Extra block-state preparation before GC/alloc dependent ops.
  virtual void ensure_block_state() {}
  // Blocks the variant wants shielded from reclamation right now (e.g. pages
  // a crash recovery could still roll back to). Soft: ignored when every
  // candidate is vetoed, so a full device still reclaims.
  virtual bool veto_victim(uint32_t) const { return false; }
  // Hard form: never overridden, even on a full device. Used for records the
  // variant has temporarily hidden from its own migration view; collecting
  // them would drop live data instead of moving it.
  virtual bool gc_hard_veto(uint32_t) const { return false; }

  void check_live() const {
    if (stale_) throw Error(ErrorCode::StaleHandle, "handle was unmounted");
  }

  uint32_t pages_per_block() const { return dev_->geometry().pages_per_block; }
  size_t payload_capacity() const { return record_payload_capacity(dev_->geometry().page_size); }

  // Record IO ------------------------------------------------------------
  Loc write_record(ChunkRecord& rec, BlockRole pool);
  ChunkRecord read_record(Loc loc);
  FlashDevice::PageImage read_raw(Loc loc) { return dev_->read_page(loc.block, loc.page); }

  struct EmittedChunk {
    uint32_t offset;
    uint32_t length;
    Loc loc;
  };
  using ChunkSink = std::function<void(const EmittedChunk&)>;
  // Splits data into records: raw spans sized so the (possibly compressed)
  // payload fits one page, up to kMaxRawSpan raw bytes per record. The sink
  // runs after each program so every emitted page is indexed (and therefore
  // safe from GC) before the next allocation can trigger a collection.
  void emit_file_data(uint32_t oid, uint32_t parent, uint64_t offset,
                      std::span<const uint8_t> data, const ChunkSink& sink);

  Codec effective_codec() const;

  // Allocator and bookkeeping ---------------------------------------------
  struct Head {
    uint32_t block = UINT32_MAX;
    uint32_t next_page = 0;
  };

  Loc alloc_page(BlockRole pool);
  uint32_t acquire_block(BlockRole pool);
  uint32_t pick_free_block();
  void erase_and_recycle(uint32_t block);
  void maintain_watermark();

  uint64_t loc_key(Loc l) const { return uint64_t(l.block) * pages_per_block() + l.page; }
  void ref_inc(Loc l);
  void ref_dec(Loc l);
  uint32_t refs(Loc l) const;

  GcStats gc_once();
  void wl_once();
  void after_gc_erase();

  // Region helpers ---------------------------------------------------------
  bool is_pool_block(uint32_t b) const {
    return book_[b].role != BlockRole::Reserved && book_[b].role != BlockRole::Dead;
  }

  FlashDevice* dev_;
  Variant variant_;
  FormatOptions opts_;
  RegionLayout regions_;
  uint32_t anchor_generation_ = 0;

  bool stale_ = false;
  bool in_gc_ = false;
  bool in_wl_ = false;

  uint64_t seq_next_ = 1;
  uint32_t oid_next_ = kRootOid + 1;

  std::vector<BlockBook> book_;
  std::vector<uint32_t> free_blocks_;
  Head data_head_;
  Head index_head_;
  std::unordered_map<uint64_t, uint32_t> page_refs_;
};

// Variant factories, defined alongside the variant classes.
std::unique_ptr<FileSystem> make_table_fs(FlashDevice& dev, const AnchorInfo& anchor,
                                          MountStats& stats);
void bootstrap_table(FlashDevice& dev, const AnchorInfo& anchor);
std::unique_ptr<FileSystem> make_tree_fs(FlashDevice& dev, const AnchorInfo& anchor,
                                         MountStats& stats);
void bootstrap_tree(FlashDevice& dev, const AnchorInfo& anchor);

// Fixed-probe frontier search over an append-only page range: always issues
// ceil(log2(n+1)) reads so mount costs depend on geometry alone, never on
// where the frontier happens to sit.
template <typename ReadBlankFn>
uint32_t frontier_bisect(uint32_t n, ReadBlankFn&& is_blank) {
  uint32_t probes = 0;
  while ((uint64_t(1) << probes) < uint64_t(n) + 1) ++probes;

  uint32_t lo = 0, hi = n;
  for (uint32_t i = 0; i < probes; ++i) {
    uint32_t mid = lo < hi ? lo + (hi - lo) / 2 : (lo > 0 ? lo - 1 : 0);
    bool blank = is_blank(mid);
    if (lo < hi) {
      if (blank)
        hi = mid;
      else
        lo = mid + 1;
    }
  }
  return lo;
}

}  // namespace ffsim
