#include <algorithm>
#include <cassert>
#include <set>

#include "fs_internal.hpp"

// Table variants keep the whole index in RAM and rebuild it by scanning.
// LogTable always scans every good page; Checkpoint serializes the index into
// a reserved region at clean unmount and restores it with a handful of reads,
// falling back to the scan when the checkpoint is missing, torn, or stale.

namespace ffsim {
namespace {

struct Extent {
  uint32_t len;
  Loc loc;
};

struct TObj {
  uint32_t oid = 0;
  uint32_t parent = 0;
  NodeKind kind = NodeKind::File;
  std::string name;
  uint64_t size = 0;
  Loc meta_loc;
  std::map<uint32_t, Extent> extents;          // files: offset -> extent
  std::map<std::string, uint32_t> children;    // dirs: name -> oid
};

struct Tombstone {
  Loc loc;
  uint64_t seq;
};

// Scan summary: everything the rebuild needs without retaining data payloads.
struct PageSummary {
  Loc loc;
  RecordKind kind;
  uint32_t oid;
  uint32_t parent;
  uint32_t file_offset;
  uint16_t length_raw;
  uint64_t seq;
  std::vector<uint8_t> meta_payload;  // meta records only
};

class TableFs final : public FsCore {
 public:
  TableFs(FlashDevice& dev, const AnchorInfo& anchor)
      : FsCore(dev, anchor.variant, anchor) {
    if (variant_ == Variant::Checkpoint)
      region_gens_.assign(regions_.ckpt_blocks.size(), {});
    init_root();
  }

  uint64_t ram_units() const override {
    uint64_t n = objs_.size() + tombs_.size();
    for (const auto& [oid, o] : objs_) n += o.extents.size();
    return n;
  }

  // ---- lifecycle ---------------------------------------------------------

  void init_empty() {
    seq_next_ = 2;  // anchor took seq 1
    oid_next_ = kRootOid + 1;
  }

  void mount_logtable(MountStats& stats) {
    std::vector<PageSummary> sums;
    full_scan(sums, nullptr);
    rebuild(sums);
    stats.full_scan = true;
  }

  void mount_checkpoint(MountStats& stats) {
    // Region scan: per block, read forward until the first blank page.
    struct RegionRec {
      ChunkRecord rec;
      Loc loc;
    };
    std::vector<RegionRec> recs;
    std::vector<uint32_t> reads_done(regions_.ckpt_blocks.size(), 0);
    bool corrupt_region = false;
    uint64_t max_region_seq = 0;
    for (size_t i = 0; i < regions_.ckpt_blocks.size(); ++i) {
      uint32_t b = regions_.ckpt_blocks[i];
      if (dev_->is_bad(b)) continue;
      uint32_t p = 0;
      for (; p < pages_per_block(); ++p) {
        auto img = dev_->read_page(b, p);
        reads_done[i]++;
        if (all_ff(img.data)) break;
        book_[b].programmed = p + 1;
        auto rec = ChunkRecord::decode(img.data);
        if (!rec) {
          corrupt_region = true;
          continue;
        }
        max_region_seq = std::max(max_region_seq, rec->seq);
        region_gens_[i].insert(rec->parent_id);
        recs.push_back({std::move(*rec), Loc{b, p}});
      }
    }

    // Candidate generations: sealed, complete, uncorrupted, not invalidated.
    std::set<uint32_t> invalidated;
    std::map<uint32_t, std::pair<uint64_t, uint32_t>> seals;  // gen -> (total, crc)
    uint32_t max_gen = 0;
    for (const auto& rr : recs) {
      max_gen = std::max(max_gen, rr.rec.parent_id);
      if (rr.rec.object_id == kCkptInvalOid) invalidated.insert(rr.rec.parent_id);
      if (rr.rec.object_id == kCkptSealOid && rr.rec.payload.size() == 12) {
        ByteReader r(rr.rec.payload);
        uint64_t total = r.u64();
        uint32_t crc = r.u32();
        seals[rr.rec.parent_id] = {total, crc};
      }
    }
    ckpt_gen_counter_ = max_gen;

    if (!corrupt_region) {
      for (auto it = seals.rbegin(); it != seals.rend(); ++it) {
        uint32_t gen = it->first;
        if (invalidated.count(gen)) continue;
        auto [total, crc] = it->second;
        // Reassemble the stream for this generation.
        std::map<uint32_t, const RegionRec*> parts;
        for (const auto& rr : recs)
          if (rr.rec.object_id == kCkptStreamOid && rr.rec.parent_id == gen)
            parts[rr.rec.file_offset] = &rr;
        std::vector<uint8_t> stream;
        stream.reserve(total);
        bool whole = true;
        for (const auto& [off, rr] : parts) {
          if (off != stream.size()) {
            whole = false;
            break;
          }
          stream.insert(stream.end(), rr->rec.payload.begin(), rr->rec.payload.end());
        }
        if (!whole || stream.size() != total || crc32(stream.data(), stream.size()) != crc)
          continue;
        if (restore_checkpoint(stream)) {
          ckpt_live_gen_ = gen;
          seq_next_ = std::max(seq_next_, max_region_seq + 1);
          stats.full_scan = false;
          // Consume the checkpoint immediately: it describes this instant
          // only, so any crash from here on must fall back to the scan.
          invalidate_checkpoint();
          return;
        }
      }
    }

    // Fallback: finish the scan, skipping only pages already read.
    std::vector<PageSummary> sums;
    SkipSet skip;
    for (size_t i = 0; i < regions_.ckpt_blocks.size(); ++i)
      skip.region_reads[regions_.ckpt_blocks[i]] = reads_done[i];
    full_scan(sums, &skip);
    rebuild(sums);
    seq_next_ = std::max(seq_next_, max_region_seq + 1);
    stats.full_scan = true;
  }

 protected:
  // ---- operations ---------------------------------------------------------

  void do_mkdir(const std::string& path) override { create_node(path, NodeKind::Dir); }
  void do_create(const std::string& path) override { create_node(path, NodeKind::File); }

  void do_write(const std::string& path, uint64_t offset,
                std::span<const uint8_t> data) override {
    TObj& o = resolve_existing(path);
    if (o.kind != NodeKind::File) throw Error(ErrorCode::IsADirectory, path);
    if (offset > o.size) throw Error(ErrorCode::RangeBeyondEof, "write past end of " + path);
    if (offset + data.size() > kMaxFileBytes) throw Error(ErrorCode::TooLarge, path);
    if (data.empty()) return;
    emit_file_data(o.oid, o.parent, offset, data, [&](const EmittedChunk& c) {
      flash_records_[o.oid]++;
      apply_extent(o, c.offset, c.length, c.loc);
    });
    o.size = std::max(o.size, offset + data.size());
  }

  std::vector<uint8_t> do_read(const std::string& path, uint64_t offset,
                               uint64_t length) override {
    TObj& o = resolve_existing(path);
    if (o.kind != NodeKind::File) throw Error(ErrorCode::IsADirectory, path);
    if (offset + length > o.size)
      throw Error(ErrorCode::RangeBeyondEof, "read past end of " + path);
    return read_extents(o, offset, length);
  }

  void do_remove(const std::string& path) override {
    auto [parent, name] = resolve_parent(path);
    auto it = parent.children.find(name);
    if (it == parent.children.end()) throw Error(ErrorCode::NotFound, path);
    TObj& o = objs_.at(it->second);
    if (o.kind == NodeKind::Dir && !o.children.empty())
      throw Error(ErrorCode::DirNotEmpty, path);

    ChunkRecord tomb;
    tomb.object_id = o.oid;
    tomb.parent_id = o.parent;
    tomb.kind = RecordKind::Deletion;
    tomb.codec = Codec::None;
    Loc tomb_loc = write_record(tomb, BlockRole::Data);

    for (const auto& [off, e] : o.extents) ref_dec(e.loc);
    if (o.meta_loc.valid()) ref_dec(o.meta_loc);
    uint32_t oid = o.oid;
    parent.children.erase(it);
    objs_.erase(oid);
    auto fr = flash_records_.find(oid);
    if (fr != flash_records_.end() && fr->second > 0) {
      tombs_[oid] = {tomb_loc, tomb.seq};
      ref_inc(tomb_loc);
    }
  }

  std::vector<DirEntry> do_readdir(const std::string& path) override {
    TObj& o = resolve_existing(path);
    if (o.kind != NodeKind::Dir) throw Error(ErrorCode::NotADirectory, path);
    std::vector<DirEntry> out;
    out.reserve(o.children.size());
    for (const auto& [name, oid] : o.children) {
      const TObj& c = objs_.at(oid);
      out.push_back({name, c.kind, c.kind == NodeKind::File ? c.size : 0});
    }
    return out;
  }

  FsStat do_stat(const std::string& path) override {
    TObj& o = resolve_existing(path);
    return {o.kind, o.kind == NodeKind::File ? o.size : 0, o.oid};
  }

  void do_clean_unmount() override {
    if (variant_ == Variant::Checkpoint) write_checkpoint();
  }

  void before_mutation() override {
    if (variant_ == Variant::Checkpoint && ckpt_live_gen_ != 0) invalidate_checkpoint();
  }

  uint32_t migrate_block(uint32_t victim) override;

 public:
  // Serializes the entire in-RAM index into the reserved region and seals it.
  // Skipped silently when the region cannot hold the stream even after
  // compaction; the next mount then falls back to the scan.
  void write_checkpoint() {
    uint32_t gen = ++ckpt_gen_counter_;
    ByteWriter w;
    w.u64(seq_next_);
    w.u32(oid_next_);
    uint32_t n_objs = 0;
    for (const auto& [oid, o] : objs_)
      if (oid != kRootOid) ++n_objs;
    w.u32(n_objs);
    for (const auto& [oid, o] : objs_) {
      if (oid == kRootOid) continue;
      w.u32(o.oid);
      w.u32(o.parent);
      w.u8(static_cast<uint8_t>(o.kind));
      w.str(o.name);
      w.u64(o.size);
      w.u32(o.meta_loc.block);
      w.u32(o.meta_loc.page);
      w.u32(static_cast<uint32_t>(o.extents.size()));
      for (const auto& [off, e] : o.extents) {
        w.u32(off);
        w.u32(e.len);
        w.u32(e.loc.block);
        w.u32(e.loc.page);
      }
    }
    w.u32(static_cast<uint32_t>(tombs_.size()));
    for (const auto& [oid, t] : tombs_) {
      w.u32(oid);
      w.u32(t.loc.block);
      w.u32(t.loc.page);
      w.u64(t.seq);
    }
    w.u32(static_cast<uint32_t>(flash_records_.size()));
    for (const auto& [oid, n] : flash_records_) {
      w.u32(oid);
      w.u32(n);
    }
    std::vector<std::pair<uint32_t, uint32_t>> blocks;
    for (uint32_t b = 0; b < book_.size(); ++b)
      if (is_pool_block(b) && book_[b].programmed > 0) blocks.push_back({b, book_[b].programmed});
    w.u32(static_cast<uint32_t>(blocks.size()));
    for (auto [b, p] : blocks) {
      w.u32(b);
      w.u32(p);
    }
    w.u32(data_head_.block);
    w.u32(data_head_.next_page);

    std::vector<uint8_t> stream = w.take();
    const size_t cap = payload_capacity();
    uint32_t chunks = static_cast<uint32_t>((stream.size() + cap - 1) / cap);
    if (!ensure_region_space(chunks + 1)) return;

    size_t off = 0;
    uint32_t emitted = 0;
    while (emitted < chunks) {
      size_t n = std::min(cap, stream.size() - off);
      ChunkRecord rec;
      rec.object_id = kCkptStreamOid;
      rec.parent_id = gen;
      rec.kind = RecordKind::Checkpoint;
      rec.codec = Codec::None;
      rec.file_offset = static_cast<uint32_t>(off);
      rec.length_raw = static_cast<uint16_t>(n);
      rec.length_stored = static_cast<uint16_t>(n);
      rec.payload.assign(stream.begin() + off, stream.begin() + off + n);
      region_append(rec, gen);
      off += n;
      ++emitted;
    }
    ChunkRecord seal;
    seal.object_id = kCkptSealOid;
    seal.parent_id = gen;
    seal.kind = RecordKind::Checkpoint;
    seal.codec = Codec::None;
    ByteWriter sw;
    sw.u64(stream.size());
    sw.u32(crc32(stream.data(), stream.size()));
    seal.payload = sw.take();
    seal.length_raw = static_cast<uint16_t>(seal.payload.size());
    seal.length_stored = seal.length_raw;
    region_append(seal, gen);
    ckpt_live_gen_ = gen;
  }

 private:
  // ---- namespace helpers ---------------------------------------------------

  void init_root() {
    TObj root;
    root.oid = kRootOid;
    root.kind = NodeKind::Dir;
    objs_.emplace(kRootOid, std::move(root));
  }

  std::pair<TObj&, std::string> resolve_parent(const std::string& path) {
    auto parts = split_path(path);
    if (parts.empty()) throw Error(ErrorCode::InvalidPath, "root has no parent");
    TObj* cur = &objs_.at(kRootOid);
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
      auto it = cur->children.find(parts[i]);
      if (it == cur->children.end()) throw Error(ErrorCode::NotFound, path);
      TObj& c = objs_.at(it->second);
      if (c.kind != NodeKind::Dir) throw Error(ErrorCode::NotADirectory, path);
      cur = &c;
    }
    return {*cur, parts.back()};
  }

  TObj& resolve_existing(const std::string& path) {
    auto parts = split_path(path);
    TObj* cur = &objs_.at(kRootOid);
    for (size_t i = 0; i < parts.size(); ++i) {
      if (cur->kind != NodeKind::Dir) throw Error(ErrorCode::NotADirectory, path);
      auto it = cur->children.find(parts[i]);
      if (it == cur->children.end()) throw Error(ErrorCode::NotFound, path);
      cur = &objs_.at(it->second);
    }
    return *cur;
  }

  void create_node(const std::string& path, NodeKind kind) {
    if (split_path(path).empty()) throw Error(ErrorCode::AlreadyExists, path);
    auto [parent, name] = resolve_parent(path);
    if (parent.kind != NodeKind::Dir) throw Error(ErrorCode::NotADirectory, path);
    if (parent.children.count(name)) throw Error(ErrorCode::AlreadyExists, path);
    if (oid_next_ > kMaxUserOid) throw Error(ErrorCode::TooLarge, "object ids exhausted");
    uint32_t oid = oid_next_++;

    ChunkRecord rec;
    rec.object_id = oid;
    rec.parent_id = parent.oid;
    rec.kind = kind == NodeKind::Dir ? RecordKind::DirMeta : RecordKind::FileMeta;
    rec.codec = Codec::None;
    rec.payload = encode_meta(kind, 0, name);
    rec.length_raw = static_cast<uint16_t>(rec.payload.size());
    rec.length_stored = rec.length_raw;
    Loc loc = write_record(rec, BlockRole::Data);

    TObj o;
    o.oid = oid;
    o.parent = parent.oid;
    o.kind = kind;
    o.name = name;
    o.meta_loc = loc;
    parent.children[name] = oid;
    objs_.emplace(oid, std::move(o));
    ref_inc(loc);
    flash_records_[oid]++;
  }

  // ---- extent map ----------------------------------------------------------

  void apply_extent(TObj& o, uint32_t start, uint32_t len, Loc loc) {
    uint32_t end = start + len;
    auto it = o.extents.lower_bound(start);
    if (it != o.extents.begin()) {
      auto prev = std::prev(it);
      uint32_t pend = prev->first + prev->second.len;
      if (pend > start) {
        prev->second.len = start - prev->first;
        if (pend > end) {
          o.extents[end] = {pend - end, prev->second.loc};
          ref_inc(prev->second.loc);
        }
      }
    }
    while (it != o.extents.end() && it->first < end) {
      uint32_t eend = it->first + it->second.len;
      Loc l = it->second.loc;
      it = o.extents.erase(it);
      if (eend > end) {
        // tail survives under the same record; entry moves, refs unchanged
        o.extents[end] = {eend - end, l};
        break;
      }
      ref_dec(l);
    }
    o.extents[start] = {len, loc};
    ref_inc(loc);
  }

  std::vector<uint8_t> read_extents(const TObj& o, uint64_t off, uint64_t len) {
    std::vector<uint8_t> out(static_cast<size_t>(len));
    if (len == 0) return out;
    uint64_t end = off + len;
    auto it = o.extents.upper_bound(static_cast<uint32_t>(off));
    assert(it != o.extents.begin());
    --it;
    uint64_t pos = off;
    while (pos < end) {
      assert(it != o.extents.end() && it->first <= pos);
      uint64_t ext_end = uint64_t(it->first) + it->second.len;
      assert(pos < ext_end);
      ChunkRecord rec = read_record(it->second.loc);
      auto raw = decompress(rec.codec, rec.payload, rec.length_raw);
      uint64_t take_end = std::min(end, ext_end);
      size_t rec_base = static_cast<size_t>(pos - rec.file_offset);
      std::copy(raw.begin() + rec_base, raw.begin() + rec_base + (take_end - pos),
                out.begin() + (pos - off));
      pos = take_end;
      ++it;
    }
    return out;
  }

  // ---- scan + rebuild -------------------------------------------------------

  struct SkipSet {
    std::map<uint32_t, uint32_t> region_reads;  // block -> pages already read
  };

  void full_scan(std::vector<PageSummary>& sums, const SkipSet* skip) {
    const auto& g = dev_->geometry();
    for (uint32_t b = 0; b < g.num_blocks; ++b) {
      if (dev_->is_bad(b)) continue;
      uint32_t start_page = 0;
      if (skip) {
        auto it = skip->region_reads.find(b);
        if (it != skip->region_reads.end()) start_page = it->second;
      }
      bool pool = is_pool_block(b);
      for (uint32_t p = start_page; p < g.pages_per_block; ++p) {
        if (b == regions_.anchor_block && p == 0) continue;  // read during dispatch
        auto img = dev_->read_page(b, p);
        if (all_ff(img.data)) continue;
        if (pool) book_[b].programmed = std::max(book_[b].programmed, p + 1);
        if (!pool) continue;  // region contents handled by the region scan
        auto rec = ChunkRecord::decode(img.data);
        if (!rec) continue;  // torn program or stray garbage
        PageSummary s;
        s.loc = {b, p};
        s.kind = rec->kind;
        s.oid = rec->object_id;
        s.parent = rec->parent_id;
        s.file_offset = rec->file_offset;
        s.length_raw = rec->length_raw;
        s.seq = rec->seq;
        if (rec->kind == RecordKind::FileMeta || rec->kind == RecordKind::DirMeta)
          s.meta_payload = std::move(rec->payload);
        sums.push_back(std::move(s));
      }
    }
  }

  void rebuild(std::vector<PageSummary>& sums) {
    std::sort(sums.begin(), sums.end(),
              [](const PageSummary& a, const PageSummary& b) { return a.seq < b.seq; });

    struct MetaSeen {
      uint64_t seq = 0;
      Loc loc;
      MetaPayload meta;
      uint32_t parent = 0;
    };
    struct DataSeen {
      uint64_t seq;
      uint32_t fo;
      uint16_t raw;
      Loc loc;
    };
    std::map<uint32_t, MetaSeen> metas;
    std::unordered_map<uint32_t, std::vector<DataSeen>> data;
    std::map<uint32_t, Tombstone> dels;
    uint64_t max_seq = 1;
    uint32_t max_oid = kRootOid;

    for (auto& s : sums) {
      max_seq = std::max(max_seq, s.seq);
      if (s.oid >= kCkptStreamOid) continue;  // plumbing records
      max_oid = std::max(max_oid, s.oid);
      switch (s.kind) {
        case RecordKind::FileMeta:
        case RecordKind::DirMeta: {
          auto mp = decode_meta(s.meta_payload);
          if (!mp) break;
          flash_records_[s.oid]++;
          auto& m = metas[s.oid];
          if (s.seq >= m.seq) m = {s.seq, s.loc, std::move(*mp), s.parent};
          break;
        }
        case RecordKind::FileData:
          flash_records_[s.oid]++;
          data[s.oid].push_back({s.seq, s.file_offset, s.length_raw, s.loc});
          break;
        case RecordKind::Deletion: {
          auto& d = dels[s.oid];
          if (s.seq >= d.seq) d = {s.loc, s.seq};
          break;
        }
        default:
          break;  // checkpoint/journal/index kinds carry no table state
      }
    }

    // Objects are created parent-before-child, so ascending oid order links
    // every live object in one pass.
    for (auto& [oid, m] : metas) {
      auto del = dels.find(oid);
      if (del != dels.end() && del->second.seq > m.seq) continue;
      auto pit = objs_.find(m.parent);
      if (pit == objs_.end() || pit->second.kind != NodeKind::Dir) continue;
      TObj o;
      o.oid = oid;
      o.parent = m.parent;
      o.kind = m.meta.kind;
      o.name = m.meta.name;
      o.meta_loc = m.loc;
      pit->second.children[o.name] = oid;
      ref_inc(m.loc);
      auto dit = data.find(oid);
      objs_.emplace(oid, std::move(o));
      if (dit != data.end() && m.meta.kind == NodeKind::File) {
        auto& recs = dit->second;
        std::sort(recs.begin(), recs.end(),
                  [](const DataSeen& a, const DataSeen& b) { return a.seq < b.seq; });
        TObj& obj = objs_.at(oid);
        for (const auto& dr : recs) apply_extent(obj, dr.fo, dr.raw, dr.loc);
        if (!obj.extents.empty()) {
          auto last = std::prev(obj.extents.end());
          obj.size = uint64_t(last->first) + last->second.len;
        }
      }
    }

    for (const auto& [oid, d] : dels) {
      auto fr = flash_records_.find(oid);
      if (fr != flash_records_.end() && fr->second > 0) {
        tombs_[oid] = d;
        ref_inc(d.loc);
      }
    }
    for (auto it = flash_records_.begin(); it != flash_records_.end();)
      it = it->second == 0 ? flash_records_.erase(it) : std::next(it);

    for (uint32_t b = 0; b < book_.size(); ++b) {
      if (!is_pool_block(b)) continue;
      if (book_[b].programmed == 0)
        free_blocks_.push_back(b);
      else
        book_[b].role = BlockRole::Data;
    }
    seq_next_ = max_seq + 1;
    oid_next_ = std::max(oid_next_, max_oid + 1);
  }

  // ---- checkpoint region ----------------------------------------------------

  uint32_t region_free_pages() const {
    uint32_t n = 0;
    for (uint32_t b : regions_.ckpt_blocks)
      if (book_[b].role != BlockRole::Dead)
        n += pages_per_block() - book_[b].programmed;
    return n;
  }

  bool ensure_region_space(uint32_t need) {
    if (region_free_pages() >= need) return true;
    for (size_t i = 0; i < regions_.ckpt_blocks.size(); ++i) {
      uint32_t b = regions_.ckpt_blocks[i];
      if (book_[b].role == BlockRole::Dead || book_[b].programmed == 0) continue;
      if (ckpt_live_gen_ != 0 && region_gens_[i].count(ckpt_live_gen_)) continue;
      dev_->erase_block(b);
      book_[b].programmed = 0;
      region_gens_[i].clear();
      if (dev_->is_bad(b)) book_[b].role = BlockRole::Dead;
    }
    return region_free_pages() >= need;
  }

  Loc region_append(ChunkRecord& rec, uint32_t gen) {
    for (size_t i = 0; i < regions_.ckpt_blocks.size(); ++i) {
      uint32_t b = regions_.ckpt_blocks[i];
      if (book_[b].role == BlockRole::Dead) continue;
      if (book_[b].programmed >= pages_per_block()) continue;
      Loc loc{b, book_[b].programmed};
      rec.seq = seq_next_++;
      auto image = rec.encode();
      OobMirror mirror{rec.kind, rec.seq, rec.object_id};
      auto oob = mirror.encode();
      dev_->program_page(loc.block, loc.page, image, oob);
      book_[b].programmed++;
      region_gens_[i].insert(gen);
      return loc;
    }
    throw Error(ErrorCode::NoSpace, "checkpoint region full");
  }

  void invalidate_checkpoint() {
    uint32_t gen = ckpt_live_gen_;
    ckpt_live_gen_ = 0;
    if (region_free_pages() > 0) {
      ChunkRecord rec;
      rec.object_id = kCkptInvalOid;
      rec.parent_id = gen;
      rec.kind = RecordKind::Checkpoint;
      rec.codec = Codec::None;
      region_append(rec, gen);
      return;
    }
    // No room for a tombstone record: physically retire the generation.
    for (size_t i = 0; i < regions_.ckpt_blocks.size(); ++i) {
      uint32_t b = regions_.ckpt_blocks[i];
      if (book_[b].role == BlockRole::Dead) continue;
      if (!region_gens_[i].count(gen)) continue;
      dev_->erase_block(b);
      book_[b].programmed = 0;
      region_gens_[i].clear();
      if (dev_->is_bad(b)) book_[b].role = BlockRole::Dead;
    }
  }

  bool restore_checkpoint(std::span<const uint8_t> stream) {
    try {
      ByteReader r(stream);
      seq_next_ = r.u64();
      oid_next_ = r.u32();
      uint32_t n_objs = r.u32();
      std::vector<TObj> loaded;
      loaded.reserve(n_objs);
      for (uint32_t i = 0; i < n_objs; ++i) {
        TObj o;
        o.oid = r.u32();
        o.parent = r.u32();
        o.kind = static_cast<NodeKind>(r.u8());
        o.name = r.str();
        o.size = r.u64();
        o.meta_loc.block = r.u32();
        o.meta_loc.page = r.u32();
        uint32_t n_ext = r.u32();
        uint32_t cursor = 0;
        for (uint32_t e = 0; e < n_ext; ++e) {
          uint32_t off = r.u32();
          Extent ext;
          ext.len = r.u32();
          ext.loc.block = r.u32();
          ext.loc.page = r.u32();
          o.extents.emplace_hint(o.extents.end(), off, ext);
          cursor = off + ext.len;
        }
        (void)cursor;
        loaded.push_back(std::move(o));
      }
      uint32_t n_tombs = r.u32();
      for (uint32_t i = 0; i < n_tombs; ++i) {
        uint32_t oid = r.u32();
        Tombstone t;
        t.loc.block = r.u32();
        t.loc.page = r.u32();
        t.seq = r.u64();
        tombs_[oid] = t;
      }
      uint32_t n_fr = r.u32();
      for (uint32_t i = 0; i < n_fr; ++i) {
        uint32_t oid = r.u32();
        flash_records_[oid] = r.u32();
      }
      uint32_t n_blocks = r.u32();
      for (uint32_t i = 0; i < n_blocks; ++i) {
        uint32_t b = r.u32();
        uint32_t p = r.u32();
        if (b >= book_.size() || !is_pool_block(b)) throw Error(ErrorCode::BadImage, "block");
        book_[b].programmed = p;
        book_[b].role = BlockRole::Data;
      }
      data_head_.block = r.u32();
      data_head_.next_page = r.u32();
      if (!r.done()) throw Error(ErrorCode::BadImage, "trailing bytes");

      for (auto& o : loaded) objs_.emplace(o.oid, std::move(o));
      for (auto& [oid, o] : objs_) {
        if (oid == kRootOid) continue;
        objs_.at(o.parent).children[o.name] = oid;
        ref_inc(o.meta_loc);
        for (const auto& [off, e] : o.extents) ref_inc(e.loc);
      }
      for (const auto& [oid, t] : tombs_) ref_inc(t.loc);
      if (data_head_.block != UINT32_MAX) book_[data_head_.block].role = BlockRole::Data;
      for (uint32_t b = 0; b < book_.size(); ++b)
        if (is_pool_block(b) && book_[b].programmed == 0 && book_[b].role == BlockRole::Pool)
          free_blocks_.push_back(b);
      return true;
    } catch (const std::exception&) {
      // Torn or inconsistent stream: reset and let the caller fall back.
      objs_.clear();
      tombs_.clear();
      flash_records_.clear();
      page_refs_.clear();
      free_blocks_.clear();
      data_head_ = {};
      for (auto& bb : book_) {
        if (bb.role == BlockRole::Data) bb.role = BlockRole::Pool;
        if (bb.role == BlockRole::Pool) bb.programmed = 0;
        bb.live = 0;
      }
      init_root();
      return false;
    }
  }

  std::unordered_map<uint32_t, TObj> objs_;
  std::unordered_map<uint32_t, Tombstone> tombs_;
  std::unordered_map<uint32_t, uint32_t> flash_records_;
  // checkpoint bookkeeping
  std::vector<std::set<uint32_t>> region_gens_;
  uint32_t ckpt_gen_counter_ = 0;
  uint32_t ckpt_live_gen_ = 0;
};

uint32_t TableFs::migrate_block(uint32_t victim) {
  uint32_t written = 0;
  std::unordered_map<uint32_t, uint32_t> leaving;  // oid -> records vanishing at erase

  for (uint32_t p = 0; p < book_[victim].programmed; ++p) {
    Loc loc{victim, p};
    auto img = dev_->read_page(victim, p);
    auto rec = ChunkRecord::decode(img.data);
    if (!rec) continue;

    switch (rec->kind) {
      case RecordKind::FileData: {
        if (rec->object_id <= kMaxUserOid) leaving[rec->object_id]++;
        if (refs(loc) == 0) break;
        auto oit = objs_.find(rec->object_id);
        if (oit == objs_.end()) break;
        TObj& o = oit->second;
        auto raw = decompress(rec->codec, rec->payload, rec->length_raw);
        // Collect maximal runs of extents still backed by this page.
        struct Run {
          uint32_t start;
          std::vector<uint8_t> bytes;
        };
        std::vector<Run> runs;
        uint32_t span_end = rec->file_offset + rec->length_raw;
        for (auto it = o.extents.lower_bound(rec->file_offset);
             it != o.extents.end() && it->first < span_end; ++it) {
          if (!(it->second.loc == loc)) continue;
          uint32_t rel = it->first - rec->file_offset;
          if (!runs.empty() &&
              runs.back().start + runs.back().bytes.size() == it->first) {
            runs.back().bytes.insert(runs.back().bytes.end(), raw.begin() + rel,
                                     raw.begin() + rel + it->second.len);
          } else {
            Run r;
            r.start = it->first;
            r.bytes.assign(raw.begin() + rel, raw.begin() + rel + it->second.len);
            runs.push_back(std::move(r));
          }
        }
        for (const auto& run : runs) {
          emit_file_data(o.oid, o.parent, run.start, run.bytes, [&](const EmittedChunk& c) {
            flash_records_[o.oid]++;
            ++written;
            apply_extent(o, c.offset, c.length, c.loc);
          });
        }
        break;
      }
      case RecordKind::FileMeta:
      case RecordKind::DirMeta: {
        if (rec->object_id <= kMaxUserOid) leaving[rec->object_id]++;
        if (refs(loc) == 0) break;
        TObj& o = objs_.at(rec->object_id);
        ChunkRecord fresh;
        fresh.object_id = o.oid;
        fresh.parent_id = o.parent;
        fresh.kind = rec->kind;
        fresh.codec = Codec::None;
        fresh.payload = encode_meta(o.kind, 0, o.name);
        fresh.length_raw = static_cast<uint16_t>(fresh.payload.size());
        fresh.length_stored = fresh.length_raw;
        Loc nl = write_record(fresh, BlockRole::Data);
        flash_records_[o.oid]++;
        ++written;
        ref_dec(o.meta_loc);
        o.meta_loc = nl;
        ref_inc(nl);
        break;
      }
      case RecordKind::Deletion: {
        if (refs(loc) == 0) break;
        auto tit = tombs_.find(rec->object_id);
        if (tit == tombs_.end()) break;
        ChunkRecord fresh;
        fresh.object_id = rec->object_id;
        fresh.parent_id = rec->parent_id;
        fresh.kind = RecordKind::Deletion;
        fresh.codec = Codec::None;
        Loc nl = write_record(fresh, BlockRole::Data);
        ++written;
        ref_dec(tit->second.loc);
        tit->second = {nl, fresh.seq};
        ref_inc(nl);
        break;
      }
      default:
        break;
    }
  }

  for (const auto& [oid, n] : leaving) {
    auto it = flash_records_.find(oid);
    if (it == flash_records_.end()) continue;
    it->second = it->second > n ? it->second - n : 0;
    if (it->second == 0) {
      flash_records_.erase(it);
      auto tit = tombs_.find(oid);
      if (tit != tombs_.end()) {
        ref_dec(tit->second.loc);
        tombs_.erase(tit);
      }
    }
  }
  return written;
}

}  // namespace

std::unique_ptr<FileSystem> make_table_fs(FlashDevice& dev, const AnchorInfo& anchor,
                                          MountStats& stats) {
  auto fs = std::make_unique<TableFs>(dev, anchor);
  if (anchor.variant == Variant::LogTable)
    fs->mount_logtable(stats);
  else
    fs->mount_checkpoint(stats);
  return fs;
}

void bootstrap_table(FlashDevice& dev, const AnchorInfo& anchor) {
  if (anchor.variant != Variant::Checkpoint) return;
  TableFs fs(dev, anchor);
  fs.init_empty();
  fs.write_checkpoint();
}

}  // namespace ffsim
