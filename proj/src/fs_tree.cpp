#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <cassert>
#include <list>
#include <memory>
#include <set>
#include <unordered_map>

#include "fs_internal.hpp"

// Tree variant: the index is a wandering B+ tree of location records stored
// in dedicated index blocks. Mutations go to an in-RAM overlay journaled into
// a reserved region; every J journal pages the overlay is folded into the
// tree copy-on-write and a commit record (root location, generation, journal
// replay point) lands in a two-block commit area. Mount reads the commit
// area, the journal tail, and the root; it never scans the data area.
// Per-block usage counts are rebuilt lazily before the first mutation.

namespace ffsim {
namespace {

constexpr uint32_t kTypeMetaBit = 1u << 29;
constexpr uint32_t kTypeDirentBit = 2u << 29;

struct TreeKey {
  uint32_t owner = 0;
  uint32_t packed = 0;
  auto operator<=>(const TreeKey&) const = default;
};

TreeKey data_key(uint32_t oid, uint32_t off) { return {oid, off}; }
TreeKey meta_key(uint32_t oid) { return {oid, kTypeMetaBit}; }
TreeKey dirent_key(uint32_t parent, uint32_t child) {
  return {parent, kTypeDirentBit | child};
}
TreeKey pred_key(TreeKey k) {
  if (k.packed > 0) return {k.owner, k.packed - 1};
  return {k.owner - 1, UINT32_MAX};
}

struct Node {
  uint8_t level = 0;  // 0 = leaf
  std::vector<TreeKey> keys;
  std::vector<Loc> vals;  // leaf: record pages; internal: child nodes
};

std::vector<uint8_t> encode_node(const Node& n) {
  ByteWriter w;
  w.u8(n.level);
  w.u8(static_cast<uint8_t>(n.keys.size()));
  for (const auto& k : n.keys) {
    w.u32(k.owner);
    w.u32(k.packed);
  }
  for (const auto& v : n.vals) {
    w.u32(v.block);
    w.u32(v.page);
  }
  return w.take();
}

std::optional<Node> decode_node(std::span<const uint8_t> payload) {
  try {
    ByteReader r(payload);
    Node n;
    n.level = r.u8();
    uint8_t count = r.u8();
    n.keys.resize(count);
    n.vals.resize(count);
    for (auto& k : n.keys) {
      k.owner = r.u32();
      k.packed = r.u32();
    }
    for (auto& v : n.vals) {
      v.block = r.u32();
      v.page = r.u32();
    }
    if (!r.done()) return std::nullopt;
    return n;
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Journal entry opcodes. Replay applies one operation's entries atomically:
// plain entries buffer until their kJOpEnd marker and an unterminated tail is
// discarded, while entries carrying the kJMig flag (GC moves of already
// committed pages) apply unconditionally, since their old location may be
// erased the moment the batch is durable.
constexpr uint8_t kJSet = 1;
constexpr uint8_t kJDel = 2;
constexpr uint8_t kJSize = 3;
constexpr uint8_t kJSizeDrop = 4;
constexpr uint8_t kJOpEnd = 5;
constexpr uint8_t kJMig = 0x80;

struct CommitInfo {
  uint64_t generation = 0;
  Loc root;
  uint8_t height = 0;
  uint64_t seq_hint = 2;
  uint32_t oid_next = kRootOid + 1;
  uint32_t journal_frontier = 0;
};

std::vector<uint8_t> encode_commit(const CommitInfo& c) {
  ByteWriter w;
  w.u64(c.generation);
  w.u32(c.root.block);
  w.u32(c.root.page);
  w.u8(c.height);
  w.u64(c.seq_hint);
  w.u32(c.oid_next);
  w.u32(c.journal_frontier);
  return w.take();
}

std::optional<CommitInfo> decode_commit(std::span<const uint8_t> payload) {
  try {
    ByteReader r(payload);
    CommitInfo c;
    c.generation = r.u64();
    c.root.block = r.u32();
    c.root.page = r.u32();
    c.height = r.u8();
    c.seq_hint = r.u64();
    c.oid_next = r.u32();
    c.journal_frontier = r.u32();
    if (!r.done()) return std::nullopt;
    return c;
  } catch (const Error&) {
    return std::nullopt;
  }
}


namespace {
inline bool tree_dbg() {
  static const bool on = ::getenv("FFSIM_TREE_DEBUG") != nullptr;
  return on;
}
}  // namespace

struct ChildInfo {
  uint32_t oid = 0;
  uint32_t parent = 0;
  NodeKind kind = NodeKind::Dir;
  uint64_t size = 0;
  Loc meta_loc;
  std::string name;
};

class TreeFs final : public FsCore {
 public:
  TreeFs(FlashDevice& dev, const AnchorInfo& anchor)
      : FsCore(dev, anchor.variant, anchor) {
    for (uint32_t b : regions_.commit_blocks)
      if (!dev_->is_bad(b)) good_commit_.push_back(b);
    for (uint32_t b : regions_.journal_blocks)
      if (!dev_->is_bad(b)) good_journal_.push_back(b);
    if (good_commit_.empty() || good_journal_.empty())
      throw Error(ErrorCode::DeviceTooSmall, "tree regions unusable");
  }

  uint64_t ram_units() const override { return cache_.size(); }

  void flush_node_cache() override {
    cache_.clear();
    lru_.clear();
  }

  void init_empty() {
    seq_next_ = 2;  // anchor took seq 1
    oid_next_ = kRootOid + 1;
  }

  // Writes the bootstrap commit so a fresh filesystem mounts without a scan.
  void write_initial_commit() { write_commit_page(0); }

  void mount_tree(MountStats& stats) {
    // Latest commit: fixed-probe frontier search per commit block, then one
    // read from the top of each non-empty block (more only after torn writes).
    std::optional<CommitInfo> best;
    uint32_t best_block_idx = 0;
    uint32_t best_frontier = 0;
    for (size_t i = 0; i < good_commit_.size(); ++i) {
      uint32_t b = good_commit_[i];
      uint32_t f = frontier_bisect(pages_per_block(), [&](uint32_t p) {
        return all_ff(dev_->read_page(b, p).data);
      });
      book_[b].programmed = f;
      for (uint32_t p = f; p > 0; --p) {
        auto img = dev_->read_page(b, p - 1);
        auto rec = ChunkRecord::decode(img.data);
        if (!rec || rec->object_id != kCommitOid) continue;
        auto c = decode_commit(rec->payload);
        if (!c) continue;
        if (!best || c->generation > best->generation) {
          best = *c;
          best_block_idx = static_cast<uint32_t>(i);
          best_frontier = f;
        }
        break;
      }
    }
    if (!best) throw Error(ErrorCode::NotFormatted, "no commit record");
    commit_ = *best;
    commit_head_idx_ = best_block_idx;
    commit_head_page_ = best_frontier;
    root_loc_ = commit_.root;
    height_ = commit_.height;
    oid_next_ = commit_.oid_next;

    // Journal frontier over the whole region, then replay the tail.
    jf_ = frontier_bisect(journal_pages(), [&](uint32_t p) {
      Loc l = journal_loc(p);
      return all_ff(dev_->read_page(l.block, l.page).data);
    });
    for (size_t i = 0; i < good_journal_.size(); ++i) {
      uint32_t base = static_cast<uint32_t>(i) * pages_per_block();
      book_[good_journal_[i]].programmed =
          jf_ > base ? std::min(jf_ - base, pages_per_block()) : 0;
    }
    uint64_t max_seq = commit_.seq_hint;
    if (tree_dbg())
      std::fprintf(stderr, "[mount] gen=%llu replay [%u,%u)\n",
                   (unsigned long long)commit_.generation, commit_.journal_frontier, jf_);
    replay_journal(commit_.journal_frontier, jf_, max_seq);
    seq_next_ = max_seq + 1;
    records_since_commit_ = jf_ - std::min(jf_, commit_.journal_frontier);

    if (root_loc_.valid()) (void)load_node(root_loc_);
    stats.full_scan = false;
  }

 protected:
  void before_mutation() override { ensure_block_state(); }

  void ensure_block_state() override {
    if (bs_ready_) return;
    bs_ready_ = true;
    const uint32_t ppb = pages_per_block();
    for (uint32_t b = 0; b < book_.size(); ++b) {
      if (!is_pool_block(b) || book_[b].role == BlockRole::Dead) continue;
      uint32_t lo = 0, hi = ppb;
      while (lo < hi) {
        uint32_t mid = lo + (hi - lo) / 2;
        if (all_ff(dev_->read_page(b, mid).data))
          hi = mid;
        else
          lo = mid + 1;
      }
      book_[b].programmed = lo;
    }
    if (root_loc_.valid()) {
      ref_inc(root_loc_);
      walk_refs(root_loc_);
    }
    for (const auto& [k, ov] : overlay_) {
      auto c = committed_lookup(k);
      if (c) ref_dec(*c);
      if (ov) {
        ref_inc(*ov);
        book_[ov->block].role = BlockRole::Data;
      }
    }
    for (uint32_t b = 0; b < book_.size(); ++b) {
      if (!is_pool_block(b) || book_[b].role == BlockRole::Dead) continue;
      if (book_[b].programmed == 0) {
        book_[b].role = BlockRole::Pool;
        free_blocks_.push_back(b);
      } else if (book_[b].role == BlockRole::Pool) {
        book_[b].role = BlockRole::Data;  // garbage-only block; erase reclaims it
      }
    }
  }

  void do_mkdir(const std::string& path) override { create_node(path, NodeKind::Dir); }
  void do_create(const std::string& path) override { create_node(path, NodeKind::File); }

  void do_write(const std::string& path, uint64_t offset,
                std::span<const uint8_t> data) override {
    ChildInfo info = resolve_path(path);
    if (info.kind != NodeKind::File) throw Error(ErrorCode::IsADirectory, path);
    if (offset > info.size) throw Error(ErrorCode::RangeBeyondEof, "write past end of " + path);
    if (offset + data.size() > kMaxFileBytes) throw Error(ErrorCode::TooLarge, path);
    if (data.empty()) return;
    const uint32_t oid = info.oid;
    const uint32_t off = static_cast<uint32_t>(offset);
    const uint32_t wend = static_cast<uint32_t>(offset + data.size());

    // Preserve the tail of a partially overwritten extent before anything
    // loses its key: point the surviving range at the donor record.
    if (wend < info.size) {
      auto at = merged_range(data_key(oid, wend), data_key(oid, wend + 1));
      if (at.empty()) {
        auto fl = merged_floor(data_key(oid, wend));
        assert(fl && fl->first.owner == oid && fl->first.packed < kTypeMetaBit);
        ov_set(data_key(oid, wend), fl->second);
      }
    }
    // Old extent keys strictly inside the overwritten range go away; a key
    // exactly at `off` is overwritten by the first new chunk below.
    if (wend > off + 1) {
      auto olds = merged_range(data_key(oid, off + 1), data_key(oid, wend));
      for (const auto& [k, l] : olds) ov_del(k);
    }
    emit_file_data(oid, info.parent, offset, data,
                   [&](const EmittedChunk& c) { ov_set(data_key(oid, c.offset), c.loc); });
    if (wend > info.size) set_size(oid, wend);
    flush_batch(RecordKind::Journal, true);
  }

  std::vector<uint8_t> do_read(const std::string& path, uint64_t offset,
                               uint64_t length) override {
    ChildInfo info = resolve_path(path);
    if (info.kind != NodeKind::File) throw Error(ErrorCode::IsADirectory, path);
    if (offset + length > info.size)
      throw Error(ErrorCode::RangeBeyondEof, "read past end of " + path);
    std::vector<uint8_t> out(static_cast<size_t>(length));
    if (length == 0) return out;
    const uint32_t oid = info.oid;
    const uint32_t off = static_cast<uint32_t>(offset);
    const uint32_t rend = static_cast<uint32_t>(offset + length);

    // Extents covering [off, rend): the floor extent plus every key inside.
    std::map<TreeKey, Loc> view = merged_range(data_key(oid, off), data_key(oid, rend));
    if (view.empty() || view.begin()->first.packed > off) {
      auto fl = merged_floor(data_key(oid, off));
      assert(fl && fl->first.owner == oid && fl->first.packed < kTypeMetaBit);
      view.emplace(fl->first, fl->second);
    }
    uint64_t pos = off;
    auto it = view.begin();
    while (pos < rend) {
      assert(it != view.end() && it->first.packed <= pos);
      auto next = std::next(it);
      uint64_t ext_end = next != view.end() ? next->first.packed : rend;
      ChunkRecord rec = read_record(it->second);
      auto raw = decompress(rec.codec, rec.payload, rec.length_raw);
      uint64_t take_end = std::min<uint64_t>(rend, ext_end);
      assert(pos >= rec.file_offset && take_end <= rec.file_offset + rec.length_raw);
      size_t rec_base = static_cast<size_t>(pos - rec.file_offset);
      std::copy(raw.begin() + rec_base, raw.begin() + rec_base + (take_end - pos),
                out.begin() + (pos - off));
      pos = take_end;
      it = next;
    }
    return out;
  }

  void do_remove(const std::string& path) override {
    auto parts = split_path(path);
    if (parts.empty()) throw Error(ErrorCode::InvalidPath, "cannot remove root");
    uint32_t parent = resolve_dir_prefix(parts);
    auto child = lookup_child(parent, parts.back());
    if (!child) throw Error(ErrorCode::NotFound, path);
    const uint32_t oid = child->oid;
    if (child->kind == NodeKind::Dir) {
      auto ents = merged_range(TreeKey{oid, kTypeDirentBit}, TreeKey{oid, UINT32_MAX});
      if (!ents.empty()) throw Error(ErrorCode::DirNotEmpty, path);
    } else {
      auto data = merged_range(data_key(oid, 0), TreeKey{oid, kTypeMetaBit});
      for (const auto& [k, l] : data) ov_del(k);
    }
    ov_del(meta_key(oid));
    ov_del(dirent_key(parent, oid));
    drop_size(oid);
    flush_batch(RecordKind::Deletion, true);
  }

  std::vector<DirEntry> do_readdir(const std::string& path) override {
    auto parts = split_path(path);
    uint32_t oid = kRootOid;
    if (!parts.empty()) {
      uint32_t parent = resolve_dir_prefix(parts);
      auto child = lookup_child(parent, parts.back());
      if (!child) throw Error(ErrorCode::NotFound, path);
      if (child->kind != NodeKind::Dir) throw Error(ErrorCode::NotADirectory, path);
      oid = child->oid;
    }
    std::vector<DirEntry> out;
    auto ents = merged_range(TreeKey{oid, kTypeDirentBit}, TreeKey{oid, UINT32_MAX});
    for (const auto& [k, loc] : ents) {
      ChunkRecord rec = read_record(loc);
      auto mp = decode_meta(rec.payload);
      if (!mp) throw Error(ErrorCode::ChecksumMismatch, "bad meta record");
      uint64_t size = mp->size;
      auto ds = dirty_sizes_.find(k.packed & ~kTypeDirentBit);
      if (ds != dirty_sizes_.end()) size = ds->second;
      out.push_back({mp->name, mp->kind, mp->kind == NodeKind::File ? size : 0});
    }
    std::sort(out.begin(), out.end(),
              [](const DirEntry& a, const DirEntry& b) { return a.name < b.name; });
    return out;
  }

  FsStat do_stat(const std::string& path) override {
    ChildInfo info = resolve_path(path);
    return {info.kind, info.kind == NodeKind::File ? info.size : 0, info.oid};
  }

  void do_clean_unmount() override {
    assert(jbatch_.data().empty());
    assert(!group_open_);
    // A replayed journal can leave the overlay dirty on an otherwise untouched
    // mount; the fold below then needs the allocator, so build its state now.
    if (!overlay_.empty() || !dirty_sizes_.empty()) ensure_block_state();
    tree_commit(false);
  }

  uint32_t migrate_block(uint32_t victim) override;

  // Keep rollback targets of the running operation out of GC's reach.
  bool veto_victim(uint32_t block) const override {
    return pinned_blocks_.count(block) > 0;
  }

 private:
  // ---- node cache ----

  std::shared_ptr<const Node> load_node(Loc loc) {
    uint64_t key = loc_key(loc);
    auto it = cache_.find(key);
    if (it != cache_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return it->second.first;
    }
    ChunkRecord rec = read_record(loc);
    if (rec.kind != RecordKind::IndexNode)
      throw Error(ErrorCode::ChecksumMismatch, "expected index node");
    auto node = decode_node(rec.payload);
    if (!node) throw Error(ErrorCode::ChecksumMismatch, "bad index node");
    auto sp = std::make_shared<const Node>(std::move(*node));
    lru_.push_front(key);
    cache_.emplace(key, std::make_pair(sp, lru_.begin()));
    while (cache_.size() > opts_.cache_capacity && !lru_.empty()) {
      cache_.erase(lru_.back());
      lru_.pop_back();
    }
    return sp;
  }

  void drop_cached(Loc loc) {
    auto it = cache_.find(loc_key(loc));
    if (it == cache_.end()) return;
    lru_.erase(it->second.second);
    cache_.erase(it);
  }

  // ---- committed tree reads ----

  std::optional<Loc> committed_lookup(TreeKey k) {
    if (!root_loc_.valid()) return std::nullopt;
    Loc cur = root_loc_;
    for (;;) {
      auto n = load_node(cur);
      if (n->level == 0) {
        auto it = std::lower_bound(n->keys.begin(), n->keys.end(), k);
        if (it != n->keys.end() && *it == k) return n->vals[it - n->keys.begin()];
        return std::nullopt;
      }
      auto it = std::upper_bound(n->keys.begin(), n->keys.end(), k);
      if (it == n->keys.begin()) return std::nullopt;
      cur = n->vals[it - n->keys.begin() - 1];
    }
  }

  std::optional<std::pair<TreeKey, Loc>> committed_floor(TreeKey k) {
    if (!root_loc_.valid()) return std::nullopt;
    Loc cur = root_loc_;
    for (;;) {
      auto n = load_node(cur);
      auto it = std::upper_bound(n->keys.begin(), n->keys.end(), k);
      if (it == n->keys.begin()) return std::nullopt;
      size_t idx = it - n->keys.begin() - 1;
      if (n->level == 0) return std::make_pair(n->keys[idx], n->vals[idx]);
      cur = n->vals[idx];
    }
  }

  void committed_range(Loc loc, TreeKey lo, TreeKey hi, std::map<TreeKey, Loc>& out) {
    auto n = load_node(loc);
    if (n->level == 0) {
      auto it = std::lower_bound(n->keys.begin(), n->keys.end(), lo);
      for (; it != n->keys.end() && *it < hi; ++it)
        out.emplace(*it, n->vals[it - n->keys.begin()]);
      return;
    }
    for (size_t i = 0; i < n->keys.size(); ++i) {
      if (!(n->keys[i] < hi)) break;
      if (i + 1 < n->keys.size() && !(lo < n->keys[i + 1])) continue;
      committed_range(n->vals[i], lo, hi, out);
    }
  }

  // ---- merged (overlay over committed) view ----

  std::optional<Loc> lookup(TreeKey k) {
    auto it = overlay_.find(k);
    if (it != overlay_.end()) return it->second;
    return committed_lookup(k);
  }

  std::map<TreeKey, Loc> merged_range(TreeKey lo, TreeKey hi) {
    std::map<TreeKey, Loc> out;
    if (root_loc_.valid()) committed_range(root_loc_, lo, hi, out);
    for (auto it = overlay_.lower_bound(lo); it != overlay_.end() && it->first < hi; ++it) {
      if (it->second)
        out[it->first] = *it->second;
      else
        out.erase(it->first);
    }
    return out;
  }

  std::optional<std::pair<TreeKey, Loc>> merged_floor(TreeKey k) {
    std::optional<std::pair<TreeKey, Loc>> best;
    TreeKey probe = k;
    for (;;) {
      auto c = committed_floor(probe);
      if (!c) break;
      auto ov = overlay_.find(c->first);
      if (ov == overlay_.end()) {
        best = c;
        break;
      }
      if (ov->second) {
        best = std::make_pair(c->first, *ov->second);
        break;
      }
      if (c->first == TreeKey{0, 0}) break;
      probe = pred_key(c->first);  // shadowed by a pending erase; keep looking
    }
    for (auto it = overlay_.upper_bound(k); it != overlay_.begin();) {
      --it;
      if (best && it->first < best->first) break;
      if (it->second) {
        if (!best || best->first < it->first) best = std::make_pair(it->first, *it->second);
        break;
      }
    }
    return best;
  }

  // ---- journaled overlay mutations ----
  //
  // Reference counts drop eagerly: once the move is journaled, recovery
  // re-points the key before anything reads through it, so the old page may
  // be reclaimed at any time. Since replay discards an operation's entries
  // when its end marker never became durable, the rollback target (the old
  // location) is pinned against erasure until the marker is written.

  // True for GC moves of pages the running operation has not touched; those
  // entries replay unconditionally.
  bool mig_entry(TreeKey k) const {
    return in_migration_ && pending_keys_.find(k) == pending_keys_.end();
  }

  void ov_set(TreeKey k, Loc v) {
    auto old = lookup(k);
    overlay_[k] = v;
    ref_inc(v);
    book_[v.block].role = BlockRole::Data;
    if (old) ref_dec(*old);
    bool mig = mig_entry(k);
    if (!mig) {
      pending_keys_.insert(k);
      jbatch_has_user_ = true;
      if (old) pinned_blocks_.insert(old->block);
    }
    jbatch_.u8(mig ? uint8_t(kJSet | kJMig) : kJSet);
    jbatch_.u32(k.owner);
    jbatch_.u32(k.packed);
    jbatch_.u32(v.block);
    jbatch_.u32(v.page);
  }

  void ov_del(TreeKey k) {
    auto old = lookup(k);
    overlay_[k] = std::nullopt;
    if (old) ref_dec(*old);
    bool mig = mig_entry(k);
    if (!mig) {
      pending_keys_.insert(k);
      jbatch_has_user_ = true;
      if (old) pinned_blocks_.insert(old->block);
    }
    jbatch_.u8(mig ? uint8_t(kJDel | kJMig) : kJDel);
    jbatch_.u32(k.owner);
    jbatch_.u32(k.packed);
  }

  void set_size(uint32_t oid, uint64_t size) {
    dirty_sizes_[oid] = size;
    jbatch_has_user_ = true;
    jbatch_.u8(kJSize);
    jbatch_.u32(oid);
    jbatch_.u64(size);
  }

  void drop_size(uint32_t oid) {
    dirty_sizes_.erase(oid);
    jbatch_has_user_ = true;
    jbatch_.u8(kJSizeDrop);
    jbatch_.u32(oid);
  }

  // ---- journal region ----

  uint32_t journal_pages() const {
    return static_cast<uint32_t>(good_journal_.size()) * pages_per_block();
  }

  Loc journal_loc(uint32_t idx) const {
    return {good_journal_[idx / pages_per_block()], idx % pages_per_block()};
  }

  void program_reserved(ChunkRecord& rec, Loc loc) {
    rec.seq = seq_next_++;
    auto image = rec.encode();
    OobMirror mirror{rec.kind, rec.seq, rec.object_id};
    auto oob = mirror.encode();
    dev_->program_page(loc.block, loc.page, image, oob);
    book_[loc.block].programmed = std::max(book_[loc.block].programmed, loc.page + 1);
  }

  // op_end seals the running operation's entries: replay applies them only
  // once the marker is durable. Flushes without it (GC mid-operation) leave
  // the group open across batches.
  void flush_batch(RecordKind kind, bool op_end) {
    if (jbatch_.data().empty() && !(op_end && group_open_)) return;
    if (op_end) jbatch_.u8(kJOpEnd);
    auto entries = jbatch_.take();
    bool had_user = jbatch_has_user_;
    jbatch_has_user_ = false;
    ByteWriter full;
    full.u32(static_cast<uint32_t>(entries.size()));
    full.bytes(entries.data(), entries.size());
    auto bytes = full.take();
    const size_t cap = payload_capacity();
    uint32_t parts = static_cast<uint32_t>((bytes.size() + cap - 1) / cap);
    if (jf_ + parts > journal_pages()) {
      if (in_commit_)
        erase_journal_region();  // widens crash loss to the last commit
      else
        tree_commit(true);
      if (jf_ + parts > journal_pages())
        throw Error(ErrorCode::NoSpace, "journal batch exceeds region");
    }
    size_t off = 0;
    for (uint32_t i = 0; i < parts; ++i) {
      size_t n = std::min(cap, bytes.size() - off);
      ChunkRecord rec;
      rec.object_id = kJournalOid;
      rec.parent_id = batch_id_;
      rec.kind = kind;
      rec.codec = Codec::None;
      rec.file_offset = i;
      rec.length_raw = static_cast<uint16_t>(n);
      rec.length_stored = static_cast<uint16_t>(n);
      rec.payload.assign(bytes.begin() + off, bytes.begin() + off + n);
      program_reserved(rec, journal_loc(jf_));
      ++jf_;
      off += n;
    }
    ++batch_id_;
    records_since_commit_ += parts;
    if (op_end) {
      group_open_ = false;
      pending_keys_.clear();
      pinned_blocks_.clear();
    } else if (had_user) {
      group_open_ = true;
    }
    if (!in_commit_ && op_end && records_since_commit_ >= opts_.journal_cap_records)
      tree_commit(false);
  }

  void erase_journal_region() {
    // Descending order keeps the programmed pages a prefix of the region at
    // every instant, so a crash mid-erase still bisects correctly.
    for (size_t i = good_journal_.size(); i-- > 0;) {
      uint32_t b = good_journal_[i];
      if (dev_->is_bad(b) || book_[b].programmed == 0) continue;
      dev_->erase_block(b);
      book_[b].programmed = 0;
    }
    good_journal_.erase(std::remove_if(good_journal_.begin(), good_journal_.end(),
                                       [this](uint32_t b) { return dev_->is_bad(b); }),
                        good_journal_.end());
    if (good_journal_.empty()) throw Error(ErrorCode::NoSpace, "journal region worn out");
    jf_ = 0;
    jf_anchor_ = 0;
  }

  void replay_journal(uint32_t from, uint32_t to, uint64_t& max_seq) {
    std::vector<uint8_t> acc;
    uint32_t want_total = 0;
    uint32_t cur_batch = 0;
    bool in_batch = false;
    struct JEntry {
      uint8_t op;
      TreeKey k{0, 0};
      Loc v{0, 0};
      uint32_t oid = 0;
      uint64_t size = 0;
    };
    // Entries of the operation currently being replayed; they take effect at
    // its end marker and an unterminated tail is dropped wholesale.
    std::vector<JEntry> open_group;
    auto apply_one = [&](const JEntry& e) {
      if (tree_dbg())
        std::fprintf(stderr, "[replay] op=%u owner=%u packed=%08x oid=%u size=%llu\n", e.op,
                     e.k.owner, e.k.packed, e.oid, (unsigned long long)e.size);
      switch (e.op) {
        case kJSet:
          overlay_[e.k] = e.v;
          note_oid(e.k);
          break;
        case kJDel:
          overlay_[e.k] = std::nullopt;
          note_oid(e.k);
          break;
        case kJSize:
          dirty_sizes_[e.oid] = e.size;
          break;
        case kJSizeDrop:
          dirty_sizes_.erase(e.oid);
          break;
      }
    };
    auto apply_acc = [&]() {
      ByteReader r(std::span<const uint8_t>(acc.data(), acc.size()));
      while (!r.done()) {
        uint8_t raw = r.u8();
        if (raw == kJOpEnd) {
          for (const auto& e : open_group) apply_one(e);
          open_group.clear();
          continue;
        }
        JEntry e;
        e.op = raw & static_cast<uint8_t>(~kJMig);
        if (e.op == kJSet) {
          e.k = {r.u32(), r.u32()};
          e.v = {r.u32(), r.u32()};
        } else if (e.op == kJDel) {
          e.k = {r.u32(), r.u32()};
        } else if (e.op == kJSize) {
          e.oid = r.u32();
          e.size = r.u64();
        } else if (e.op == kJSizeDrop) {
          e.oid = r.u32();
        } else {
          throw Error(ErrorCode::ChecksumMismatch, "bad journal entry");
        }
        if (raw & kJMig)
          apply_one(e);
        else
          open_group.push_back(e);
      }
    };
    for (uint32_t p = from; p < to; ++p) {
      Loc l = journal_loc(p);
      auto img = dev_->read_page(l.block, l.page);
      auto rec = ChunkRecord::decode(img.data);
      if (!rec || (rec->kind != RecordKind::Journal && rec->kind != RecordKind::Deletion) ||
          rec->object_id != kJournalOid)
        break;  // torn tail: recovery keeps the complete-batch prefix
      max_seq = std::max(max_seq, rec->seq);
      batch_id_ = std::max(batch_id_, rec->parent_id + 1);
      if (rec->file_offset == 0) {
        if (in_batch) break;  // previous batch never finished
        if (rec->payload.size() < 4) break;
        ByteReader hr(rec->payload);
        want_total = hr.u32();
        acc.assign(rec->payload.begin() + 4, rec->payload.end());
        cur_batch = rec->parent_id;
        in_batch = true;
      } else {
        if (!in_batch || rec->parent_id != cur_batch) break;
        acc.insert(acc.end(), rec->payload.begin(), rec->payload.end());
      }
      if (in_batch && acc.size() >= want_total) {
        if (acc.size() != want_total) break;
        try {
          apply_acc();
        } catch (const Error&) {
          break;
        }
        in_batch = false;
        acc.clear();
      }
    }
  }

  void note_oid(TreeKey k) {
    uint32_t oid = k.owner;
    if ((k.packed & kTypeDirentBit) == kTypeDirentBit)
      oid = std::max(oid, k.packed & ~kTypeDirentBit);
    if (oid <= kMaxUserOid) oid_next_ = std::max(oid_next_, oid + 1);
  }

  // ---- commit ----
  //
  // The sealed commit must not depend on anything erased afterwards. Two
  // rules give that: the replay point is snapshot before the fold (so key
  // moves journaled by GC running inside the fold replay on top of the new
  // tree), and the journal region is only erased when this fold and the
  // previous one both ended with an empty overlay, meaning both trees stand
  // alone without replay.

  void tree_commit(bool force_region_reset) {
    if (in_commit_) return;
    if (overlay_.empty() && dirty_sizes_.empty() && !force_region_reset) return;
    if (tree_dbg())
      std::fprintf(stderr, "[commit] begin overlay=%zu dirty=%zu force=%d jf=%u rsc=%u\n",
                   overlay_.size(), dirty_sizes_.size(), force_region_reset ? 1 : 0, jf_,
                   records_since_commit_);
    in_commit_ = true;
    try {
      // File sizes accumulated in RAM become fresh meta records. These are
      // ordinary journaled mutations, folded below with everything else.
      if (!dirty_sizes_.empty()) {
        auto sizes = std::move(dirty_sizes_);
        dirty_sizes_.clear();
        for (const auto& [oid, size] : sizes) {
          auto ml = lookup(meta_key(oid));
          if (tree_dbg())
            std::fprintf(stderr, "[commit] size-fold oid=%u size=%llu ml=%d\n", oid,
                         (unsigned long long)size, ml ? 1 : 0);
          if (!ml) continue;
          ChunkRecord old = read_record(*ml);
          auto mp = decode_meta(old.payload);
          if (tree_dbg())
            std::fprintf(stderr, "[commit] size-fold oid=%u mp=%d stored=%lld\n", oid,
                         mp ? 1 : 0, mp ? (long long)mp->size : -1);
          if (!mp || mp->size == size) continue;
          ChunkRecord fresh;
          fresh.object_id = oid;
          fresh.parent_id = old.parent_id;
          fresh.kind = old.kind;
          fresh.codec = Codec::None;
          fresh.payload = encode_meta(mp->kind, size, mp->name);
          fresh.length_raw = static_cast<uint16_t>(fresh.payload.size());
          fresh.length_stored = fresh.length_raw;
          Loc nl = write_record(fresh, BlockRole::Data);
          ov_set(meta_key(oid), nl);
          ov_set(dirent_key(old.parent_id, oid), nl);
        }
        flush_batch(RecordKind::Journal, true);
      }

      jf_anchor_ = jf_;
      // Writing the new tree may trigger GC whose migrations re-populate the
      // overlay; fold again until it stays empty (or give up and lean on the
      // journal via the replay point).
      for (int iter = 0; iter < 8 && !overlay_.empty(); ++iter) {
        auto snap = std::move(overlay_);
        overlay_.clear();
        fold_overlay_into_tree(snap);
      }
      bool self_contained = overlay_.empty();

      if ((force_region_reset || jf_ > journal_pages() / 2) && self_contained &&
          last_commit_self_contained_) {
        erase_journal_region();
      }
      if (tree_dbg())
        std::fprintf(stderr, "[commit] folded self=%d anchor=%u jf=%u\n",
                     self_contained ? 1 : 0, jf_anchor_, jf_);
      write_commit_page(jf_anchor_);
      last_commit_self_contained_ = self_contained;
    } catch (...) {
      in_commit_ = false;
      throw;
    }
    for (Loc l : pending_decs_) ref_dec(l);
    pending_decs_.clear();
    records_since_commit_ = jf_ - std::min(jf_, jf_anchor_);
    in_commit_ = false;
  }

  void write_commit_page(uint32_t replay_from) {
    if (commit_head_page_ >= pages_per_block()) {
      uint32_t other = (commit_head_idx_ + 1) % static_cast<uint32_t>(good_commit_.size());
      if (other == commit_head_idx_)
        throw Error(ErrorCode::NoSpace, "commit area worn out");
      uint32_t b = good_commit_[other];
      if (dev_->is_bad(b)) throw Error(ErrorCode::NoSpace, "commit area worn out");
      dev_->erase_block(b);  // holds only generations older than the current block
      book_[b].programmed = 0;
      if (dev_->is_bad(b)) throw Error(ErrorCode::NoSpace, "commit area worn out");
      commit_head_idx_ = other;
      commit_head_page_ = 0;
    }
    commit_.generation++;
    commit_.root = root_loc_;
    commit_.height = height_;
    commit_.seq_hint = seq_next_;
    commit_.oid_next = oid_next_;
    commit_.journal_frontier = replay_from;
    ChunkRecord rec;
    rec.object_id = kCommitOid;
    rec.parent_id = static_cast<uint32_t>(commit_.generation);
    rec.kind = RecordKind::Checkpoint;
    rec.codec = Codec::None;
    rec.payload = encode_commit(commit_);
    rec.length_raw = static_cast<uint16_t>(rec.payload.size());
    rec.length_stored = rec.length_raw;
    program_reserved(rec, {good_commit_[commit_head_idx_], commit_head_page_});
    commit_head_page_++;
  }

  // ---- copy-on-write fold ----

  struct MutNode {
    uint8_t level = 0;
    std::vector<TreeKey> keys;
    std::vector<Loc> locs;
    std::vector<std::unique_ptr<MutNode>> kids;  // non-null overrides locs
  };

  std::unique_ptr<MutNode> mutify(Loc loc) {
    auto n = load_node(loc);
    auto m = std::make_unique<MutNode>();
    m->level = n->level;
    m->keys = n->keys;
    m->locs = n->vals;
    m->kids.resize(n->keys.size());
    drop_cached(loc);
    // The old node stays referenced until the replacement tree seals, so a
    // crash mid-commit recovers from the previous root untouched.
    pending_decs_.push_back(loc);
    return m;
  }

  struct Split {
    TreeKey key;
    std::unique_ptr<MutNode> node;
  };

  std::optional<Split> maybe_split(MutNode* n, bool appended) {
    if (n->keys.size() <= opts_.fanout) return std::nullopt;
    // Appending splits keep the left node full so sequential fills pack tight.
    size_t cut = appended ? opts_.fanout : n->keys.size() / 2;
    auto right = std::make_unique<MutNode>();
    right->level = n->level;
    right->keys.assign(n->keys.begin() + cut, n->keys.end());
    right->locs.assign(n->locs.begin() + cut, n->locs.end());
    for (size_t i = cut; i < n->kids.size(); ++i)
      right->kids.push_back(std::move(n->kids[i]));
    n->keys.resize(cut);
    n->locs.resize(cut);
    n->kids.resize(cut);
    return Split{right->keys[0], std::move(right)};
  }

  std::optional<Split> mut_insert(MutNode* n, TreeKey k, Loc v) {
    if (n->level == 0) {
      auto it = std::lower_bound(n->keys.begin(), n->keys.end(), k);
      size_t pos = it - n->keys.begin();
      if (it != n->keys.end() && *it == k) {
        n->locs[pos] = v;
        return std::nullopt;
      }
      n->keys.insert(it, k);
      n->locs.insert(n->locs.begin() + pos, v);
      n->kids.insert(n->kids.begin() + pos, nullptr);
      return maybe_split(n, pos + 1 == n->keys.size());
    }
    auto it = std::upper_bound(n->keys.begin(), n->keys.end(), k);
    size_t idx = it == n->keys.begin() ? 0 : (it - n->keys.begin() - 1);
    if (!n->kids[idx]) n->kids[idx] = mutify(n->locs[idx]);
    auto sp = mut_insert(n->kids[idx].get(), k, v);
    n->keys[idx] = n->kids[idx]->keys[0];
    if (sp) {
      size_t at = idx + 1;
      n->keys.insert(n->keys.begin() + at, sp->key);
      n->locs.insert(n->locs.begin() + at, kNilLoc);
      n->kids.insert(n->kids.begin() + at, std::move(sp->node));
      return maybe_split(n, at + 1 == n->keys.size());
    }
    return std::nullopt;
  }

  // Returns true when the node ends up empty.
  bool mut_remove(MutNode* n, TreeKey k) {
    if (n->level == 0) {
      auto it = std::lower_bound(n->keys.begin(), n->keys.end(), k);
      if (it == n->keys.end() || !(*it == k)) return n->keys.empty();
      size_t pos = it - n->keys.begin();
      n->keys.erase(it);
      n->locs.erase(n->locs.begin() + pos);
      n->kids.erase(n->kids.begin() + pos);
      return n->keys.empty();
    }
    auto it = std::upper_bound(n->keys.begin(), n->keys.end(), k);
    if (it == n->keys.begin()) return n->keys.empty();
    size_t idx = it - n->keys.begin() - 1;
    if (!n->kids[idx]) n->kids[idx] = mutify(n->locs[idx]);
    if (mut_remove(n->kids[idx].get(), k)) {
      n->keys.erase(n->keys.begin() + idx);
      n->locs.erase(n->locs.begin() + idx);
      n->kids.erase(n->kids.begin() + idx);
    } else {
      n->keys[idx] = n->kids[idx]->keys[0];
    }
    return n->keys.empty();
  }

  Loc emit_node(MutNode* n) {
    Node out;
    out.level = n->level;
    out.keys = n->keys;
    out.vals.resize(n->keys.size());
    for (size_t i = 0; i < n->keys.size(); ++i)
      out.vals[i] = n->kids[i] ? emit_node(n->kids[i].get()) : n->locs[i];
    ChunkRecord rec;
    rec.object_id = kIndexNodeOid;
    rec.parent_id = 0;
    rec.kind = RecordKind::IndexNode;
    rec.codec = Codec::None;
    rec.file_offset = n->level;
    rec.payload = encode_node(out);
    rec.length_raw = static_cast<uint16_t>(rec.payload.size());
    rec.length_stored = rec.length_raw;
    Loc loc = write_record(rec, BlockRole::Index);
    book_[loc.block].role = BlockRole::Index;
    ref_inc(loc);
    return loc;
  }

  void fold_overlay_into_tree(const std::map<TreeKey, std::optional<Loc>>& snap) {
    std::unique_ptr<MutNode> root;
    bool committed_root = root_loc_.valid();
    for (const auto& [k, ov] : snap) {
      if (ov) {
        if (!root) {
          if (committed_root) {
            root = mutify(root_loc_);
            committed_root = false;
          } else {
            root = std::make_unique<MutNode>();
          }
        }
        auto sp = mut_insert(root.get(), k, *ov);
        if (sp) {
          auto up = std::make_unique<MutNode>();
          up->level = root->level + 1;
          up->keys = {root->keys[0], sp->key};
          up->locs = {kNilLoc, kNilLoc};
          up->kids.push_back(std::move(root));
          up->kids.push_back(std::move(sp->node));
          root = std::move(up);
        }
      } else {
        if (!root && !committed_root) continue;
        if (!root) {
          root = mutify(root_loc_);
          committed_root = false;
        }
        if (mut_remove(root.get(), k)) root.reset();
        while (root && root->level > 0 && root->keys.size() == 1 && root->kids[0])
          root = std::move(root->kids[0]);
      }
    }
    if (!root) {
      if (!committed_root) {
        root_loc_ = kNilLoc;
        height_ = 0;
      }
      return;  // an untouched committed root keeps its place
    }
    while (root->level > 0 && root->keys.size() == 1) {
      if (root->kids[0]) {
        root = std::move(root->kids[0]);
      } else {
        // Lone committed child becomes the root; nothing above it to write.
        root_loc_ = root->locs[0];
        height_ = root->level;
        return;
      }
    }
    root_loc_ = emit_node(root.get());
    height_ = static_cast<uint8_t>(root->level + 1);
  }

  void walk_refs(Loc loc) {
    book_[loc.block].role = BlockRole::Index;
    auto n = load_node(loc);
    for (size_t i = 0; i < n->keys.size(); ++i) {
      ref_inc(n->vals[i]);
      if (n->level > 0)
        walk_refs(n->vals[i]);
      else
        book_[n->vals[i].block].role = BlockRole::Data;
    }
  }

  // ---- namespace ----

  std::optional<ChildInfo> lookup_child(uint32_t parent, const std::string& name) {
    auto ents = merged_range(TreeKey{parent, kTypeDirentBit}, TreeKey{parent, UINT32_MAX});
    for (const auto& [k, loc] : ents) {
      ChunkRecord rec = read_record(loc);
      auto mp = decode_meta(rec.payload);
      if (!mp) throw Error(ErrorCode::ChecksumMismatch, "bad meta record");
      if (mp->name != name) continue;
      ChildInfo info;
      info.oid = k.packed & ~kTypeDirentBit;
      info.parent = parent;
      info.kind = mp->kind;
      info.size = mp->size;
      auto ds = dirty_sizes_.find(info.oid);
      if (ds != dirty_sizes_.end()) info.size = ds->second;
      info.meta_loc = loc;
      info.name = mp->name;
      return info;
    }
    return std::nullopt;
  }

  // Resolves every component but the last; returns the parent directory oid.
  uint32_t resolve_dir_prefix(const std::vector<std::string>& parts) {
    uint32_t cur = kRootOid;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
      auto child = lookup_child(cur, parts[i]);
      if (!child) throw Error(ErrorCode::NotFound, parts[i]);
      if (child->kind != NodeKind::Dir) throw Error(ErrorCode::NotADirectory, parts[i]);
      cur = child->oid;
    }
    return cur;
  }

  ChildInfo resolve_path(const std::string& path) {
    auto parts = split_path(path);
    if (parts.empty()) {
      ChildInfo root;
      root.oid = kRootOid;
      root.kind = NodeKind::Dir;
      return root;
    }
    uint32_t parent = resolve_dir_prefix(parts);
    auto child = lookup_child(parent, parts.back());
    if (!child) throw Error(ErrorCode::NotFound, path);
    return *child;
  }

  void create_node(const std::string& path, NodeKind kind) {
    auto parts = split_path(path);
    if (parts.empty()) throw Error(ErrorCode::AlreadyExists, "/");
    uint32_t parent = resolve_dir_prefix(parts);
    if (lookup_child(parent, parts.back())) throw Error(ErrorCode::AlreadyExists, path);
    if (oid_next_ > kMaxUserOid) throw Error(ErrorCode::TooLarge, "object ids exhausted");
    uint32_t oid = oid_next_++;
    ChunkRecord rec;
    rec.object_id = oid;
    rec.parent_id = parent;
    rec.kind = kind == NodeKind::Dir ? RecordKind::DirMeta : RecordKind::FileMeta;
    rec.codec = Codec::None;
    rec.payload = encode_meta(kind, 0, parts.back());
    rec.length_raw = static_cast<uint16_t>(rec.payload.size());
    rec.length_stored = rec.length_raw;
    Loc loc = write_record(rec, BlockRole::Data);
    ov_set(meta_key(oid), loc);
    ov_set(dirent_key(parent, oid), loc);
    flush_batch(RecordKind::Journal, true);
  }

  // ---- state ----

  Loc root_loc_;
  uint8_t height_ = 0;
  CommitInfo commit_;
  std::vector<uint32_t> good_commit_;
  std::vector<uint32_t> good_journal_;
  uint32_t commit_head_idx_ = 0;
  uint32_t commit_head_page_ = 0;
  uint32_t jf_ = 0;
  uint32_t jf_anchor_ = 0;
  uint32_t batch_id_ = 1;
  uint32_t records_since_commit_ = 0;
  bool bs_ready_ = false;
  bool in_commit_ = false;
  bool last_commit_self_contained_ = true;

  std::map<TreeKey, std::optional<Loc>> overlay_;
  std::map<uint32_t, uint64_t> dirty_sizes_;
  ByteWriter jbatch_;
  std::vector<Loc> pending_decs_;

  // Crash-atomicity bookkeeping for the running operation: its keys, whether
  // any of its entries were flushed without an end marker yet, and the blocks
  // holding pre-images a rollback would need.
  bool in_migration_ = false;
  bool jbatch_has_user_ = false;
  bool group_open_ = false;
  std::set<TreeKey> pending_keys_;
  std::set<uint32_t> pinned_blocks_;

  std::unordered_map<uint64_t,
                     std::pair<std::shared_ptr<const Node>, std::list<uint64_t>::iterator>>
      cache_;
  std::list<uint64_t> lru_;
};

uint32_t TreeFs::migrate_block(uint32_t victim) {
  struct MigScope {
    bool& flag;
    explicit MigScope(bool& f) : flag(f) { flag = true; }
    ~MigScope() { flag = false; }
  } scope(in_migration_);
  uint32_t written = 0;
  for (uint32_t p = 0; p < book_[victim].programmed; ++p) {
    Loc loc{victim, p};
    if (refs(loc) == 0) continue;
    auto img = dev_->read_page(victim, p);
    auto rec = ChunkRecord::decode(img.data);
    if (!rec) continue;
    switch (rec->kind) {
      case RecordKind::FileData: {
        const uint32_t oid = rec->object_id;
        const uint32_t fo = rec->file_offset;
        const uint32_t span_end = fo + rec->length_raw;
        auto view = merged_range(data_key(oid, fo), data_key(oid, span_end));
        auto raw = decompress(rec->codec, rec->payload, rec->length_raw);
        // Coalesce adjacent extents backed by this page and rewrite each run.
        struct Run {
          uint32_t start;
          std::vector<uint8_t> bytes;
          std::vector<TreeKey> old_keys;
        };
        std::vector<Run> runs;
        for (auto it = view.begin(); it != view.end(); ++it) {
          if (!(it->second == loc)) continue;
          uint32_t start = it->first.packed;
          auto next = std::next(it);
          uint32_t end = next != view.end() ? std::min(next->first.packed, span_end) : span_end;
          if (end <= start) continue;
          if (!runs.empty() && runs.back().start + runs.back().bytes.size() == start) {
            runs.back().bytes.insert(runs.back().bytes.end(), raw.begin() + (start - fo),
                                     raw.begin() + (end - fo));
            runs.back().old_keys.push_back(it->first);
          } else {
            Run r;
            r.start = start;
            r.bytes.assign(raw.begin() + (start - fo), raw.begin() + (end - fo));
            r.old_keys.push_back(it->first);
            runs.push_back(std::move(r));
          }
        }
        for (auto& run : runs) {
          for (const auto& k : run.old_keys) ov_del(k);
          emit_file_data(oid, rec->parent_id, run.start, run.bytes,
                         [&](const EmittedChunk& c) {
                           ov_set(data_key(oid, c.offset), c.loc);
                           ++written;
                         });
        }
        break;
      }
      case RecordKind::FileMeta:
      case RecordKind::DirMeta: {
        const uint32_t oid = rec->object_id;
        auto cur = lookup(meta_key(oid));
        if (!cur || !(*cur == loc)) break;  // stale copy, refs held elsewhere
        ChunkRecord fresh;
        fresh.object_id = oid;
        fresh.parent_id = rec->parent_id;
        fresh.kind = rec->kind;
        fresh.codec = Codec::None;
        fresh.payload = rec->payload;
        fresh.length_raw = rec->length_raw;
        fresh.length_stored = rec->length_stored;
        Loc nl = write_record(fresh, BlockRole::Data);
        ++written;
        ov_set(meta_key(oid), nl);
        ov_set(dirent_key(rec->parent_id, oid), nl);
        break;
      }
      default:
        // Index nodes only live in blocks that must be fully dead before they
        // are eligible, so nothing referenced lands here.
        break;
    }
  }
  // Key moves must be durable before the erase. No end marker: any entries a
  // running operation already queued stay an open group.
  flush_batch(RecordKind::Journal, false);
  return written;
}

}  // namespace

std::unique_ptr<FileSystem> make_tree_fs(FlashDevice& dev, const AnchorInfo& anchor,
                                         MountStats& stats) {
  auto fs = std::make_unique<TreeFs>(dev, anchor);
  fs->mount_tree(stats);
  return fs;
}

void bootstrap_tree(FlashDevice& dev, const AnchorInfo& anchor) {
  TreeFs fs(dev, anchor);
  fs.init_empty();
  fs.write_initial_commit();
}

}  // namespace ffsim
