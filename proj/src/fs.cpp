#include "ffsim/fs.hpp"

#include "fs_internal.hpp"

namespace ffsim {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::LogTable:
      return "logtable";
    case Variant::Checkpoint:
      return "checkpoint";
    case Variant::Tree:
      return "tree";
  }
  return "unknown";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "logtable") return Variant::LogTable;
  if (name == "checkpoint") return Variant::Checkpoint;
  if (name == "tree") return Variant::Tree;
  return std::nullopt;
}

namespace {

std::vector<uint32_t> good_blocks(const FlashDevice& dev) {
  std::vector<uint32_t> out;
  for (uint32_t b = 0; b < dev.geometry().num_blocks; ++b)
    if (!dev.is_bad(b)) out.push_back(b);
  return out;
}

}  // namespace

void format(FlashDevice& dev, Variant variant, const FormatOptions& opts) {
  const uint32_t nb = dev.geometry().num_blocks;

  // Carry the format generation across reformats when an anchor survives.
  uint32_t generation = 1;
  {
    auto good = good_blocks(dev);
    if (!good.empty()) {
      auto img = dev.read_page(good.front(), 0);
      if (!all_ff(img.data)) {
        if (auto rec = ChunkRecord::decode(img.data); rec && rec->kind == RecordKind::Anchor) {
          if (auto old = AnchorInfo::decode(rec->payload)) generation = old->generation + 1;
        }
      }
    }
  }

  for (uint32_t b = 0; b < nb; ++b)
    if (!dev.is_bad(b)) dev.erase_block(b);

  // Blocks can wear out on that erase pass; lay out regions on what is left.
  auto good = good_blocks(dev);
  size_t region_need = 1;  // anchor
  if (variant == Variant::Checkpoint) region_need += checkpoint_region_blocks(nb);
  if (variant == Variant::Tree) region_need += 2 + journal_region_blocks(nb);
  if (good.size() < region_need + 8)
    throw Error(ErrorCode::DeviceTooSmall,
                "need at least " + std::to_string(region_need + 8) + " usable blocks, have " +
                    std::to_string(good.size()));

  AnchorInfo info;
  info.variant = variant;
  info.generation = generation;
  info.opts = opts;
  size_t next = 0;
  info.regions.anchor_block = good[next++];
  if (variant == Variant::Checkpoint) {
    for (uint32_t i = 0; i < checkpoint_region_blocks(nb); ++i)
      info.regions.ckpt_blocks.push_back(good[next++]);
  } else if (variant == Variant::Tree) {
    info.regions.commit_blocks.push_back(good[next++]);
    info.regions.commit_blocks.push_back(good[next++]);
    for (uint32_t i = 0; i < journal_region_blocks(nb); ++i)
      info.regions.journal_blocks.push_back(good[next++]);
  }

  ChunkRecord rec;
  rec.object_id = kAnchorOid;
  rec.parent_id = 0;
  rec.kind = RecordKind::Anchor;
  rec.codec = Codec::None;
  rec.file_offset = 0;
  rec.payload = info.encode();
  rec.length_raw = static_cast<uint16_t>(rec.payload.size());
  rec.length_stored = rec.length_raw;
  rec.seq = 1;
  auto image = rec.encode();
  OobMirror mirror{rec.kind, rec.seq, rec.object_id};
  auto oob = mirror.encode();
  dev.program_page(info.regions.anchor_block, 0, image, oob);

  if (variant == Variant::Checkpoint) bootstrap_table(dev, info);
  if (variant == Variant::Tree) bootstrap_tree(dev, info);
  // LogTable needs no bootstrap records: an empty log is an empty filesystem.
}

std::pair<std::unique_ptr<FileSystem>, MountStats> mount(FlashDevice& dev, Variant variant) {
  const TraceCounters before = dev.counters();

  auto good = good_blocks(dev);
  if (good.empty()) throw Error(ErrorCode::DeviceTooSmall, "no usable blocks");
  auto img = dev.read_page(good.front(), 0);
  if (all_ff(img.data)) throw Error(ErrorCode::NotFormatted, "blank anchor block");
  auto rec = ChunkRecord::decode(img.data);
  if (!rec || rec->kind != RecordKind::Anchor || rec->object_id != kAnchorOid)
    throw Error(ErrorCode::CorruptAnchor, "anchor record unreadable");
  auto info = AnchorInfo::decode(rec->payload);
  if (!info) throw Error(ErrorCode::CorruptAnchor, "anchor payload unreadable");
  if (info->regions.anchor_block != good.front()) {
    // The original anchor block wore out; treat the survivor as corrupt
    // rather than trusting a layout that no longer matches the device.
    throw Error(ErrorCode::CorruptAnchor, "anchor block moved");
  }
  if (info->variant != variant)
    throw Error(ErrorCode::VariantMismatch,
                std::string("formatted as ") + variant_name(info->variant));

  MountStats stats;
  std::unique_ptr<FileSystem> fs;
  if (variant == Variant::Tree)
    fs = make_tree_fs(dev, *info, stats);
  else
    fs = make_table_fs(dev, *info, stats);

  const TraceCounters after = dev.counters();
  stats.pages_read = after.page_reads - before.page_reads;
  stats.simulated_time_us = after.simulated_time_us - before.simulated_time_us;
  return {std::move(fs), stats};
}

}  // namespace ffsim
