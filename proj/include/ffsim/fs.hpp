#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffsim/codec.hpp"
#include "ffsim/device.hpp"

namespace ffsim {

enum class Variant : uint8_t { LogTable = 1, Checkpoint = 2, Tree = 3 };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

// Persisted in the anchor record at format time; mount restores them so a
// filesystem always runs with the options it was created with.
struct FormatOptions {
  // Codec used when the variant compresses. LogTable and Tree compress
  // (Rle unless overridden), Checkpoint always stores raw.
  Codec codec = Codec::Rle;
  uint32_t gc_watermark = 4;
  uint32_t wl_threshold = 16;
  bool wl_enabled = true;
  // Tree variant knobs.
  uint32_t fanout = 16;
  uint32_t cache_capacity = 64;
  uint32_t journal_cap_records = 64;
};

struct MountStats {
  uint64_t pages_read = 0;
  uint64_t simulated_time_us = 0;
  bool full_scan = false;
};

enum class NodeKind : uint8_t { File = 1, Dir = 2 };

struct DirEntry {
  std::string name;
  NodeKind kind;
  uint64_t size;
};

struct FsStat {
  NodeKind kind;
  uint64_t size;
  uint32_t object_id;
};

struct GcStats {
  uint32_t migrated_pages = 0;
  std::optional<uint32_t> erased_block;
};

// Variant-independent filesystem interface. A handle is confined to one
// owner; unmount() invalidates it and later calls throw StaleHandle.
class FileSystem {
 public:
  virtual ~FileSystem() = default;

  virtual void mkdir(const std::string& path) = 0;
  virtual void create_file(const std::string& path) = 0;
  // offset must be <= current size (no holes).
  virtual void write_file(const std::string& path, uint64_t offset,
                          std::span<const uint8_t> data) = 0;
  // Reads exactly [offset, offset+length); any byte past EOF is RangeBeyondEof.
  virtual std::vector<uint8_t> read_file(const std::string& path, uint64_t offset,
                                         uint64_t length) = 0;
  virtual void remove(const std::string& path) = 0;
  virtual std::vector<DirEntry> readdir(const std::string& path) = 0;
  virtual FsStat stat(const std::string& path) = 0;

  // Migrates the live pages of the best victim block and erases it. No-op
  // when no block holds an invalid page.
  virtual GcStats gc_step() = 0;
  // Forces one wear-leveling pass regardless of the spread threshold.
  virtual void wl_rebalance() = 0;

  // RAM-model size: in-memory index entries for the table variants, cached
  // tree nodes for the tree variant.
  virtual uint64_t ram_units() const = 0;
  // Drops cached tree nodes; no-op for the table variants.
  virtual void flush_node_cache() {}

  // clean=true lets the variant write its checkpoint/commit records first;
  // clean=false drops the handle without touching the device.
  virtual void unmount(bool clean) = 0;

  virtual Variant variant() const = 0;
  virtual const FormatOptions& options() const = 0;
  virtual FlashDevice& device() = 0;

 protected:
  FileSystem() = default;
};

// Erases every good block and writes the anchor (variant tag, options,
// format generation) plus any variant bootstrap records.
void format(FlashDevice& dev, Variant variant, const FormatOptions& opts = {});

std::pair<std::unique_ptr<FileSystem>, MountStats> mount(FlashDevice& dev, Variant variant);

}  // namespace ffsim
