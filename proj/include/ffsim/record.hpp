#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ffsim/codec.hpp"

namespace ffsim {

enum class RecordKind : uint8_t {
  FileData = 1,
  FileMeta = 2,
  DirMeta = 3,
  Deletion = 4,
  Checkpoint = 5,
  IndexNode = 6,
  // Wire-level extras: the format anchor and tree journal batches.
  Anchor = 7,
  Journal = 8,
};

// On-flash record header, one record per flash page. Fixed little-endian
// layout (32 bytes):
//   0  magic      0xF5 0x0F
//   2  object_id  u32
//   6  parent_id  u32
//   10 kind       u8
//   11 codec      u8
//   12 file_offset u32
//   16 length_raw  u16
//   18 length_stored u16
//   20 seq        u64
//   28 checksum   u32  (CRC-32 of header with this field zeroed + payload)
//   32 payload    length_stored bytes
struct ChunkRecord {
  uint32_t object_id = 0;
  uint32_t parent_id = 0;
  RecordKind kind = RecordKind::FileData;
  Codec codec = Codec::None;
  uint32_t file_offset = 0;
  uint16_t length_raw = 0;
  uint16_t length_stored = 0;
  uint64_t seq = 0;
  std::vector<uint8_t> payload;

  static constexpr size_t kHeaderSize = 32;
  static constexpr uint8_t kMagic0 = 0xF5;
  static constexpr uint8_t kMagic1 = 0x0F;

  // Serialized page image (header + payload), length kHeaderSize + payload.
  std::vector<uint8_t> encode() const;

  // Parses and checksums a page image. Returns nullopt when the page holds
  // no plausible record (bad magic) or fails its checksum.
  static std::optional<ChunkRecord> decode(std::span<const uint8_t> page);
};

// OOB mirror written next to every record: byte 0 is the bad-block marker
// (0xFF good, 0x00 bad), then kind u8, seq u64, object_id u32 at offset 1.
struct OobMirror {
  RecordKind kind = RecordKind::FileData;
  uint64_t seq = 0;
  uint32_t object_id = 0;

  static constexpr size_t kSize = 14;

  std::vector<uint8_t> encode() const;
  static std::optional<OobMirror> decode(std::span<const uint8_t> oob);
};

size_t record_payload_capacity(uint32_t page_size);

}  // namespace ffsim
