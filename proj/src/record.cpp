#include "ffsim/record.hpp"

#include "ffsim/crc32.hpp"
#include "ffsim/errors.hpp"

namespace ffsim {
namespace {

void put_u16(std::vector<uint8_t>& v, uint16_t x) {
  v.push_back(uint8_t(x & 0xFF));
  v.push_back(uint8_t(x >> 8));
}

void put_u32(std::vector<uint8_t>& v, uint32_t x) {
  for (int i = 0; i < 4; ++i) v.push_back(uint8_t((x >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<uint8_t>& v, uint64_t x) {
  for (int i = 0; i < 8; ++i) v.push_back(uint8_t((x >> (8 * i)) & 0xFF));
}

uint16_t get_u16(const uint8_t* p) { return uint16_t(p[0] | (uint16_t(p[1]) << 8)); }

uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(p[i]) << (8 * i);
  return v;
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= uint64_t(p[i]) << (8 * i);
  return v;
}

bool valid_kind(uint8_t k) { return k >= 1 && k <= 8; }
bool valid_codec(uint8_t c) { return c <= 2; }

}  // namespace

std::vector<uint8_t> ChunkRecord::encode() const {
  std::vector<uint8_t> out;
  out.reserve(kHeaderSize + payload.size());
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  put_u32(out, object_id);
  put_u32(out, parent_id);
  out.push_back(static_cast<uint8_t>(kind));
  out.push_back(static_cast<uint8_t>(codec));
  put_u32(out, file_offset);
  put_u16(out, length_raw);
  put_u16(out, length_stored);
  put_u64(out, seq);
  put_u32(out, 0);  // checksum placeholder
  out.insert(out.end(), payload.begin(), payload.end());

  uint32_t sum = crc32(out.data(), out.size());
  out[28] = uint8_t(sum & 0xFF);
  out[29] = uint8_t((sum >> 8) & 0xFF);
  out[30] = uint8_t((sum >> 16) & 0xFF);
  out[31] = uint8_t((sum >> 24) & 0xFF);
  return out;
}

std::optional<ChunkRecord> ChunkRecord::decode(std::span<const uint8_t> page) {
  if (page.size() < kHeaderSize) return std::nullopt;
  if (page[0] != kMagic0 || page[1] != kMagic1) return std::nullopt;
  if (!valid_kind(page[10]) || !valid_codec(page[11])) return std::nullopt;

  ChunkRecord r;
  r.object_id = get_u32(&page[2]);
  r.parent_id = get_u32(&page[6]);
  r.kind = static_cast<RecordKind>(page[10]);
  r.codec = static_cast<Codec>(page[11]);
  r.file_offset = get_u32(&page[12]);
  r.length_raw = get_u16(&page[16]);
  r.length_stored = get_u16(&page[18]);
  r.seq = get_u64(&page[20]);
  uint32_t stored_sum = get_u32(&page[28]);

  if (kHeaderSize + size_t(r.length_stored) > page.size()) return std::nullopt;

  std::vector<uint8_t> image(page.begin(), page.begin() + kHeaderSize + r.length_stored);
  image[28] = image[29] = image[30] = image[31] = 0;
  if (crc32(image.data(), image.size()) != stored_sum) return std::nullopt;

  r.payload.assign(page.begin() + kHeaderSize, page.begin() + kHeaderSize + r.length_stored);
  return r;
}

std::vector<uint8_t> OobMirror::encode() const {
  std::vector<uint8_t> out;
  out.reserve(kSize);
  out.push_back(0xFF);  // bad-block marker slot stays "good"
  out.push_back(static_cast<uint8_t>(kind));
  put_u64(out, seq);
  put_u32(out, object_id);
  return out;
}

std::optional<OobMirror> OobMirror::decode(std::span<const uint8_t> oob) {
  if (oob.size() < kSize) return std::nullopt;
  if (!valid_kind(oob[1])) return std::nullopt;
  OobMirror m;
  m.kind = static_cast<RecordKind>(oob[1]);
  m.seq = get_u64(&oob[2]);
  m.object_id = get_u32(&oob[10]);
  return m;
}

size_t record_payload_capacity(uint32_t page_size) {
  if (page_size <= ChunkRecord::kHeaderSize)
    throw Error(ErrorCode::InvalidGeometry, "page too small for a record header");
  return page_size - ChunkRecord::kHeaderSize;
}

}  // namespace ffsim
