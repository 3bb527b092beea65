#include "ffsim/codec.hpp"

#include "ffsim/errors.hpp"

namespace ffsim {
namespace {

// Pairs of (run length 1..255, byte). Encoding stops early once the output
// reaches the input size: compress() discards any result that large, so
// finishing the scan would be pure waste on incompressible data.
std::vector<uint8_t> rle_encode(std::span<const uint8_t> data) {
  std::vector<uint8_t> out;
  out.reserve(data.size() / 4 + 8);
  size_t i = 0;
  while (i < data.size()) {
    if (out.size() >= data.size()) return out;
    uint8_t value = data[i];
    size_t run = 1;
    while (run < 255 && i + run < data.size() && data[i + run] == value) ++run;
    out.push_back(static_cast<uint8_t>(run));
    out.push_back(value);
    i += run;
  }
  return out;
}

std::vector<uint8_t> rle_decode(std::span<const uint8_t> stored, size_t raw_len) {
  if (stored.size() % 2 != 0) throw Error(ErrorCode::ChecksumMismatch, "odd RLE stream");
  std::vector<uint8_t> out;
  out.reserve(raw_len);
  for (size_t i = 0; i < stored.size(); i += 2) {
    uint8_t run = stored[i];
    if (run == 0) throw Error(ErrorCode::ChecksumMismatch, "zero-length RLE run");
    out.insert(out.end(), run, stored[i + 1]);
  }
  if (out.size() != raw_len) throw Error(ErrorCode::ChecksumMismatch, "RLE length mismatch");
  return out;
}

std::vector<uint8_t> xor_delta(std::span<const uint8_t> data) {
  std::vector<uint8_t> out(data.size());
  uint8_t prev = 0;
  for (size_t i = 0; i < data.size(); ++i) {
    out[i] = data[i] ^ prev;
    prev = data[i];
  }
  return out;
}

std::vector<uint8_t> xor_undelta(std::span<const uint8_t> deltas) {
  std::vector<uint8_t> out(deltas.size());
  uint8_t prev = 0;
  for (size_t i = 0; i < deltas.size(); ++i) {
    out[i] = deltas[i] ^ prev;
    prev = out[i];
  }
  return out;
}

}  // namespace

const char* codec_name(Codec c) {
  switch (c) {
    case Codec::None: return "NONE";
    case Codec::Rle: return "RLE";
    case Codec::XorDelta: return "XOR_DELTA";
  }
  return "?";
}

std::pair<Codec, std::vector<uint8_t>> compress(Codec requested, std::span<const uint8_t> data) {
  std::vector<uint8_t> encoded;
  switch (requested) {
    case Codec::None:
      return {Codec::None, std::vector<uint8_t>(data.begin(), data.end())};
    case Codec::Rle:
      encoded = rle_encode(data);
      break;
    case Codec::XorDelta:
      encoded = rle_encode(xor_delta(data));
      break;
  }
  if (encoded.size() >= data.size())
    return {Codec::None, std::vector<uint8_t>(data.begin(), data.end())};
  return {requested, std::move(encoded)};
}

std::vector<uint8_t> decompress(Codec used, std::span<const uint8_t> stored, size_t raw_len) {
  switch (used) {
    case Codec::None: {
      if (stored.size() != raw_len)
        throw Error(ErrorCode::ChecksumMismatch, "raw length mismatch");
      return std::vector<uint8_t>(stored.begin(), stored.end());
    }
    case Codec::Rle:
      return rle_decode(stored, raw_len);
    case Codec::XorDelta:
      return xor_undelta(rle_decode(stored, raw_len));
  }
  throw Error(ErrorCode::ChecksumMismatch, "unknown codec");
}

}  // namespace ffsim
