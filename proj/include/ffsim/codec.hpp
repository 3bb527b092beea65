#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ffsim {

enum class Codec : uint8_t { None = 0, Rle = 1, XorDelta = 2 };

const char* codec_name(Codec c);

// Compresses with the requested codec but never expands: if the encoded form
// is not strictly smaller than the input, returns (None, input copy).
std::pair<Codec, std::vector<uint8_t>> compress(Codec requested, std::span<const uint8_t> data);

// Inverse of compress for a stored record. raw_len is the expected decoded
// size; malformed input or a length mismatch throws Error(ChecksumMismatch)
// since it can only follow an undetected corruption or a logic bug.
std::vector<uint8_t> decompress(Codec used, std::span<const uint8_t> stored, size_t raw_len);

}  // namespace ffsim
