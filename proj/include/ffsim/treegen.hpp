#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ffsim/fs.hpp"

namespace ffsim {

// Closed distribution family so specs serialize cleanly and every sample is
// reproducible from the spec seed.
struct Distribution {
  enum class Kind : uint8_t { Constant, UniformInt, Geometric };

  Kind kind = Kind::Constant;
  uint64_t k = 0;        // Constant
  uint64_t a = 0, b = 0; // UniformInt, inclusive
  double p = 0.5;        // Geometric success probability
  uint64_t cap = 0;      // Geometric support is {0..cap}

  static Distribution constant(uint64_t k);
  static Distribution uniform_int(uint64_t a, uint64_t b);
  // P(k) proportional to (1-p)^k on {0..cap}; sampled by rejection so the
  // truncation stays exactly proportional.
  static Distribution geometric(double p, uint64_t cap);

  uint64_t sample(std::mt19937_64& rng) const;
  double mean() const;
  std::string describe() const;
  static std::optional<Distribution> parse(const std::string& text);
};

enum class ContentProfile : uint8_t { Zeros = 0, Random = 1, TextLike = 2 };

const char* content_profile_name(ContentProfile p);
std::optional<ContentProfile> content_profile_from_name(const std::string& name);

struct TreeSpec {
  Distribution files_per_dir = Distribution::constant(1);
  Distribution dirs_per_dir = Distribution::constant(0);
  Distribution file_size = Distribution::constant(0);
  uint32_t depth = 1;
  ContentProfile content = ContentProfile::Zeros;
  uint32_t text_period = 64;
  uint64_t seed = 0;
};

struct ManifestRow {
  std::string path;
  NodeKind kind;
  uint64_t size;
};

// Rows in creation order, root first, every parent before its children.
struct TreeManifest {
  std::vector<ManifestRow> rows;

  uint64_t dir_count() const;
  uint64_t file_count() const;
  uint64_t total_bytes() const;

  std::string to_csv() const;
  static TreeManifest from_csv(const std::string& text);
};

// Refuses (TooLarge) when the analytically expected node count exceeds 10^6.
TreeManifest generate(const TreeSpec& spec);

// Deterministic file contents for a manifest row: profile plus (seed, row
// index) fix every byte.
std::vector<uint8_t> make_content(const TreeSpec& spec, uint64_t row_index, uint64_t size);

struct ApplyStats {
  uint64_t ops = 0;
  uint64_t pages_written = 0;
  uint64_t simulated_time_us = 0;
};

ApplyStats apply(FileSystem& fs, const TreeManifest& manifest, const TreeSpec& spec);

// Removes everything apply() created, children before parents.
ApplyStats delete_tree(FileSystem& fs, const TreeManifest& manifest);

struct WalkStats {
  uint64_t hits = 0;
  uint64_t pages_read = 0;
  uint64_t simulated_time_us = 0;
};

// Full readdir+stat traversal, counting entries whose name matches the
// pattern ('*' wildcards, e.g. "f*"). Touches no file payload.
WalkStats find_walk(FileSystem& fs, const TreeManifest& manifest, const std::string& pattern);

bool glob_match(const std::string& pattern, const std::string& name);

}  // namespace ffsim
