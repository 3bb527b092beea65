#include "ffsim/treegen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "ffsim/errors.hpp"

namespace ffsim {
namespace {

// Bounded uniform draw by rejection so the stream depends only on the engine,
// not on a library's distribution internals.
uint64_t uniform_u64(std::mt19937_64& rng, uint64_t lo, uint64_t hi) {
  uint64_t range = hi - lo;  // inclusive bounds
  if (range == UINT64_MAX) return rng();
  ++range;
  uint64_t zone = (UINT64_MAX / range) * range;
  for (;;) {
    uint64_t u = rng();
    if (u < zone) return lo + u % range;
  }
}

double unit_double(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

Distribution Distribution::constant(uint64_t k) {
  Distribution d;
  d.kind = Kind::Constant;
  d.k = k;
  return d;
}

Distribution Distribution::uniform_int(uint64_t a, uint64_t b) {
  if (a > b) throw Error(ErrorCode::BadConfig, "uniform bounds reversed");
  Distribution d;
  d.kind = Kind::UniformInt;
  d.a = a;
  d.b = b;
  return d;
}

Distribution Distribution::geometric(double p, uint64_t cap) {
  if (!(p > 0.0) || p > 1.0) throw Error(ErrorCode::BadConfig, "geometric p outside (0,1]");
  Distribution d;
  d.kind = Kind::Geometric;
  d.p = p;
  d.cap = cap;
  return d;
}

uint64_t Distribution::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::Constant:
      return k;
    case Kind::UniformInt:
      return uniform_u64(rng, a, b);
    case Kind::Geometric: {
      if (p >= 1.0) return 0;
      const double lq = std::log1p(-p);
      for (;;) {
        double u = unit_double(rng);
        double draw = std::floor(std::log1p(-u) / lq);
        if (draw <= static_cast<double>(cap)) return static_cast<uint64_t>(draw);
      }
    }
  }
  return 0;
}

double Distribution::mean() const {
  switch (kind) {
    case Kind::Constant:
      return static_cast<double>(k);
    case Kind::UniformInt:
      return (static_cast<double>(a) + static_cast<double>(b)) / 2.0;
    case Kind::Geometric: {
      if (p >= 1.0) return 0.0;
      const double q = 1.0 - p;
      const double qn = std::pow(q, static_cast<double>(cap) + 1.0);
      // Mean of the distribution truncated to {0..cap}.
      return q / p - (static_cast<double>(cap) + 1.0) * qn / (1.0 - qn);
    }
  }
  return 0.0;
}

std::string Distribution::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant:
      os << "constant(" << k << ")";
      break;
    case Kind::UniformInt:
      os << "uniform(" << a << "," << b << ")";
      break;
    case Kind::Geometric:
      os << "geometric(" << p << "," << cap << ")";
      break;
  }
  return os.str();
}

std::optional<Distribution> Distribution::parse(const std::string& text) {
  auto open = text.find('(');
  if (open == std::string::npos || text.back() != ')') return std::nullopt;
  std::string name = text.substr(0, open);
  std::string args = text.substr(open + 1, text.size() - open - 2);
  std::vector<std::string> parts;
  std::string cur;
  for (char c : args) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  try {
    if (name == "constant" && parts.size() == 1) return constant(std::stoull(parts[0]));
    if (name == "uniform" && parts.size() == 2)
      return uniform_int(std::stoull(parts[0]), std::stoull(parts[1]));
    if (name == "geometric" && parts.size() == 2)
      return geometric(std::stod(parts[0]), std::stoull(parts[1]));
  } catch (...) {
    return std::nullopt;
  }
  return std::nullopt;
}

const char* content_profile_name(ContentProfile p) {
  switch (p) {
    case ContentProfile::Zeros:
      return "zeros";
    case ContentProfile::Random:
      return "random";
    case ContentProfile::TextLike:
      return "textlike";
  }
  return "unknown";
}

std::optional<ContentProfile> content_profile_from_name(const std::string& name) {
  if (name == "zeros") return ContentProfile::Zeros;
  if (name == "random") return ContentProfile::Random;
  if (name == "textlike") return ContentProfile::TextLike;
  return std::nullopt;
}

uint64_t TreeManifest::dir_count() const {
  uint64_t n = 0;
  for (const auto& r : rows)
    if (r.kind == NodeKind::Dir) ++n;
  return n;
}

uint64_t TreeManifest::file_count() const {
  uint64_t n = 0;
  for (const auto& r : rows)
    if (r.kind == NodeKind::File) ++n;
  return n;
}

uint64_t TreeManifest::total_bytes() const {
  uint64_t n = 0;
  for (const auto& r : rows)
    if (r.kind == NodeKind::File) n += r.size;
  return n;
}

std::string TreeManifest::to_csv() const {
  std::ostringstream os;
  os << "path,kind,size\n";
  for (const auto& r : rows)
    os << r.path << ',' << (r.kind == NodeKind::Dir ? "dir" : "file") << ',' << r.size << '\n';
  return os.str();
}

TreeManifest TreeManifest::from_csv(const std::string& text) {
  TreeManifest m;
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "path,kind,size")
    throw Error(ErrorCode::BadConfig, "manifest csv missing header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto c1 = line.find(',');
    auto c2 = line.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
      throw Error(ErrorCode::BadConfig, "bad manifest row: " + line);
    ManifestRow row;
    row.path = line.substr(0, c1);
    std::string kind = line.substr(c1 + 1, c2 - c1 - 1);
    if (kind == "dir")
      row.kind = NodeKind::Dir;
    else if (kind == "file")
      row.kind = NodeKind::File;
    else
      throw Error(ErrorCode::BadConfig, "bad manifest kind: " + kind);
    try {
      row.size = std::stoull(line.substr(c2 + 1));
    } catch (...) {
      throw Error(ErrorCode::BadConfig, "bad manifest size: " + line);
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

namespace {

struct GenState {
  const TreeSpec& spec;
  std::mt19937_64 rng;
  TreeManifest out;
  uint64_t counter = 0;
};

void expand_dir(GenState& g, const std::string& dir_path, uint32_t depth) {
  const std::string prefix = dir_path == "/" ? "/" : dir_path + "/";
  uint64_t files = g.spec.files_per_dir.sample(g.rng);
  for (uint64_t i = 0; i < files; ++i) {
    uint64_t size = g.spec.file_size.sample(g.rng);
    g.out.rows.push_back(
        {prefix + "f" + std::to_string(g.counter++), NodeKind::File, size});
  }
  if (depth >= g.spec.depth) return;
  uint64_t dirs = g.spec.dirs_per_dir.sample(g.rng);
  std::vector<std::string> subdirs;
  subdirs.reserve(dirs);
  for (uint64_t i = 0; i < dirs; ++i) {
    std::string path = prefix + "d" + std::to_string(g.counter++);
    g.out.rows.push_back({path, NodeKind::Dir, 0});
    subdirs.push_back(std::move(path));
  }
  for (const auto& s : subdirs) expand_dir(g, s, depth + 1);
}

}  // namespace

TreeManifest generate(const TreeSpec& spec) {
  // Expansion guard: expected directory count is the geometric series over
  // the mean branching factor; refuse anything expected to exceed 10^6 nodes.
  const double md = spec.dirs_per_dir.mean();
  double dirs = 1.0;
  double level = 1.0;
  for (uint32_t d = 0; d < spec.depth; ++d) {
    level *= md;
    dirs += level;
    if (dirs > 1e15) break;
  }
  const double nodes = dirs * (1.0 + spec.files_per_dir.mean());
  if (!(nodes <= 1e6))
    throw Error(ErrorCode::TooLarge,
                "expected node count " + std::to_string(nodes) + " exceeds 1000000");

  GenState g{spec, std::mt19937_64(spec.seed), {}, 0};
  g.out.rows.push_back({"/", NodeKind::Dir, 0});
  expand_dir(g, "/", 0);
  return g.out;
}

std::vector<uint8_t> make_content(const TreeSpec& spec, uint64_t row_index, uint64_t size) {
  std::vector<uint8_t> out(static_cast<size_t>(size));
  if (size == 0 || spec.content == ContentProfile::Zeros) return out;
  std::mt19937_64 rng(splitmix64(spec.seed ^ splitmix64(row_index)));
  if (spec.content == ContentProfile::Random) {
    size_t i = 0;
    while (i < out.size()) {
      uint64_t v = rng();
      for (int b = 0; b < 8 && i < out.size(); ++b) {
        out[i++] = static_cast<uint8_t>(v);
        v >>= 8;
      }
    }
    return out;
  }
  // TextLike: short runs of letters and spaces, tiled with the spec period so
  // the run-length codec lands between the zeros and random extremes.
  const uint32_t period = std::max<uint32_t>(1, spec.text_period);
  std::vector<uint8_t> pat(period);
  size_t pos = 0;
  while (pos < pat.size()) {
    uint64_t v = rng();
    size_t run = 3 + (v & 7);
    uint8_t ch = (v >> 8) % 7 == 0 ? ' ' : static_cast<uint8_t>('a' + (v >> 16) % 26);
    for (size_t i = 0; i < run && pos < pat.size(); ++i) pat[pos++] = ch;
  }
  for (size_t i = 0; i < out.size(); ++i) out[i] = pat[i % period];
  return out;
}

ApplyStats apply(FileSystem& fs, const TreeManifest& manifest, const TreeSpec& spec) {
  const TraceCounters before = fs.device().counters();
  ApplyStats stats;
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    if (row.path == "/") continue;
    if (row.kind == NodeKind::Dir) {
      fs.mkdir(row.path);
      ++stats.ops;
    } else {
      fs.create_file(row.path);
      ++stats.ops;
      if (row.size > 0) {
        auto content = make_content(spec, i, row.size);
        fs.write_file(row.path, 0, content);
        ++stats.ops;
      }
    }
  }
  const TraceCounters after = fs.device().counters();
  stats.pages_written = after.page_writes - before.page_writes;
  stats.simulated_time_us = after.simulated_time_us - before.simulated_time_us;
  return stats;
}

ApplyStats delete_tree(FileSystem& fs, const TreeManifest& manifest) {
  const TraceCounters before = fs.device().counters();
  ApplyStats stats;
  for (auto it = manifest.rows.rbegin(); it != manifest.rows.rend(); ++it) {
    if (it->path == "/") continue;
    fs.remove(it->path);
    ++stats.ops;
  }
  const TraceCounters after = fs.device().counters();
  stats.pages_written = after.page_writes - before.page_writes;
  stats.simulated_time_us = after.simulated_time_us - before.simulated_time_us;
  return stats;
}

bool glob_match(const std::string& pattern, const std::string& name) {
  size_t p = 0, n = 0;
  size_t star = std::string::npos, mark = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

void walk_dir(FileSystem& fs, const std::string& dir, const std::string& pattern,
              uint64_t& hits) {
  auto entries = fs.readdir(dir);
  const std::string prefix = dir == "/" ? "/" : dir + "/";
  for (const auto& e : entries) {
    std::string full = prefix + e.name;
    (void)fs.stat(full);
    if (glob_match(pattern, e.name)) ++hits;
    if (e.kind == NodeKind::Dir) walk_dir(fs, full, pattern, hits);
  }
}

}  // namespace

WalkStats find_walk(FileSystem& fs, const TreeManifest& manifest, const std::string& pattern) {
  (void)manifest;
  const TraceCounters before = fs.device().counters();
  WalkStats stats;
  walk_dir(fs, "/", pattern, stats.hits);
  const TraceCounters after = fs.device().counters();
  stats.pages_read = after.page_reads - before.page_reads;
  stats.simulated_time_us = after.simulated_time_us - before.simulated_time_us;
  return stats;
}

}  // namespace ffsim
