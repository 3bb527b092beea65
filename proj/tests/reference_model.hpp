// In-memory reference filesystem with the exact observable semantics of the
// flash variants, plus a deterministic differential workload driver. Path
// handling is reimplemented here on purpose: sharing the production helpers
// would let a parsing bug cancel itself out.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ffsim/device.hpp"
#include "ffsim/errors.hpp"
#include "ffsim/fs.hpp"

namespace refmodel {

using ffsim::Error;
using ffsim::ErrorCode;

struct RefNode {
  ffsim::NodeKind kind = ffsim::NodeKind::Dir;
  std::vector<uint8_t> data;               // files
  std::map<std::string, RefNode> children; // dirs
};

inline std::vector<std::string> ref_split(const std::string& path) {
  if (path.empty() || path[0] != '/') throw Error(ErrorCode::InvalidPath, path);
  std::vector<std::string> parts;
  size_t i = 1;
  while (i <= path.size()) {
    size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    std::string comp = path.substr(i, j - i);
    if (!comp.empty()) {
      if (comp == "." || comp == ".." || comp.size() > 255 ||
          comp.find('\0') != std::string::npos)
        throw Error(ErrorCode::InvalidPath, path);
      parts.push_back(std::move(comp));
    } else if (j < path.size()) {
      throw Error(ErrorCode::InvalidPath, path);
    }
    i = j + 1;
  }
  return parts;
}

class RefFs {
 public:
  void mkdir(const std::string& path) { create_node(path, ffsim::NodeKind::Dir); }
  void create_file(const std::string& path) { create_node(path, ffsim::NodeKind::File); }

  void write_file(const std::string& path, uint64_t offset, std::span<const uint8_t> data) {
    RefNode& n = resolve(path);
    if (n.kind != ffsim::NodeKind::File) throw Error(ErrorCode::IsADirectory, path);
    if (offset > n.data.size()) throw Error(ErrorCode::RangeBeyondEof, path);
    if (data.empty()) return;
    if (n.data.size() < offset + data.size()) n.data.resize(offset + data.size());
    std::copy(data.begin(), data.end(), n.data.begin() + static_cast<ptrdiff_t>(offset));
  }

  std::vector<uint8_t> read_file(const std::string& path, uint64_t offset, uint64_t length) {
    RefNode& n = resolve(path);
    if (n.kind != ffsim::NodeKind::File) throw Error(ErrorCode::IsADirectory, path);
    if (offset + length > n.data.size()) throw Error(ErrorCode::RangeBeyondEof, path);
    return {n.data.begin() + static_cast<ptrdiff_t>(offset),
            n.data.begin() + static_cast<ptrdiff_t>(offset + length)};
  }

  void remove(const std::string& path) {
    auto parts = ref_split(path);
    if (parts.empty()) throw Error(ErrorCode::InvalidPath, path);
    RefNode& parent = resolve_prefix(parts);
    auto it = parent.children.find(parts.back());
    if (it == parent.children.end()) throw Error(ErrorCode::NotFound, path);
    if (it->second.kind == ffsim::NodeKind::Dir && !it->second.children.empty())
      throw Error(ErrorCode::DirNotEmpty, path);
    parent.children.erase(it);
  }

  std::vector<ffsim::DirEntry> readdir(const std::string& path) {
    RefNode& n = resolve(path);
    if (n.kind != ffsim::NodeKind::Dir) throw Error(ErrorCode::NotADirectory, path);
    std::vector<ffsim::DirEntry> out;
    for (const auto& [name, c] : n.children)
      out.push_back({name, c.kind,
                     c.kind == ffsim::NodeKind::File ? uint64_t(c.data.size()) : 0});
    return out;
  }

  std::pair<ffsim::NodeKind, uint64_t> stat(const std::string& path) {
    RefNode& n = resolve(path);
    return {n.kind, n.kind == ffsim::NodeKind::File ? n.data.size() : 0};
  }

  const RefNode& root() const { return root_; }

 private:
  RefNode& resolve_prefix(const std::vector<std::string>& parts) {
    RefNode* cur = &root_;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
      auto it = cur->children.find(parts[i]);
      if (it == cur->children.end()) throw Error(ErrorCode::NotFound, parts[i]);
      if (it->second.kind != ffsim::NodeKind::Dir)
        throw Error(ErrorCode::NotADirectory, parts[i]);
      cur = &it->second;
    }
    return *cur;
  }

  RefNode& resolve(const std::string& path) {
    auto parts = ref_split(path);
    if (parts.empty()) return root_;
    RefNode& parent = resolve_prefix(parts);
    auto it = parent.children.find(parts.back());
    if (it == parent.children.end()) throw Error(ErrorCode::NotFound, path);
    return it->second;
  }

  void create_node(const std::string& path, ffsim::NodeKind kind) {
    auto parts = ref_split(path);
    if (parts.empty()) throw Error(ErrorCode::AlreadyExists, path);
    RefNode& parent = resolve_prefix(parts);
    if (parent.children.count(parts.back())) throw Error(ErrorCode::AlreadyExists, path);
    RefNode n;
    n.kind = kind;
    parent.children.emplace(parts.back(), std::move(n));
  }

  RefNode root_;
};

// ---- differential driver ---------------------------------------------------

namespace detail {

template <class F>
inline std::optional<ErrorCode> outcome(F&& f) {
  try {
    f();
    return std::nullopt;
  } catch (const Error& e) {
    return e.code();
  }
}

inline std::string show(std::optional<ErrorCode> c) {
  return c ? ffsim::error_code_name(*c) : "ok";
}

inline std::optional<std::string> compare_dir(ffsim::FileSystem& fs, const RefNode& node,
                                              const std::string& path) {
  std::vector<ffsim::DirEntry> got = fs.readdir(path.empty() ? "/" : path);
  if (got.size() != node.children.size()) {
    std::ostringstream os;
    os << "readdir(" << (path.empty() ? "/" : path) << "): " << got.size() << " entries, expected "
       << node.children.size();
    return os.str();
  }
  size_t i = 0;
  for (const auto& [name, child] : node.children) {
    const auto& e = got[i++];
    std::string full = path + "/" + name;
    if (e.name != name || e.kind != child.kind)
      return "entry mismatch at " + full + " (got " + e.name + ")";
    uint64_t want_size = child.kind == ffsim::NodeKind::File ? child.data.size() : 0;
    if (e.size != want_size) {
      std::ostringstream os;
      os << "size mismatch at " << full << ": " << e.size << " != " << want_size;
      return os.str();
    }
    auto st = fs.stat(full);
    if (st.kind != child.kind || st.size != want_size) return "stat mismatch at " + full;
    if (child.kind == ffsim::NodeKind::File) {
      if (fs.read_file(full, 0, child.data.size()) != child.data)
        return "content mismatch at " + full;
    } else {
      if (auto m = compare_dir(fs, child, full)) return m;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Runs `nops` weighted random operations against one flash variant and the
// reference model in lockstep, comparing every outcome, with periodic
// remounts (alternating clean and unclean). Generated paths stay within
// `max_depth` components. Returns a description of the first divergence, or
// nullopt when the run agrees end to end.
inline std::optional<std::string> differential_run(ffsim::Variant v,
                                                   const ffsim::FormatOptions& opts,
                                                   uint64_t seed, int nops,
                                                   uint32_t num_blocks = 96, size_t max_depth = 4,
                                                   int remount_period = 100) {
  using namespace ffsim;
  FlashGeometry g;
  g.num_blocks = num_blocks;
  g.pages_per_block = 16;
  g.page_size = 512;
  g.oob_size = 16;
  FlashDevice dev(g, seed);
  format(dev, v, opts);
  auto [fs, ms] = mount(dev, v);
  (void)ms;
  RefFs ref;
  std::mt19937_64 rng(seed ^ 0x9E3779B97F4A7C15ull);

  const std::vector<std::string> names = {"a", "b", "c", "dir", "f0", "f1",
                                          "f2", "log", "tmp", "zz"};
  const std::vector<std::string> malformed = {
      "",
      "rel/ative",
      "/a//b",
      "/.",
      "/..",
      "/a/./b",
      "//",
      "/" + std::string(256, 'q'),
      std::string("/nu\0l", 5),
  };
  std::vector<std::string> pool = {"/"};

  auto depth_of = [](const std::string& p) {
    size_t d = 0;
    for (size_t i = 0; i < p.size(); ++i)
      if (p[i] == '/' && i + 1 < p.size() && p[i + 1] != '/') ++d;
    return d;
  };

  auto gen_path = [&]() -> std::string {
    uint64_t roll = rng() % 100;
    std::string p;
    if (roll < 50) {
      p = pool[rng() % pool.size()];
    } else if (roll < 75) {
      const std::string& base = pool[rng() % pool.size()];
      if (depth_of(base) >= max_depth) {
        p = base;
      } else {
        p = (base == "/" ? "" : base) + "/" + names[rng() % names.size()];
      }
    } else if (roll < 92) {
      size_t depth = 1 + rng() % std::min<size_t>(3, max_depth);
      for (size_t i = 0; i < depth; ++i) p += "/" + names[rng() % names.size()];
    } else {
      return malformed[rng() % malformed.size()];
    }
    if (rng() % 20 == 0) p += "/";
    return p;
  };

  auto content = [&](size_t len) {
    std::vector<uint8_t> out(len);
    switch (rng() % 3) {
      case 0:
        break;  // zeros
      case 1:
        for (auto& b : out) b = static_cast<uint8_t>(rng());
        break;
      default: {
        const char* t = "the quick brown fox ";
        for (size_t i = 0; i < len; ++i) out[i] = static_cast<uint8_t>(t[i % 20]);
      }
    }
    return out;
  };

  auto fail = [&](int op, const char* what, const std::string& path, const std::string& why) {
    std::ostringstream os;
    os << variant_name(v) << " seed " << seed << " op " << op << " " << what << "(" << path
       << "): " << why;
    return os.str();
  };

  auto ref_size = [&](const std::string& path) -> uint64_t {
    try {
      auto [kind, size] = ref.stat(path);
      return kind == NodeKind::File ? size : 0;
    } catch (const Error&) {
      return 0;
    }
  };

  for (int op = 0; op < nops; ++op) {
    uint64_t roll = rng() % 100;
    std::string path = gen_path();
    if (roll < 14) {
      auto a = detail::outcome([&] { fs->mkdir(path); });
      auto b = detail::outcome([&] { ref.mkdir(path); });
      if (a != b)
        return fail(op, "mkdir", path, detail::show(a) + " != " + detail::show(b));
      if (!b) pool.push_back(path);
    } else if (roll < 34) {
      auto a = detail::outcome([&] { fs->create_file(path); });
      auto b = detail::outcome([&] { ref.create_file(path); });
      if (a != b)
        return fail(op, "create_file", path, detail::show(a) + " != " + detail::show(b));
      if (!b) pool.push_back(path);
    } else if (roll < 58) {
      uint64_t size = ref_size(path);
      uint64_t offset = rng() % (size + 4);
      auto data = content(rng() % 900);
      auto a = detail::outcome([&] { fs->write_file(path, offset, data); });
      auto b = detail::outcome([&] { ref.write_file(path, offset, data); });
      if (a != b)
        return fail(op, "write_file", path, detail::show(a) + " != " + detail::show(b));
    } else if (roll < 72) {
      uint64_t size = ref_size(path);
      uint64_t offset = rng() % (size + 3);
      uint64_t length = rng() % (size / 2 + 40);
      std::vector<uint8_t> got, want;
      auto a = detail::outcome([&] { got = fs->read_file(path, offset, length); });
      auto b = detail::outcome([&] { want = ref.read_file(path, offset, length); });
      if (a != b)
        return fail(op, "read_file", path, detail::show(a) + " != " + detail::show(b));
      if (!a && got != want) return fail(op, "read_file", path, "content differs");
    } else if (roll < 84) {
      auto a = detail::outcome([&] { fs->remove(path); });
      auto b = detail::outcome([&] { ref.remove(path); });
      if (a != b)
        return fail(op, "remove", path, detail::show(a) + " != " + detail::show(b));
    } else if (roll < 90) {
      std::vector<DirEntry> got, want;
      auto a = detail::outcome([&] { got = fs->readdir(path); });
      auto b = detail::outcome([&] { want = ref.readdir(path); });
      if (a != b)
        return fail(op, "readdir", path, detail::show(a) + " != " + detail::show(b));
      if (!a) {
        if (got.size() != want.size()) return fail(op, "readdir", path, "entry count differs");
        for (size_t i = 0; i < got.size(); ++i)
          if (got[i].name != want[i].name || got[i].kind != want[i].kind ||
              got[i].size != want[i].size)
            return fail(op, "readdir", path, "entry " + std::to_string(i) + " differs");
      }
    } else if (roll < 96) {
      FsStat st{};
      std::pair<NodeKind, uint64_t> want{};
      auto a = detail::outcome([&] { st = fs->stat(path); });
      auto b = detail::outcome([&] { want = ref.stat(path); });
      if (a != b)
        return fail(op, "stat", path, detail::show(a) + " != " + detail::show(b));
      if (!a && (st.kind != want.first || st.size != want.second))
        return fail(op, "stat", path, "kind or size differs");
    } else if (roll < 98) {
      auto a = detail::outcome([&] { fs->gc_step(); });
      if (a) return fail(op, "gc_step", "-", detail::show(a));
    } else {
      auto a = detail::outcome([&] { fs->wl_rebalance(); });
      if (a) return fail(op, "wl_rebalance", "-", detail::show(a));
    }

    if (remount_period > 0 && (op + 1) % remount_period == 0) {
      bool clean = (rng() & 1) != 0;
      fs->unmount(clean);
      auto [fs2, ms2] = mount(dev, v);
      (void)ms2;
      fs = std::move(fs2);
      if (auto m = detail::compare_dir(*fs, ref.root(), ""))
        return fail(op, clean ? "remount-clean" : "remount-unclean", "/", *m);
    }
  }

  if (auto m = detail::compare_dir(*fs, ref.root(), ""))
    return fail(nops, "final-state", "/", *m);
  fs->unmount(true);
  auto [fs3, ms3] = mount(dev, v);
  (void)ms3;
  if (auto m = detail::compare_dir(*fs3, ref.root(), ""))
    return fail(nops, "final-remount", "/", *m);
  fs3->unmount(true);
  return std::nullopt;
}

}  // namespace refmodel
