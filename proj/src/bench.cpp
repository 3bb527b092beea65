#include "ffsim/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "ffsim/errors.hpp"
#include "ffsim/record.hpp"
#include "json.hpp"

namespace ffsim {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kToolVersion = "1.0.0";

uint64_t pick_index(std::mt19937_64& rng, uint64_t n) {
  return Distribution::uniform_int(0, n - 1).sample(rng);
}

std::vector<uint8_t> random_bytes(std::mt19937_64& rng, size_t n) {
  std::vector<uint8_t> out(n);
  size_t i = 0;
  while (i < n) {
    uint64_t v = rng();
    for (int b = 0; b < 8 && i < n; ++b) {
      out[i++] = static_cast<uint8_t>(v);
      v >>= 8;
    }
  }
  return out;
}

void check_keys(const ordered_json& j, const std::set<std::string>& allowed, const char* ctx) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw Error(ErrorCode::BadConfig, std::string("unknown key '") + it.key() + "' in " + ctx);
}

ordered_json geometry_to_json(const FlashGeometry& g) {
  ordered_json j;
  j["num_blocks"] = g.num_blocks;
  j["pages_per_block"] = g.pages_per_block;
  j["page_size"] = g.page_size;
  j["oob_size"] = g.oob_size;
  j["endurance_limit"] = g.endurance_limit;
  j["t_read_us"] = g.t_read_us;
  j["t_prog_us"] = g.t_prog_us;
  j["t_erase_us"] = g.t_erase_us;
  j["bit_error_rate"] = g.bit_error_rate;
  return j;
}

FlashGeometry geometry_from_json(const ordered_json& j) {
  check_keys(j,
             {"num_blocks", "pages_per_block", "page_size", "oob_size", "endurance_limit",
              "t_read_us", "t_prog_us", "t_erase_us", "bit_error_rate"},
             "geometry");
  FlashGeometry g;
  g.num_blocks = j.value("num_blocks", g.num_blocks);
  g.pages_per_block = j.value("pages_per_block", g.pages_per_block);
  g.page_size = j.value("page_size", g.page_size);
  g.oob_size = j.value("oob_size", g.oob_size);
  g.endurance_limit = j.value("endurance_limit", g.endurance_limit);
  g.t_read_us = j.value("t_read_us", g.t_read_us);
  g.t_prog_us = j.value("t_prog_us", g.t_prog_us);
  g.t_erase_us = j.value("t_erase_us", g.t_erase_us);
  g.bit_error_rate = j.value("bit_error_rate", g.bit_error_rate);
  return g;
}

Distribution dist_from_text(const std::string& text, const char* field) {
  auto d = Distribution::parse(text);
  if (!d) throw Error(ErrorCode::BadConfig, std::string("bad distribution for ") + field);
  return *d;
}

ordered_json spec_to_json(const TreeSpec& s) {
  ordered_json j;
  j["files_per_dir"] = s.files_per_dir.describe();
  j["dirs_per_dir"] = s.dirs_per_dir.describe();
  j["file_size"] = s.file_size.describe();
  j["depth"] = s.depth;
  j["content"] = content_profile_name(s.content);
  j["text_period"] = s.text_period;
  j["seed"] = s.seed;
  return j;
}

TreeSpec spec_from_json(const ordered_json& j) {
  check_keys(
      j, {"files_per_dir", "dirs_per_dir", "file_size", "depth", "content", "text_period", "seed"},
      "tree_spec");
  TreeSpec s;
  if (j.contains("files_per_dir"))
    s.files_per_dir = dist_from_text(j["files_per_dir"].get<std::string>(), "files_per_dir");
  if (j.contains("dirs_per_dir"))
    s.dirs_per_dir = dist_from_text(j["dirs_per_dir"].get<std::string>(), "dirs_per_dir");
  if (j.contains("file_size"))
    s.file_size = dist_from_text(j["file_size"].get<std::string>(), "file_size");
  s.depth = j.value("depth", s.depth);
  if (j.contains("content")) {
    auto p = content_profile_from_name(j["content"].get<std::string>());
    if (!p) throw Error(ErrorCode::BadConfig, "unknown content profile");
    s.content = *p;
  }
  s.text_period = j.value("text_period", s.text_period);
  s.seed = j.value("seed", s.seed);
  return s;
}

std::optional<ExperimentKind> experiment_kind_from_name(const std::string& name) {
  if (name == "mount-scaling") return ExperimentKind::MountScaling;
  if (name == "wear") return ExperimentKind::Wear;
  if (name == "compression") return ExperimentKind::Compression;
  if (name == "file-tree") return ExperimentKind::FileTree;
  if (name == "crash-sweep") return ExperimentKind::CrashSweep;
  return std::nullopt;
}

ordered_json experiment_to_json_obj(const Experiment& e) {
  ordered_json j;
  j["kind"] = experiment_kind_name(e.kind);
  j["variant"] = variant_name(e.variant);
  j["seed"] = e.seed;
  j["repetitions"] = e.repetitions;
  j["geometry"] = geometry_to_json(e.geometry);
  j["wl_enabled"] = e.wl_enabled;
  j["block_sweep"] = e.block_sweep;
  j["fill_fraction"] = e.fill_fraction;
  j["wear_ops"] = e.wear_ops;
  j["working_set_files"] = e.working_set_files;
  j["compression_size_bytes"] = e.compression_size_bytes;
  ordered_json profiles = ordered_json::array();
  for (auto p : e.compression_profiles) profiles.push_back(content_profile_name(p));
  j["compression_profiles"] = profiles;
  j["tree_spec"] = spec_to_json(e.tree_spec);
  j["crash_workload_ops"] = e.crash_workload_ops;
  return j;
}

Experiment experiment_from_json_obj(const ordered_json& j) {
  check_keys(j,
             {"kind", "variant", "seed", "repetitions", "geometry", "wl_enabled", "block_sweep",
              "fill_fraction", "wear_ops", "working_set_files", "compression_size_bytes",
              "compression_profiles", "tree_spec", "crash_workload_ops"},
             "experiment");
  Experiment e;
  if (j.contains("kind")) {
    auto k = experiment_kind_from_name(j["kind"].get<std::string>());
    if (!k) throw Error(ErrorCode::BadConfig, "unknown experiment kind");
    e.kind = *k;
  }
  if (j.contains("variant")) {
    auto v = variant_from_name(j["variant"].get<std::string>());
    if (!v) throw Error(ErrorCode::BadConfig, "unknown variant");
    e.variant = *v;
  }
  e.seed = j.value("seed", e.seed);
  e.repetitions = j.value("repetitions", e.repetitions);
  if (j.contains("geometry")) e.geometry = geometry_from_json(j["geometry"]);
  e.wl_enabled = j.value("wl_enabled", e.wl_enabled);
  if (j.contains("block_sweep")) e.block_sweep = j["block_sweep"].get<std::vector<uint32_t>>();
  e.fill_fraction = j.value("fill_fraction", e.fill_fraction);
  e.wear_ops = j.value("wear_ops", e.wear_ops);
  e.working_set_files = j.value("working_set_files", e.working_set_files);
  e.compression_size_bytes = j.value("compression_size_bytes", e.compression_size_bytes);
  if (j.contains("compression_profiles")) {
    e.compression_profiles.clear();
    for (const auto& name : j["compression_profiles"]) {
      auto p = content_profile_from_name(name.get<std::string>());
      if (!p) throw Error(ErrorCode::BadConfig, "unknown content profile");
      e.compression_profiles.push_back(*p);
    }
  }
  if (j.contains("tree_spec")) e.tree_spec = spec_from_json(j["tree_spec"]);
  e.crash_workload_ops = j.value("crash_workload_ops", e.crash_workload_ops);
  return e;
}

void add_delta(TraceCounters& acc, const TraceCounters& before, const TraceCounters& after) {
  acc.page_reads += after.page_reads - before.page_reads;
  acc.page_writes += after.page_writes - before.page_writes;
  acc.block_erases += after.block_erases - before.block_erases;
  acc.simulated_time_us += after.simulated_time_us - before.simulated_time_us;
}

}  // namespace

const char* scaling_class_name(ScalingClass c) {
  switch (c) {
    case ScalingClass::Constant:
      return "constant";
    case ScalingClass::Linear:
      return "linear";
    case ScalingClass::Logarithmic:
      return "logarithmic";
    case ScalingClass::Ambiguous:
      return "ambiguous";
  }
  return "unknown";
}

const char* experiment_kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::MountScaling:
      return "mount-scaling";
    case ExperimentKind::Wear:
      return "wear";
    case ExperimentKind::Compression:
      return "compression";
    case ExperimentKind::FileTree:
      return "file-tree";
    case ExperimentKind::CrashSweep:
      return "crash-sweep";
  }
  return "unknown";
}

ScalingFit classify_scaling(const std::vector<ScalingPoint>& series) {
  if (series.size() < 4)
    throw Error(ErrorCode::NeedFourPoints, "scaling fit needs at least 4 points");
  for (size_t i = 1; i < series.size(); ++i)
    if (series[i].n <= series[i - 1].n)
      throw Error(ErrorCode::BadConfig, "series sizes must be strictly increasing");

  auto r2_of = [&](bool log_x) {
    const double n = static_cast<double>(series.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : series) {
      double x = log_x ? std::log(static_cast<double>(p.n)) : static_cast<double>(p.n);
      sx += x;
      sy += p.cost;
      sxx += x * x;
      sxy += x * p.cost;
    }
    double denom = n * sxx - sx * sx;
    double beta = denom == 0 ? 0 : (n * sxy - sx * sy) / denom;
    double alpha = (sy - beta * sx) / n;
    double ybar = sy / n;
    double ssres = 0, sstot = 0;
    for (const auto& p : series) {
      double x = log_x ? std::log(static_cast<double>(p.n)) : static_cast<double>(p.n);
      double e = p.cost - (alpha + beta * x);
      ssres += e * e;
      sstot += (p.cost - ybar) * (p.cost - ybar);
    }
    if (sstot == 0) return 1.0;
    return 1.0 - ssres / sstot;
  };

  double r2_linear = r2_of(false);
  double r2_log = r2_of(true);

  double lo = series[0].cost, hi = series[0].cost;
  for (const auto& p : series) {
    lo = std::min(lo, p.cost);
    hi = std::max(hi, p.cost);
  }
  ScalingClass cls;
  if (hi == lo || (lo > 0 && hi / lo < 1.1))
    cls = ScalingClass::Constant;
  else if (std::abs(r2_linear - r2_log) < 0.01)
    cls = ScalingClass::Ambiguous;
  else
    cls = r2_linear > r2_log ? ScalingClass::Linear : ScalingClass::Logarithmic;
  return {cls, r2_linear, r2_log};
}

std::string Experiment::to_json() const { return experiment_to_json_obj(*this).dump(2) + "\n"; }

Experiment Experiment::from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad experiment json: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, "experiment json must be an object");
  try {
    return experiment_from_json_obj(j);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("bad experiment json: ") + e.what());
  }
}

std::string Report::to_json() const {
  ordered_json j;
  j["experiment"] = experiment_to_json_obj(experiment);
  j["variant"] = variant_name(experiment.variant);
  j["seed"] = experiment.seed;
  ordered_json c;
  c["page_reads"] = counters.page_reads;
  c["page_writes"] = counters.page_writes;
  c["block_erases"] = counters.block_erases;
  c["simulated_time_us"] = counters.simulated_time_us;
  j["counters"] = c;

  ordered_json series = ordered_json::array();
  switch (experiment.kind) {
    case ExperimentKind::MountScaling:
      for (const auto& r : mount_rows) {
        ordered_json row;
        row["num_blocks"] = r.num_blocks;
        row["pages_read"] = r.pages_read;
        row["simulated_time_us"] = r.simulated_time_us;
        row["full_scan"] = r.full_scan;
        series.push_back(row);
      }
      break;
    case ExperimentKind::Wear:
      for (const auto& r : wear_series) {
        ordered_json row;
        row["op_index"] = r.op_index;
        row["spread"] = r.spread;
        series.push_back(row);
      }
      break;
    case ExperimentKind::Compression:
      for (const auto& r : compression_rows) {
        ordered_json row;
        row["variant"] = variant_name(r.variant);
        row["profile"] = content_profile_name(r.profile);
        row["pages_written"] = r.pages_written;
        row["simulated_time_us"] = r.simulated_time_us;
        series.push_back(row);
      }
      break;
    case ExperimentKind::FileTree:
      for (const auto& r : tree_phases) {
        ordered_json row;
        row["phase"] = r.phase;
        row["ops"] = r.ops;
        row["pages_read"] = r.pages_read;
        row["pages_written"] = r.pages_written;
        row["block_erases"] = r.block_erases;
        row["simulated_time_us"] = r.simulated_time_us;
        series.push_back(row);
      }
      break;
    case ExperimentKind::CrashSweep:
      for (const auto& r : crash_points) {
        ordered_json row;
        row["crash_index"] = r.crash_index;
        row["recovered_prefix"] = r.recovered_prefix;
        row["full_scan"] = r.full_scan;
        row["consistent"] = r.consistent;
        series.push_back(row);
      }
      break;
  }
  j["series"] = series;

  if (has_fit) {
    ordered_json f;
    f["class"] = scaling_class_name(fit.cls);
    f["r2_linear"] = fit.r2_linear;
    f["r2_log"] = fit.r2_log;
    j["classification"] = f;
  } else {
    j["classification"] = nullptr;
  }
  j["version"] = kToolVersion;
  return j.dump(2) + "\n";
}

std::string Report::to_csv() const {
  std::ostringstream os;
  switch (experiment.kind) {
    case ExperimentKind::MountScaling:
      os << "num_blocks,pages_read,simulated_time_us,full_scan\n";
      for (const auto& r : mount_rows)
        os << r.num_blocks << ',' << r.pages_read << ',' << r.simulated_time_us << ','
           << (r.full_scan ? 1 : 0) << '\n';
      break;
    case ExperimentKind::Wear:
      os << "op_index,spread\n";
      for (const auto& r : wear_series) os << r.op_index << ',' << r.spread << '\n';
      break;
    case ExperimentKind::Compression:
      os << "variant,profile,pages_written,simulated_time_us\n";
      for (const auto& r : compression_rows)
        os << variant_name(r.variant) << ',' << content_profile_name(r.profile) << ','
           << r.pages_written << ',' << r.simulated_time_us << '\n';
      break;
    case ExperimentKind::FileTree:
      os << "phase,ops,pages_read,pages_written,block_erases,simulated_time_us\n";
      for (const auto& r : tree_phases)
        os << r.phase << ',' << r.ops << ',' << r.pages_read << ',' << r.pages_written << ','
           << r.block_erases << ',' << r.simulated_time_us << '\n';
      break;
    case ExperimentKind::CrashSweep:
      os << "crash_index,recovered_prefix,full_scan,consistent\n";
      for (const auto& r : crash_points)
        os << r.crash_index << ',' << r.recovered_prefix << ',' << (r.full_scan ? 1 : 0) << ','
           << (r.consistent ? 1 : 0) << '\n';
      break;
  }
  return os.str();
}

MountStats measure_mount(Variant variant, const FlashGeometry& geom, double fill_fraction,
                         uint64_t seed, bool clean_unmount) {
  FlashDevice dev(geom, seed);
  format(dev, variant);
  if (fill_fraction > 0) {
    auto [fs, ms] = mount(dev, variant);
    (void)ms;
    // Incompressible content, a fixed per-file size, and at most 64 files per
    // directory; only the file count scales with the device.
    const uint64_t per_file = 64ull * record_payload_capacity(geom.page_size);
    const uint64_t target =
        static_cast<uint64_t>(fill_fraction * static_cast<double>(geom.total_pages()) *
                              geom.page_size);
    const uint64_t nfiles = std::max<uint64_t>(1, target / per_file);
    const uint64_t ndirs = (nfiles + 63) / 64;
    TreeManifest m;
    m.rows.push_back({"/", NodeKind::Dir, 0});
    uint64_t made = 0;
    for (uint64_t d = 0; d < ndirs; ++d) {
      std::string dir = "/d" + std::to_string(d);
      m.rows.push_back({dir, NodeKind::Dir, 0});
      for (uint64_t i = 0; i < 64 && made < nfiles; ++i, ++made)
        m.rows.push_back({dir + "/f" + std::to_string(made), NodeKind::File, per_file});
    }
    TreeSpec content_spec;
    content_spec.content = ContentProfile::Random;
    content_spec.seed = seed;
    apply(*fs, m, content_spec);
    fs->unmount(clean_unmount);
  }
  auto [fs2, stats] = mount(dev, variant);
  fs2->unmount(false);
  return stats;
}

Report run_mount_scaling(const Experiment& exp) {
  Report r;
  r.experiment = exp;
  std::vector<ScalingPoint> series;
  for (uint32_t nb : exp.block_sweep) {
    FlashGeometry geom = exp.geometry;
    geom.num_blocks = nb;
    MountStats ms = measure_mount(exp.variant, geom, exp.fill_fraction, exp.seed, true);
    r.mount_rows.push_back({nb, ms.pages_read, ms.simulated_time_us, ms.full_scan});
    series.push_back({nb, static_cast<double>(ms.pages_read)});
    r.counters.page_reads += ms.pages_read;
    r.counters.simulated_time_us += ms.simulated_time_us;
  }
  if (series.size() >= 4) {
    r.fit = classify_scaling(series);
    r.has_fit = true;
  }
  return r;
}

Report run_wear(const Experiment& exp) {
  Report r;
  r.experiment = exp;
  FlashDevice dev(exp.geometry, exp.seed);
  FormatOptions opts;
  opts.wl_enabled = exp.wl_enabled;
  format(dev, exp.variant, opts);
  auto [fs, ms] = mount(dev, exp.variant);
  (void)ms;

  const size_t payload = record_payload_capacity(exp.geometry.page_size);
  std::mt19937_64 rng(exp.seed);
  std::vector<std::string> files;
  for (uint32_t i = 0; i < exp.working_set_files; ++i) {
    std::string path = "/w" + std::to_string(i);
    fs->create_file(path);
    fs->write_file(path, 0, random_bytes(rng, payload));
    files.push_back(path);
  }

  r.wear_series.push_back({0, dev.wear_spread()});
  uint64_t done = 0;
  for (uint32_t s = 1; s <= 100; ++s) {
    uint64_t until = exp.wear_ops * s / 100;
    for (; done < until; ++done) {
      const std::string& path = files[pick_index(rng, files.size())];
      fs->write_file(path, 0, random_bytes(rng, payload));
    }
    if (r.wear_series.back().op_index != until)
      r.wear_series.push_back({until, dev.wear_spread()});
  }
  fs->unmount(false);
  r.counters = dev.counters();
  return r;
}

Report run_compression(const Experiment& exp) {
  Report r;
  r.experiment = exp;
  for (Variant v : {Variant::LogTable, Variant::Checkpoint, Variant::Tree}) {
    for (ContentProfile profile : exp.compression_profiles) {
      FlashDevice dev(exp.geometry, exp.seed);
      format(dev, v);
      auto [fs, ms] = mount(dev, v);
      (void)ms;
      fs->create_file("/f");
      TreeSpec cs;
      cs.content = profile;
      cs.seed = exp.seed;
      auto content = make_content(cs, 0, exp.compression_size_bytes);
      TraceCounters before = dev.counters();
      fs->write_file("/f", 0, content);
      TraceCounters after = dev.counters();
      r.compression_rows.push_back({v, profile, after.page_writes - before.page_writes,
                                    after.simulated_time_us - before.simulated_time_us});
      add_delta(r.counters, before, after);
      fs->unmount(false);
    }
  }
  return r;
}

Report run_file_tree(const Experiment& exp) {
  Report r;
  r.experiment = exp;
  TreeManifest manifest = generate(exp.tree_spec);
  FlashDevice dev(exp.geometry, exp.seed);
  FormatOptions opts;
  opts.wl_enabled = exp.wl_enabled;
  format(dev, exp.variant, opts);
  auto [fs, ms] = mount(dev, exp.variant);
  (void)ms;

  auto phase = [&](const char* name, auto&& body) {
    TraceCounters before = dev.counters();
    uint64_t ops = body();
    TraceCounters after = dev.counters();
    r.tree_phases.push_back({name, ops, after.page_reads - before.page_reads,
                             after.page_writes - before.page_writes,
                             after.block_erases - before.block_erases,
                             after.simulated_time_us - before.simulated_time_us});
  };
  phase("create", [&] { return apply(*fs, manifest, exp.tree_spec).ops; });
  // A cold index makes the find phase comparable across variants: the tree
  // variant must hit flash, the table variants stay in RAM.
  fs->flush_node_cache();
  phase("find", [&] { return find_walk(*fs, manifest, "f*").hits; });
  phase("delete", [&] { return delete_tree(*fs, manifest).ops; });
  fs->unmount(true);
  r.counters = dev.counters();
  return r;
}

namespace {

// Workload for the crash sweep: every operation programs at most one data
// page on the table variants (payload-bounded writes, no multi-chunk spans),
// so any crash lands between whole operations there, while the tree variant
// relies on its journal group atomicity.
struct WOp {
  enum Kind : uint8_t { Mkdir, Create, Write, Remove } kind;
  std::string path;
  uint64_t offset = 0;
  std::vector<uint8_t> data;
};

std::vector<WOp> make_crash_workload(uint32_t n, uint64_t seed, size_t payload) {
  std::mt19937_64 rng(seed);
  std::vector<WOp> ops;
  std::vector<std::string> dirs{""};  // "" means root
  std::vector<std::string> files;
  std::map<std::string, uint64_t> sizes;
  uint32_t ctr = 0;
  while (ops.size() < n) {
    uint64_t roll = pick_index(rng, 100);
    if (roll < 12 && dirs.size() < 8) {
      const std::string& parent = dirs[pick_index(rng, dirs.size())];
      std::string path = parent + "/d" + std::to_string(ctr++);
      ops.push_back({WOp::Mkdir, path, 0, {}});
      dirs.push_back(path);
    } else if (roll < 40 || files.empty()) {
      const std::string& parent = dirs[pick_index(rng, dirs.size())];
      std::string path = parent + "/f" + std::to_string(ctr++);
      ops.push_back({WOp::Create, path, 0, {}});
      files.push_back(path);
      sizes[path] = 0;
    } else if (roll < 50 && files.size() > 1) {
      uint64_t i = pick_index(rng, files.size());
      std::string path = files[i];
      files.erase(files.begin() + static_cast<ptrdiff_t>(i));
      sizes.erase(path);
      ops.push_back({WOp::Remove, path, 0, {}});
    } else {
      const std::string& path = files[pick_index(rng, files.size())];
      uint64_t size = sizes[path];
      uint64_t offset = size == 0 ? 0 : pick_index(rng, size + 1);
      // Cap file growth at 3 payloads and keep every write single-chunk.
      uint64_t cap = std::min<uint64_t>(payload, 3 * payload - offset);
      if (cap == 0) {
        offset = 0;
        cap = payload;
      }
      uint64_t len = 1 + pick_index(rng, cap);
      WOp op{WOp::Write, path, 0, {}};
      op.offset = offset;
      op.data = random_bytes(rng, len);
      ops.push_back(std::move(op));
      sizes[path] = std::max(size, offset + len);
    }
  }
  return ops;
}

// In-memory shadow of the observable VFS state.
struct ShadowState {
  std::set<std::string> dirs;
  std::map<std::string, std::vector<uint8_t>> files;

  bool operator==(const ShadowState&) const = default;

  void apply(const WOp& op) {
    switch (op.kind) {
      case WOp::Mkdir:
        dirs.insert(op.path);
        break;
      case WOp::Create:
        files[op.path];
        break;
      case WOp::Write: {
        auto& f = files[op.path];
        if (f.size() < op.offset + op.data.size()) f.resize(op.offset + op.data.size());
        std::copy(op.data.begin(), op.data.end(), f.begin() + static_cast<ptrdiff_t>(op.offset));
        break;
      }
      case WOp::Remove:
        files.erase(op.path);
        break;
    }
  }
};

void run_wop(FileSystem& fs, const WOp& op) {
  switch (op.kind) {
    case WOp::Mkdir:
      fs.mkdir(op.path);
      break;
    case WOp::Create:
      fs.create_file(op.path);
      break;
    case WOp::Write:
      fs.write_file(op.path, op.offset, op.data);
      break;
    case WOp::Remove:
      fs.remove(op.path);
      break;
  }
}

void observe_dir(FileSystem& fs, const std::string& dir, ShadowState& out) {
  for (const auto& e : fs.readdir(dir.empty() ? "/" : dir)) {
    std::string full = dir + "/" + e.name;
    if (e.kind == NodeKind::Dir) {
      out.dirs.insert(full);
      observe_dir(fs, full, out);
    } else {
      out.files[full] = fs.read_file(full, 0, e.size);
    }
  }
}

ShadowState observe(FileSystem& fs) {
  ShadowState s;
  observe_dir(fs, "", s);
  return s;
}

}  // namespace

Report run_crash_sweep(const Experiment& exp) {
  Report r;
  r.experiment = exp;
  const size_t payload = record_payload_capacity(exp.geometry.page_size);
  auto ops = make_crash_workload(exp.crash_workload_ops, exp.seed, payload);

  // Reference states after every prefix.
  std::vector<ShadowState> after;
  after.emplace_back();
  for (const auto& op : ops) {
    ShadowState s = after.back();
    s.apply(op);
    after.push_back(std::move(s));
  }

  FormatOptions opts;
  opts.wl_enabled = exp.wl_enabled;

  // Baseline run fixes how many flash operations the workload performs.
  uint64_t total_flash_ops = 0;
  {
    FlashDevice dev(exp.geometry, exp.seed);
    format(dev, exp.variant, opts);
    auto [fs, ms] = mount(dev, exp.variant);
    (void)ms;
    TraceCounters before = dev.counters();
    for (const auto& op : ops) run_wop(*fs, op);
    TraceCounters end = dev.counters();
    total_flash_ops = (end.page_reads - before.page_reads) +
                      (end.page_writes - before.page_writes) +
                      (end.block_erases - before.block_erases);
    fs->unmount(false);
    r.counters = end;
  }

  for (uint64_t k = 0; k < total_flash_ops; ++k) {
    FlashDevice dev(exp.geometry, exp.seed);
    format(dev, exp.variant, opts);
    uint64_t completed = 0;
    {
      auto [fs, ms] = mount(dev, exp.variant);
      (void)ms;
      dev.arm_crash({k});
      try {
        for (const auto& op : ops) {
          run_wop(*fs, op);
          ++completed;
        }
      } catch (const PowerLoss&) {
      }
      // The handle dies with the power; nothing is flushed.
    }
    auto [fs2, ms2] = mount(dev, exp.variant);
    ShadowState got = observe(*fs2);
    fs2->unmount(false);

    CrashPoint cp;
    cp.crash_index = k;
    cp.full_scan = ms2.full_scan;
    cp.consistent = false;
    cp.recovered_prefix = 0;
    uint64_t hi = std::min<uint64_t>(completed + 1, ops.size());
    for (uint64_t p = hi + 1; p-- > 0;) {
      if (after[p] == got) {
        cp.recovered_prefix = p;
        cp.consistent = true;
        break;
      }
    }
    r.crash_points.push_back(cp);
  }
  return r;
}

Report run_experiment(const Experiment& exp) {
  switch (exp.kind) {
    case ExperimentKind::MountScaling:
      return run_mount_scaling(exp);
    case ExperimentKind::Wear:
      return run_wear(exp);
    case ExperimentKind::Compression:
      return run_compression(exp);
    case ExperimentKind::FileTree:
      return run_file_tree(exp);
    case ExperimentKind::CrashSweep:
      return run_crash_sweep(exp);
  }
  throw Error(ErrorCode::BadConfig, "unknown experiment kind");
}

void write_report(const Report& report, const std::string& path, ReportFormat format) {
  std::string body;
  switch (format) {
    case ReportFormat::Json:
      body = report.to_json();
      break;
    case ReportFormat::Csv:
      body = report.to_csv();
      break;
    default:
      throw Error(ErrorCode::BadConfig, "unknown report format");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::BadConfig, "cannot open " + path);
  out << body;
  if (!out) throw Error(ErrorCode::BadConfig, "cannot write " + path);
}

}  // namespace ffsim
