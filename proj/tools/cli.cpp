// ffsim: batch front end for the flash simulator, the filesystem variants and
// the benchmark harness. Everything is driven by flags or a JSON config; same
// argv and config always produce byte-identical output.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ffsim/bench.hpp"
#include "ffsim/device.hpp"
#include "ffsim/errors.hpp"
#include "ffsim/fs.hpp"
#include "ffsim/treegen.hpp"

namespace {

// Bad values that CLI11's own validation cannot catch (distribution strings,
// config file contents). Mapped to exit 1 like any other usage problem.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<uint32_t> parse_u32_list(const std::string& text, const std::string& flag) {
  std::vector<uint32_t> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    try {
      size_t used = 0;
      unsigned long v = std::stoul(item, &used);
      if (used != item.size() || v == 0 || v > UINT32_MAX) throw std::invalid_argument(item);
      out.push_back(static_cast<uint32_t>(v));
    } catch (const std::exception&) {
      throw UsageError(flag + ": expected comma-separated positive integers, got '" + text +
                       "'");
    }
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

ffsim::Distribution parse_dist(const std::string& text, const std::string& flag) {
  auto d = ffsim::Distribution::parse(text);
  if (!d)
    throw UsageError(flag + ": expected constant(k), uniform(a,b) or geometric(p,cap), got '" +
                     text + "'");
  return *d;
}

ffsim::Variant parse_variant(const std::string& name) {
  auto v = ffsim::variant_from_name(name);
  if (!v) throw UsageError("--variant: expected logtable, checkpoint or tree, got '" + name + "'");
  return *v;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "'");
  std::ostringstream body;
  body << in.rdbuf();
  return body.str();
}

void emit(const std::string& data, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << data;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out || !out.write(data.data(), static_cast<std::streamsize>(data.size())))
    throw ffsim::Error(ffsim::ErrorCode::BadConfig, "cannot write '" + out_path + "'");
}

// Flags shared by every bench subcommand. Each field tracks whether the user
// set it so a --config file only loses where a flag was given explicitly.
struct BenchFlags {
  std::string variant;
  uint64_t seed = 0;
  std::string blocks;
  uint32_t pages_per_block = 0;
  uint32_t page_size = 0;
  std::string wl;
  uint32_t reps = 0;
  std::string config;
  std::string out;
  std::string format = "json";

  CLI::Option* o_variant = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_blocks = nullptr;
  CLI::Option* o_ppb = nullptr;
  CLI::Option* o_psize = nullptr;
  CLI::Option* o_wl = nullptr;
  CLI::Option* o_reps = nullptr;

  void attach(CLI::App* cmd) {
    o_variant = cmd->add_option("--variant", variant, "filesystem variant")
                    ->check(CLI::IsMember({"logtable", "checkpoint", "tree"}));
    o_seed = cmd->add_option("--seed", seed, "experiment seed");
    o_blocks = cmd->add_option("--blocks", blocks,
                               "device size in blocks (comma list sweeps mount scaling)");
    o_ppb = cmd->add_option("--pages-per-block", pages_per_block, "pages per block");
    o_psize = cmd->add_option("--page-size", page_size, "page payload size in bytes");
    o_wl = cmd->add_option("--wl", wl, "wear leveling on|off")
               ->check(CLI::IsMember({"on", "off"}));
    o_reps = cmd->add_option("--reps", reps, "repetitions recorded in the experiment echo");
    cmd->add_option("--config", config, "JSON experiment config; explicit flags override it");
    cmd->add_option("--out", out, "write output here instead of stdout");
    cmd->add_option("--format", format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));
  }

  // Layer precedence: library defaults, then config file, then explicit flags.
  ffsim::Experiment experiment(ffsim::ExperimentKind kind) const {
    ffsim::Experiment e;
    if (!config.empty()) {
      try {
        e = ffsim::Experiment::from_json(read_text_file(config));
      } catch (const ffsim::Error& err) {
        throw UsageError(std::string("--config: ") + err.what());
      }
    }
    e.kind = kind;
    if (o_variant->count()) e.variant = parse_variant(variant);
    if (o_seed->count()) e.seed = seed;
    if (o_ppb->count()) e.geometry.pages_per_block = pages_per_block;
    if (o_psize->count()) e.geometry.page_size = page_size;
    if (o_wl->count()) e.wl_enabled = (wl == "on");
    if (o_reps->count()) e.repetitions = reps;
    if (o_blocks->count()) {
      auto list = parse_u32_list(blocks, "--blocks");
      if (kind == ffsim::ExperimentKind::MountScaling) {
        e.block_sweep = list;
      } else if (list.size() == 1) {
        e.geometry.num_blocks = list[0];
      } else {
        throw UsageError("--blocks: this experiment takes a single block count");
      }
    }
    return e;
  }

  int run(ffsim::ExperimentKind kind) const {
    ffsim::Report report = ffsim::run_experiment(experiment(kind));
    emit(format == "csv" ? report.to_csv() : report.to_json(), out);
    return 0;
  }
};

// Bare geometry flags for subcommands that are not experiments.
struct GeoFlags {
  std::string blocks;
  uint32_t pages_per_block = 0;
  uint32_t page_size = 0;
  CLI::Option* o_blocks = nullptr;
  CLI::Option* o_ppb = nullptr;
  CLI::Option* o_psize = nullptr;

  void attach(CLI::App* cmd) {
    o_blocks = cmd->add_option("--blocks", blocks, "device size in blocks");
    o_ppb = cmd->add_option("--pages-per-block", pages_per_block, "pages per block");
    o_psize = cmd->add_option("--page-size", page_size, "page payload size in bytes");
  }

  ffsim::FlashGeometry geometry() const {
    ffsim::FlashGeometry g;
    if (o_blocks->count()) {
      auto list = parse_u32_list(blocks, "--blocks");
      if (list.size() != 1) throw UsageError("--blocks: expected a single block count");
      g.num_blocks = list[0];
    }
    if (o_ppb->count()) g.pages_per_block = pages_per_block;
    if (o_psize->count()) g.page_size = page_size;
    return g;
  }
};

uint64_t file_size_of(ffsim::FileSystem& fs, const std::string& path) {
  return fs.stat(path).size;
}

// Creates any missing directories along the way so one-shot writes do not
// force the caller to issue separate mkdir invocations.
void ensure_parents(ffsim::FileSystem& fs, const std::string& path) {
  size_t pos = 1;
  while (true) {
    pos = path.find('/', pos);
    if (pos == std::string::npos) return;
    std::string dir = path.substr(0, pos);
    try {
      fs.stat(dir);
    } catch (const ffsim::Error& e) {
      if (e.code() != ffsim::ErrorCode::NotFound) throw;
      fs.mkdir(dir);
    }
    ++pos;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic NAND flash simulator and FFS benchmark harness"};
  app.require_subcommand(1);

  // bench
  auto* bench = app.add_subcommand("bench", "run a benchmark experiment");
  bench->require_subcommand(1);
  struct BenchCmd {
    const char* name;
    const char* help;
    ffsim::ExperimentKind kind;
  };
  const BenchCmd bench_cmds[] = {
      {"mount-scaling", "mount cost across device sizes", ffsim::ExperimentKind::MountScaling},
      {"wear", "wear spread under an overwrite workload", ffsim::ExperimentKind::Wear},
      {"compression", "pages written per content profile", ffsim::ExperimentKind::Compression},
      {"tree", "create/find/delete costs on a generated tree", ffsim::ExperimentKind::FileTree},
      {"crash", "power-loss sweep over every flash op", ffsim::ExperimentKind::CrashSweep},
  };
  std::vector<std::pair<ffsim::ExperimentKind, BenchFlags>> bench_flags;
  bench_flags.reserve(std::size(bench_cmds));
  std::vector<CLI::App*> bench_subs;
  for (const auto& bc : bench_cmds) {
    auto* cmd = bench->add_subcommand(bc.name, bc.help);
    bench_flags.emplace_back(bc.kind, BenchFlags{});
    bench_flags.back().second.attach(cmd);
    bench_subs.push_back(cmd);
  }
  // Per-experiment knobs beyond the shared set.
  double ms_fill = 0.5;
  auto* o_fill = bench_subs[0]->add_option("--fill", ms_fill, "fill fraction before each mount")
                     ->check(CLI::Range(0.0, 1.0));
  uint64_t wear_ops = 0;
  uint32_t wear_files = 0;
  auto* o_wear_ops = bench_subs[1]->add_option("--ops", wear_ops, "number of overwrites");
  auto* o_wear_files = bench_subs[1]->add_option("--files", wear_files, "working set size");
  uint64_t comp_bytes = 0;
  std::string comp_profiles;
  auto* o_comp_bytes = bench_subs[2]->add_option("--bytes", comp_bytes, "file size to write");
  auto* o_comp_profiles = bench_subs[2]->add_option(
      "--profiles", comp_profiles, "comma list of zeros,random,textlike");
  struct TreeSpecFlags {
    uint32_t depth = 0;
    std::string dirs, files, size, content;
    CLI::Option* o_depth = nullptr;
    CLI::Option* o_dirs = nullptr;
    CLI::Option* o_files = nullptr;
    CLI::Option* o_size = nullptr;
    CLI::Option* o_content = nullptr;
    void attach(CLI::App* cmd) {
      o_depth = cmd->add_option("--depth", depth, "directory depth");
      o_dirs = cmd->add_option("--dirs", dirs, "dirs-per-dir distribution, e.g. constant(2)");
      o_files = cmd->add_option("--files", files, "files-per-dir distribution");
      o_size = cmd->add_option("--size", size, "file size distribution in bytes");
      o_content = cmd->add_option("--content", content, "file content profile")
                      ->check(CLI::IsMember({"zeros", "random", "textlike"}));
    }
    void apply(ffsim::TreeSpec& spec) const {
      if (o_depth->count()) spec.depth = depth;
      if (o_dirs->count()) spec.dirs_per_dir = parse_dist(dirs, "--dirs");
      if (o_files->count()) spec.files_per_dir = parse_dist(files, "--files");
      if (o_size->count()) spec.file_size = parse_dist(size, "--size");
      if (o_content->count()) spec.content = *ffsim::content_profile_from_name(content);
    }
  };
  TreeSpecFlags bench_tree_spec;
  bench_tree_spec.attach(bench_subs[3]);
  uint32_t crash_ops = 0;
  auto* o_crash_ops = bench_subs[4]->add_option("--ops", crash_ops, "workload length");

  // gen-tree
  auto* gen = app.add_subcommand("gen-tree", "sample a manifest from a tree spec");
  TreeSpecFlags gen_spec_flags;
  gen_spec_flags.attach(gen);
  uint64_t gen_seed = 0;
  gen->add_option("--seed", gen_seed, "sampling seed");
  std::string gen_out, gen_format = "csv";
  gen->add_option("--out", gen_out, "write manifest here instead of stdout");
  gen->add_option("--format", gen_format, "manifest format")
      ->check(CLI::IsMember({"csv", "json"}));

  // fs
  auto* fs_cmd = app.add_subcommand("fs", "one-shot filesystem ops on a *.flash image");
  fs_cmd->require_subcommand(1);
  std::string img_path, node_path, fs_variant = "logtable", fs_data, fs_in, fs_out;
  uint64_t fs_seed = 1, fs_offset = 0;
  GeoFlags fs_geo;
  auto* fs_format = fs_cmd->add_subcommand("format", "create and format a fresh image");
  fs_format->add_option("image", img_path, "image file to create")->required();
  fs_format->add_option("--variant", fs_variant, "filesystem variant")
      ->check(CLI::IsMember({"logtable", "checkpoint", "tree"}));
  fs_geo.attach(fs_format);
  fs_format->add_option("--seed", fs_seed, "device seed");
  std::string fs_wl = "on";
  fs_format->add_option("--wl", fs_wl, "wear leveling on|off")
      ->check(CLI::IsMember({"on", "off"}));
  auto* fs_mount = fs_cmd->add_subcommand("mount", "mount and report mount stats");
  fs_mount->add_option("image", img_path, "image file")->required();
  fs_mount->add_option("--out", fs_out, "write output here instead of stdout");
  auto* fs_write = fs_cmd->add_subcommand("write", "write a file (parents auto-created)");
  fs_write->add_option("image", img_path, "image file")->required();
  fs_write->add_option("path", node_path, "file path inside the image")->required();
  fs_write->add_option("--data", fs_data, "literal bytes to write");
  fs_write->add_option("--in", fs_in, "read bytes from this local file");
  fs_write->add_option("--offset", fs_offset, "write offset");
  auto* fs_read = fs_cmd->add_subcommand("read", "read a file to stdout or --out");
  fs_read->add_option("image", img_path, "image file")->required();
  fs_read->add_option("path", node_path, "file path inside the image")->required();
  fs_read->add_option("--out", fs_out, "write output here instead of stdout");
  auto* fs_ls = fs_cmd->add_subcommand("ls", "list a directory");
  fs_ls->add_option("image", img_path, "image file")->required();
  fs_ls->add_option("path", node_path, "directory path, default /");
  fs_ls->add_option("--out", fs_out, "write output here instead of stdout");

  // trace
  auto* trace = app.add_subcommand("trace", "dump geometry, wear and counters of an image");
  std::string trace_img, trace_out, trace_format = "json";
  trace->add_option("image", trace_img, "image file")->required();
  trace->add_option("--out", trace_out, "write output here instead of stdout");
  trace->add_option("--format", trace_format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  try {
    for (size_t i = 0; i < bench_subs.size(); ++i)
      if (bench_subs[i]->parsed()) {
        auto& [kind, flags] = bench_flags[i];
        ffsim::Experiment e = flags.experiment(kind);
        if (kind == ffsim::ExperimentKind::MountScaling && o_fill->count())
          e.fill_fraction = ms_fill;
        if (o_wear_ops->count()) e.wear_ops = wear_ops;
        if (o_wear_files->count()) e.working_set_files = wear_files;
        if (o_comp_bytes->count()) e.compression_size_bytes = comp_bytes;
        if (o_comp_profiles->count()) {
          e.compression_profiles.clear();
          std::istringstream in(comp_profiles);
          std::string item;
          while (std::getline(in, item, ',')) {
            auto p = ffsim::content_profile_from_name(item);
            if (!p) throw UsageError("--profiles: unknown profile '" + item + "'");
            e.compression_profiles.push_back(*p);
          }
          if (e.compression_profiles.empty()) throw UsageError("--profiles: empty list");
        }
        if (kind == ffsim::ExperimentKind::FileTree) bench_tree_spec.apply(e.tree_spec);
        if (o_crash_ops->count()) e.crash_workload_ops = crash_ops;
        ffsim::Report report = ffsim::run_experiment(e);
        emit(flags.format == "csv" ? report.to_csv() : report.to_json(), flags.out);
        return 0;
      }

    if (gen->parsed()) {
      ffsim::TreeSpec spec;
      gen_spec_flags.apply(spec);
      spec.seed = gen_seed;
      ffsim::TreeManifest manifest = ffsim::generate(spec);
      if (gen_format == "csv") {
        emit(manifest.to_csv(), gen_out);
      } else {
        std::ostringstream body;
        body << "[\n";
        for (size_t i = 0; i < manifest.rows.size(); ++i) {
          const auto& row = manifest.rows[i];
          body << "  {\"path\": \"" << row.path << "\", \"kind\": \""
               << (row.kind == ffsim::NodeKind::Dir ? "dir" : "file")
               << "\", \"size\": " << row.size << "}" << (i + 1 < manifest.rows.size() ? "," : "")
               << "\n";
        }
        body << "]\n";
        emit(body.str(), gen_out);
      }
      return 0;
    }

    if (fs_format->parsed()) {
      ffsim::FlashDevice dev(fs_geo.geometry(), fs_seed);
      ffsim::FormatOptions opts;
      opts.wl_enabled = (fs_wl == "on");
      ffsim::format(dev, parse_variant(fs_variant), opts);
      dev.dump(img_path);
      return 0;
    }
    if (fs_mount->parsed() || fs_read->parsed() || fs_ls->parsed() || fs_write->parsed()) {
      // The image records which variant formatted it; find it the same way
      // mount does, by trying each until the anchor stops objecting. The
      // probe mutates only the in-memory copy, so reload before the real run.
      ffsim::FlashDevice dev = ffsim::FlashDevice::load(img_path);
      std::optional<ffsim::Variant> variant;
      for (ffsim::Variant v :
           {ffsim::Variant::LogTable, ffsim::Variant::Checkpoint, ffsim::Variant::Tree}) {
        try {
          auto probe = ffsim::mount(dev, v);
          probe.first->unmount(false);
          variant = v;
          break;
        } catch (const ffsim::Error& e) {
          if (e.code() != ffsim::ErrorCode::VariantMismatch) throw;
        }
      }
      if (!variant)
        throw ffsim::Error(ffsim::ErrorCode::CorruptAnchor, "image matches no variant");
      dev = ffsim::FlashDevice::load(img_path);
      auto [fs, stats] = ffsim::mount(dev, *variant);
      if (fs_mount->parsed()) {
        // Pure report: the handle is dropped without touching the image.
        std::ostringstream body;
        body << "{\"variant\": \"" << ffsim::variant_name(*variant)
             << "\", \"full_scan\": " << (stats.full_scan ? "true" : "false")
             << ", \"pages_read\": " << stats.pages_read
             << ", \"simulated_time_us\": " << stats.simulated_time_us << "}\n";
        fs->unmount(false);
        emit(body.str(), fs_out);
      } else if (fs_read->parsed()) {
        uint64_t size = file_size_of(*fs, node_path);
        std::vector<uint8_t> data = fs->read_file(node_path, 0, size);
        fs->unmount(false);
        emit(std::string(data.begin(), data.end()), fs_out);
      } else if (fs_ls->parsed()) {
        std::string dir = node_path.empty() ? "/" : node_path;
        std::ostringstream body;
        for (const auto& entry : fs->readdir(dir))
          body << (entry.kind == ffsim::NodeKind::Dir ? "d " : "f ") << entry.size << " "
               << entry.name << "\n";
        fs->unmount(false);
        emit(body.str(), fs_out);
      } else {
        std::string bytes = fs_data;
        if (!fs_in.empty()) bytes = read_text_file(fs_in);
        ensure_parents(*fs, node_path);
        try {
          fs->stat(node_path);
        } catch (const ffsim::Error& e) {
          if (e.code() != ffsim::ErrorCode::NotFound) throw;
          fs->create_file(node_path);
        }
        fs->write_file(node_path, fs_offset,
                       {reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()});
        fs->unmount(true);
        dev.dump(img_path);
      }
      return 0;
    }

    if (trace->parsed()) {
      ffsim::FlashDevice dev = ffsim::FlashDevice::load(trace_img);
      const auto& g = dev.geometry();
      auto hist = dev.erase_histogram();
      if (trace_format == "json") {
        std::ostringstream body;
        body << "{\n  \"geometry\": {\"num_blocks\": " << g.num_blocks
             << ", \"pages_per_block\": " << g.pages_per_block
             << ", \"page_size\": " << g.page_size << "},\n";
        const auto& c = dev.counters();
        body << "  \"counters\": {\"page_reads\": " << c.page_reads
             << ", \"page_writes\": " << c.page_writes << ", \"block_erases\": " << c.block_erases
             << ", \"simulated_time_us\": " << c.simulated_time_us << "},\n";
        body << "  \"good_blocks\": " << dev.good_block_count()
             << ",\n  \"wear_spread\": " << dev.wear_spread() << ",\n  \"erase_histogram\": [";
        for (size_t b = 0; b < hist.size(); ++b) body << (b ? ", " : "") << hist[b];
        body << "]\n}\n";
        emit(body.str(), trace_out);
      } else {
        std::ostringstream body;
        body << "block,erase_count,bad\n";
        for (size_t b = 0; b < hist.size(); ++b)
          body << b << "," << hist[b] << "," << (dev.is_bad(static_cast<uint32_t>(b)) ? 1 : 0)
               << "\n";
        emit(body.str(), trace_out);
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
