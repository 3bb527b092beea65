// Acceptance suite: end-to-end checks of the shipped behavior claims, one
// self-contained criterion per function. Prints one PASS/FAIL line each and
// exits with the number of failures, so it doubles as a smoke binary for CI.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ffsim/bench.hpp"
#include "ffsim/device.hpp"
#include "ffsim/errors.hpp"
#include "ffsim/fs.hpp"
#include "ffsim/record.hpp"
#include "ffsim/treegen.hpp"
#include "reference_model.hpp"

using namespace ffsim;

namespace {

struct Result {
  bool ok = true;
  std::string detail;
};

FlashGeometry geom(uint32_t blocks, uint32_t ppb = 16, uint32_t page = 512) {
  FlashGeometry g;
  g.num_blocks = blocks;
  g.pages_per_block = ppb;
  g.page_size = page;
  g.oob_size = 16;
  return g;
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// 1. Erase-before-write: random raw op sequences with a shadow page map.
// Every program of a non-free page must raise and must leave the stored
// bytes untouched; free-page reads must be all-ones.
Result c1_erase_before_write() {
  const int kSequences = 10000;
  const int kOpsPerSeq = 24;
  FlashGeometry g = geom(4, 4);
  uint64_t rejected = 0, programs = 0, silent = 0, mismatches = 0;

  for (int s = 0; s < kSequences; ++s) {
    FlashDevice dev(g, uint64_t(s) + 1);
    struct Shadow {
      bool programmed = false;
      std::vector<uint8_t> data;
    };
    std::vector<Shadow> shadow(g.num_blocks * g.pages_per_block);
    std::mt19937_64 rng(uint64_t(s) * 2654435761u + 17);
    auto idx = [&](uint32_t b, uint32_t p) { return b * g.pages_per_block + p; };

    for (int op = 0; op < kOpsPerSeq; ++op) {
      uint32_t b = uint32_t(rng() % g.num_blocks);
      uint32_t p = uint32_t(rng() % g.pages_per_block);
      uint64_t roll = rng() % 100;
      if (roll < 55) {
        std::vector<uint8_t> data(1 + rng() % 8);
        for (auto& c : data) c = uint8_t(rng());
        Shadow& sh = shadow[idx(b, p)];
        if (sh.programmed) {
          ++programs;
          bool threw = false;
          try {
            dev.program_page(b, p, data, {});
          } catch (const Error& e) {
            threw = e.code() == ErrorCode::RewriteWithoutErase;
          }
          if (!threw) {
            ++silent;
            continue;
          }
          ++rejected;
          auto img = dev.read_page(b, p);
          if (!std::equal(sh.data.begin(), sh.data.end(), img.data.begin())) ++silent;
        } else {
          ++programs;
          dev.program_page(b, p, data, {});
          sh.programmed = true;
          sh.data = data;
        }
      } else if (roll < 80) {
        dev.erase_block(b);
        for (uint32_t q = 0; q < g.pages_per_block; ++q) shadow[idx(b, q)] = Shadow{};
      } else {
        auto img = dev.read_page(b, p);
        const Shadow& sh = shadow[idx(b, p)];
        if (img.data.size() != g.page_size) ++mismatches;
        if (sh.programmed) {
          if (!std::equal(sh.data.begin(), sh.data.end(), img.data.begin())) ++mismatches;
          // the generator writes short payloads, so the tail is always pad
          if (img.data.back() != 0xFF) ++mismatches;
        } else {
          if (std::any_of(img.data.begin(), img.data.end(), [](uint8_t c) { return c != 0xFF; }))
            ++mismatches;
        }
      }
    }
  }

  Result r;
  r.ok = silent == 0 && mismatches == 0 && rejected > 0;
  r.detail = fmt("%d sequences, %llu programs, %llu rejected rewrites, %llu silent overwrites, "
                 "%llu read mismatches",
                 kSequences, (unsigned long long)programs, (unsigned long long)rejected,
                 (unsigned long long)silent, (unsigned long long)mismatches);
  return r;
}

// 2. Reference-model equivalence under a randomized VFS workload, all three
// variants, state compared in full before and after remounts.
Result c2_reference_equivalence() {
  uint64_t runs = 0, total_ops = 0;
  for (uint64_t seed = 1; seed <= 1000; ++seed) {
    int nops = 120 + int((seed * 37) % 381);  // 120..500
    for (Variant v : {Variant::LogTable, Variant::Checkpoint, Variant::Tree}) {
      auto m = refmodel::differential_run(v, FormatOptions{}, seed, nops, 96, 4, 250);
      ++runs;
      total_ops += uint64_t(nops);
      if (m) return {false, *m};
    }
  }
  return {true, fmt("%llu runs, %llu ops, all states equivalent",
                    (unsigned long long)runs, (unsigned long long)total_ops)};
}

// 3. Mount cost shape at 50% fill across a block sweep: full scan is linear,
// the tree index is logarithmic, a checkpoint restore is a small constant
// fraction, and losing the checkpoint falls back to the full scan exactly.
Result c3_mount_scaling() {
  const std::vector<uint32_t> sweep = {256, 512, 1024, 2048, 4096};
  std::vector<ScalingPoint> lt_pts, tr_pts;
  std::ostringstream why;

  for (uint32_t nb : sweep) {
    FlashGeometry g;  // default page/block shape, swept size
    g.num_blocks = nb;
    MountStats lt = measure_mount(Variant::LogTable, g, 0.5, 1, true);
    MountStats tr = measure_mount(Variant::Tree, g, 0.5, 1, true);
    MountStats ck = measure_mount(Variant::Checkpoint, g, 0.5, 1, true);
    MountStats ku = measure_mount(Variant::Checkpoint, g, 0.5, 1, false);
    lt_pts.push_back({nb, double(lt.pages_read)});
    tr_pts.push_back({nb, double(tr.pages_read)});
    if (!lt.full_scan) why << "logtable mount not a full scan at " << nb << "; ";
    if (tr.full_scan) why << "tree mount fell back to full scan at " << nb << "; ";
    if (ck.full_scan) why << "clean checkpoint mount fell back to full scan at " << nb << "; ";
    if (!ku.full_scan) why << "unclean checkpoint mount skipped the scan at " << nb << "; ";
    if (ck.pages_read * 20 > lt.pages_read)
      why << "checkpoint restore read > 5% of the scan at " << nb << " (" << ck.pages_read << "/"
          << lt.pages_read << "); ";
    if (ku.pages_read != uint64_t(nb) * g.pages_per_block)
      why << "unclean checkpoint mount read " << ku.pages_read << " pages at " << nb
          << ", expected the full " << uint64_t(nb) * g.pages_per_block << "; ";
  }

  ScalingFit lt_fit = classify_scaling(lt_pts);
  ScalingFit tr_fit = classify_scaling(tr_pts);
  if (lt_fit.cls != ScalingClass::Linear || lt_fit.r2_linear < 0.99)
    why << "logtable fit " << scaling_class_name(lt_fit.cls) << " r2_linear=" << lt_fit.r2_linear
        << "; ";
  if (tr_fit.cls != ScalingClass::Logarithmic || tr_fit.r2_log < 0.95 ||
      tr_fit.r2_log <= tr_fit.r2_linear)
    why << "tree fit " << scaling_class_name(tr_fit.cls) << " r2_log=" << tr_fit.r2_log
        << " r2_linear=" << tr_fit.r2_linear << "; ";

  std::string w = why.str();
  if (!w.empty()) return {false, w};
  return {true, fmt("logtable linear r2=%.5f, tree logarithmic r2=%.5f, checkpoint <=5%% of scan "
                    "when clean and exactly the scan when not",
                    lt_fit.r2_linear, tr_fit.r2_log)};
}

// 4. Wear leveling on a 64 MB device: bounded spread with WL on, at least a
// 4x wider spread with it off, same seed and workload.
Result c4_wear_leveling() {
  Experiment e;
  e.kind = ExperimentKind::Wear;
  e.variant = Variant::LogTable;
  e.geometry.num_blocks = 512;  // 512 x 64 x 2048 = 64 MB
  e.wear_ops = 100000;
  e.working_set_files = 10;
  e.seed = 2;

  e.wl_enabled = true;
  uint64_t on = run_wear(e).wear_series.back().spread;
  e.wl_enabled = false;
  uint64_t off = run_wear(e).wear_series.back().spread;

  FormatOptions defaults;
  uint64_t bound = defaults.wl_threshold + 1;
  bool ok = on <= bound && off >= 4 * on;
  return {ok, fmt("final spread %llu with WL (bound %llu), %llu without (needed >= %llu)",
                  (unsigned long long)on, (unsigned long long)bound, (unsigned long long)off,
                  (unsigned long long)(4 * on))};
}

// 5. Compression: an 8 MB zero file costs the compressing variants at most a
// quarter of the raw store's pages; random data stays within 10% of it.
Result c5_compression() {
  Experiment e;
  e.kind = ExperimentKind::Compression;
  e.seed = 3;
  e.compression_profiles = {ContentProfile::Zeros, ContentProfile::Random};
  Report r = run_compression(e);

  auto pages = [&](Variant v, ContentProfile p) -> uint64_t {
    for (const auto& row : r.compression_rows)
      if (row.variant == v && row.profile == p) return row.pages_written;
    return UINT64_MAX;
  };
  uint64_t ck_z = pages(Variant::Checkpoint, ContentProfile::Zeros);
  uint64_t ck_r = pages(Variant::Checkpoint, ContentProfile::Random);
  uint64_t lt_z = pages(Variant::LogTable, ContentProfile::Zeros);
  uint64_t lt_r = pages(Variant::LogTable, ContentProfile::Random);
  uint64_t tr_z = pages(Variant::Tree, ContentProfile::Zeros);
  uint64_t tr_r = pages(Variant::Tree, ContentProfile::Random);

  auto within10 = [&](uint64_t a, uint64_t b) {
    uint64_t d = a > b ? a - b : b - a;
    return d * 10 <= b;
  };
  bool ok = lt_z * 4 <= ck_z && tr_z * 4 <= ck_z && within10(lt_r, ck_r) && within10(tr_r, ck_r);
  return {ok, fmt("zeros: %llu/%llu/%llu pages (logtable/tree/raw); random: %llu/%llu/%llu",
                  (unsigned long long)lt_z, (unsigned long long)tr_z, (unsigned long long)ck_z,
                  (unsigned long long)lt_r, (unsigned long long)tr_r, (unsigned long long)ck_r)};
}

// 6. Metadata search over a 1000-file directory: the RAM-resident index
// answers without touching flash, the on-flash tree cannot once its cache is
// cold. Both counts are part of the report line.
Result c6_metadata_search() {
  TreeSpec spec;
  spec.files_per_dir = Distribution::constant(1000);
  spec.dirs_per_dir = Distribution::constant(0);
  spec.depth = 1;
  spec.file_size = Distribution::constant(64);
  spec.content = ContentProfile::TextLike;
  spec.seed = 6;
  TreeManifest manifest = generate(spec);

  auto run = [&](Variant v, bool flush) -> std::pair<uint64_t, uint64_t> {
    FlashDevice dev(geom(256), 6);
    format(dev, v);
    auto [fs, ms] = mount(dev, v);
    (void)ms;
    apply(*fs, manifest, spec);
    if (flush) fs->flush_node_cache();
    TraceCounters before = dev.counters();
    auto walk = find_walk(*fs, manifest, "f*");
    TraceCounters after = dev.counters();
    fs->unmount(false);
    return {walk.hits, after.page_reads - before.page_reads};
  };

  auto [ck_hits, ck_reads] = run(Variant::Checkpoint, false);
  auto [tr_hits, tr_reads] = run(Variant::Tree, true);
  bool ok = ck_hits == 1000 && tr_hits == 1000 && ck_reads == 0 && tr_reads >= 1;
  return {ok, fmt("1000-file walk: checkpoint %llu page reads, tree %llu page reads (cold cache)",
                  (unsigned long long)ck_reads, (unsigned long long)tr_reads)};
}

// 7. RAM model: the table index grows linearly with file count; the tree
// variant's cache stays bounded by its configured capacity throughout.
Result c7_ram_model() {
  const std::vector<uint64_t> ns = {100, 200, 400, 800, 1600};
  std::vector<uint8_t> chunk(400, 0x5A);

  std::vector<ScalingPoint> pts;
  for (uint64_t n : ns) {
    FlashDevice dev(geom(512), 7);
    format(dev, Variant::LogTable);
    auto [fs, ms] = mount(dev, Variant::LogTable);
    (void)ms;
    for (uint64_t i = 0; i < n; ++i) {
      std::string path = "/f" + std::to_string(i);
      fs->create_file(path);
      fs->write_file(path, 0, chunk);
    }
    pts.push_back({n, double(fs->ram_units())});
    fs->unmount(false);
  }
  ScalingFit fit = classify_scaling(pts);

  FormatOptions defaults;
  uint64_t cap = defaults.cache_capacity;
  uint64_t worst = 0;
  for (uint64_t n : ns) {
    FlashDevice dev(geom(512), 7);
    format(dev, Variant::Tree);
    auto [fs, ms] = mount(dev, Variant::Tree);
    (void)ms;
    for (uint64_t i = 0; i < n; ++i) {
      std::string path = "/f" + std::to_string(i);
      fs->create_file(path);
      fs->write_file(path, 0, chunk);
      worst = std::max(worst, fs->ram_units());
    }
    worst = std::max(worst, fs->ram_units());
    fs->unmount(false);
  }

  bool ok = fit.cls == ScalingClass::Linear && fit.r2_linear >= 0.99 && worst <= cap;
  return {ok, fmt("table index linear r2=%.5f over n=100..1600; tree cache peak %llu of %llu",
                  fit.r2_linear, (unsigned long long)worst, (unsigned long long)cap)};
}

// 8. Crash sweep: a power loss at every flash-op index of a 100-op workload.
// The tree variant must recover a committed prefix every time without a
// scan; the checkpoint variant must fall back to the full scan every time.
Result c8_crash_sweep() {
  Experiment e;
  e.kind = ExperimentKind::CrashSweep;
  e.geometry = geom(64);
  e.crash_workload_ops = 100;
  e.seed = 4;

  e.variant = Variant::Tree;
  Report tr = run_crash_sweep(e);
  uint64_t tr_bad = 0;
  for (const auto& p : tr.crash_points)
    if (!p.consistent || p.full_scan) ++tr_bad;

  e.variant = Variant::Checkpoint;
  Report ck = run_crash_sweep(e);
  uint64_t ck_bad = 0;
  for (const auto& p : ck.crash_points)
    if (!p.consistent || !p.full_scan) ++ck_bad;

  bool ok = !tr.crash_points.empty() && !ck.crash_points.empty() && tr_bad == 0 && ck_bad == 0;
  return {ok, fmt("tree: %zu crash points, %llu failures; checkpoint: %zu crash points, "
                  "%llu failures",
                  tr.crash_points.size(), (unsigned long long)tr_bad, ck.crash_points.size(),
                  (unsigned long long)ck_bad)};
}

// 9. Determinism: re-running any experiment kind with the same config and
// seed yields byte-identical reports in both formats.
Result c9_determinism() {
  std::vector<Experiment> exps;
  {
    Experiment e;
    e.kind = ExperimentKind::MountScaling;
    e.block_sweep = {32, 64, 128, 256};
    e.fill_fraction = 0.25;
    e.geometry = geom(32);
    exps.push_back(e);
  }
  {
    Experiment e;
    e.kind = ExperimentKind::Wear;
    e.geometry = geom(64);
    e.wear_ops = 300;
    e.working_set_files = 3;
    exps.push_back(e);
  }
  {
    Experiment e;
    e.kind = ExperimentKind::Compression;
    e.geometry = geom(128);
    e.compression_size_bytes = 48 * 1024;
    exps.push_back(e);
  }
  {
    Experiment e;
    e.kind = ExperimentKind::FileTree;
    e.variant = Variant::Tree;
    e.geometry = geom(64);
    e.tree_spec.dirs_per_dir = Distribution::constant(1);
    e.tree_spec.files_per_dir = Distribution::constant(3);
    e.tree_spec.depth = 2;
    e.tree_spec.file_size = Distribution::uniform_int(0, 800);
    exps.push_back(e);
  }
  {
    Experiment e;
    e.kind = ExperimentKind::CrashSweep;
    e.variant = Variant::Tree;
    e.geometry = geom(32);
    e.crash_workload_ops = 8;
    exps.push_back(e);
  }

  for (const auto& e : exps) {
    Report a = run_experiment(e);
    Report b = run_experiment(e);
    if (a.to_json() != b.to_json() || a.to_csv() != b.to_csv())
      return {false, std::string("rerun of ") + experiment_kind_name(e.kind) + " diverged"};
  }
  return {true, fmt("%zu experiment kinds, byte-identical reports on rerun", exps.size())};
}

}  // namespace

int main() {
  struct Row {
    const char* name;
    double budget_s;  // 0 = no budget
    Result (*fn)();
  };
  const Row rows[] = {
      {"erase-before-write fuzz", 10, c1_erase_before_write},
      {"reference-model equivalence", 120, c2_reference_equivalence},
      {"mount scaling", 60, c3_mount_scaling},
      {"wear leveling", 60, c4_wear_leveling},
      {"compression", 30, c5_compression},
      {"metadata search", 0, c6_metadata_search},
      {"ram model", 0, c7_ram_model},
      {"crash sweep", 120, c8_crash_sweep},
      {"determinism", 0, c9_determinism},
  };

  int fails = 0;
  int i = 0;
  for (const Row& row : rows) {
    ++i;
    auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = row.fn();
    } catch (const std::exception& e) {
      r = {false, std::string("unexpected exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_budget = row.budget_s == 0 || secs < row.budget_s;
    bool pass = r.ok && in_budget;
    if (!pass) ++fails;
    std::string timing = row.budget_s == 0 ? fmt("%.1fs", secs)
                                           : fmt("%.1fs of %.0fs", secs, row.budget_s);
    printf("criterion %d/9 %-28s %s  (%s) %s%s\n", i, row.name, pass ? "PASS" : "FAIL",
           timing.c_str(), r.detail.c_str(), (r.ok && !in_budget) ? " [over budget]" : "");
    fflush(stdout);
  }
  printf("%d/9 criteria passed\n", 9 - fails);
  return fails;
}
