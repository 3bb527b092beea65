#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ffsim/fs.hpp"
#include "ffsim/treegen.hpp"

namespace ffsim {

enum class ScalingClass : uint8_t { Constant, Linear, Logarithmic, Ambiguous };

const char* scaling_class_name(ScalingClass c);

struct ScalingFit {
  ScalingClass cls;
  double r2_linear;
  double r2_log;
};

struct ScalingPoint {
  uint64_t n;     // swept size
  double cost;    // measured cost in op counts or op-count time
};

// Needs >= 4 points (NeedFourPoints otherwise). CONSTANT when max/min < 1.1,
// else the better OLS fit of cost against n / ln n wins; fits closer than
// 0.01 in R^2 are AMBIGUOUS.
ScalingFit classify_scaling(const std::vector<ScalingPoint>& series);

enum class ExperimentKind : uint8_t { MountScaling, Wear, Compression, FileTree, CrashSweep };

const char* experiment_kind_name(ExperimentKind k);

struct Experiment {
  ExperimentKind kind = ExperimentKind::MountScaling;
  Variant variant = Variant::LogTable;
  uint64_t seed = 1;
  uint32_t repetitions = 1;

  // Geometry shared by all runs; mount scaling overrides num_blocks per point.
  FlashGeometry geometry;
  bool wl_enabled = true;

  std::vector<uint32_t> block_sweep = {256, 512, 1024, 2048, 4096};
  double fill_fraction = 0.5;

  uint64_t wear_ops = 100000;
  uint32_t working_set_files = 10;

  uint64_t compression_size_bytes = 8 * 1024 * 1024;
  std::vector<ContentProfile> compression_profiles = {ContentProfile::Zeros,
                                                      ContentProfile::Random,
                                                      ContentProfile::TextLike};

  TreeSpec tree_spec;
  uint32_t crash_workload_ops = 100;

  std::string to_json() const;
  static Experiment from_json(const std::string& text);
};

struct MountScalingRow {
  uint32_t num_blocks;
  uint64_t pages_read;
  uint64_t simulated_time_us;
  bool full_scan;
};

struct WearSample {
  uint64_t op_index;
  uint64_t spread;
};

struct CompressionRow {
  Variant variant;
  ContentProfile profile;
  uint64_t pages_written;
  uint64_t simulated_time_us;
};

struct FileTreePhase {
  std::string phase;  // create | find | delete
  uint64_t ops;
  uint64_t pages_read;
  uint64_t pages_written;
  uint64_t block_erases;
  uint64_t simulated_time_us;
};

struct CrashPoint {
  uint64_t crash_index;
  uint64_t recovered_prefix;  // reference ops visible after remount
  bool full_scan;
  bool consistent;
};

// One report shape for every experiment; unused sections stay empty so the
// serialized schema is stable.
struct Report {
  Experiment experiment;
  std::vector<MountScalingRow> mount_rows;
  ScalingFit fit{ScalingClass::Ambiguous, 0.0, 0.0};
  bool has_fit = false;
  std::vector<WearSample> wear_series;
  std::vector<CompressionRow> compression_rows;
  std::vector<FileTreePhase> tree_phases;
  std::vector<CrashPoint> crash_points;
  TraceCounters counters;

  std::string to_json() const;
  std::string to_csv() const;
};

Report run_mount_scaling(const Experiment& exp);
Report run_wear(const Experiment& exp);
Report run_compression(const Experiment& exp);
Report run_file_tree(const Experiment& exp);
Report run_crash_sweep(const Experiment& exp);
Report run_experiment(const Experiment& exp);

enum class ReportFormat : uint8_t { Json, Csv };

void write_report(const Report& report, const std::string& path, ReportFormat format);

// Single mount measurement used by the scaling experiment and tests:
// format, fill to fill_fraction with size-scaled random files, unmount
// (clean or not), remount, and report the remount stats.
MountStats measure_mount(Variant variant, const FlashGeometry& geom, double fill_fraction,
                         uint64_t seed, bool clean_unmount);

}  // namespace ffsim
