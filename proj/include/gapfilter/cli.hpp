#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "gapfilter/ao_filter.hpp"
#include "gapfilter/core.hpp"
#include "gapfilter/oracle.hpp"
#include "gapfilter/so_filter.hpp"
#include "gapfilter/strawman.hpp"
#include "gapfilter/trace.hpp"
#include "gapfilter/trace_io.hpp"
#include "gapfilter/tracegen.hpp"

namespace gapfilter::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitValidation = 3;

inline constexpr std::uint64_t kDefaultSeed = 1;

/// Seed from GAPFILTER_SEED when set and parseable, else kDefaultSeed.
std::uint64_t default_seed();

enum class DetectorKind { so, ao, strawman, oracle };

const char* to_string(DetectorKind kind) noexcept;
DetectorKind parse_detector(const std::string& name);

struct RunConfig {
  DetectorKind detector = DetectorKind::so;
  std::size_t memory_bytes = 64 * 1024;
  std::optional<std::size_t> buckets;  // overrides memory_bytes when set
  std::size_t w = 8;
  std::size_t c = 5;
  std::size_t s = 3;
  unsigned lf = 8;
  std::int64_t t1 = 5;
  std::int64_t t2 = 30;
  unsigned seq_width = 16;
  std::uint64_t seed = kDefaultSeed;
  bool randomize = true;
  bool refresh_on_neglect = true;
  std::size_t cuckoo_cells = 4;
  std::size_t max_turns = 8;

  Thresholds thresholds() const { return Thresholds(t1, t2, seq_width); }
  /// Fingerprint bits are only meaningful for ao; other detectors get 0.
  HashConfig hash_config() const;
  /// Throws std::invalid_argument on inconsistent fields.
  void validate() const;
};

using AnyDetector = std::variant<SoSketch, AoSketch, CuckooBaseline, IdealDetector>;

AnyDetector make_detector(const RunConfig& cfg);

/// Logical table size in bytes (0 for the unbounded oracle).
std::size_t detector_memory(const AnyDetector& det);
std::uint64_t detector_drops(const AnyDetector& det);

struct RunResult {
  std::vector<GapReport> reports;
  std::size_t items = 0;
  std::uint64_t drops = 0;
  std::size_t memory_bytes = 0;
  double seconds = 0.0;

  double items_per_second() const;
};

/// Streams a trace through a freshly built detector.
RunResult run_trace(const RunConfig& cfg, const Trace& trace);

/// Scores reports against the oracle run over the same trace.
EvalResult evaluate(std::span<const GapReport> reports, const Trace& trace, const RunConfig& cfg);

struct GenerateOptions {
  TraceSpec spec;
  LossModel loss;
  bool apply_loss = true;
  std::optional<double> gap_ratio;  // switches to the gap-ratio generator
  /// (flow index in generation order, raw start seq, length)
  std::vector<std::tuple<std::size_t, Seq, std::uint32_t>> forced;
  std::filesystem::path out;
  std::optional<std::filesystem::path> bursts_out;
  TraceFormat format = TraceFormat::csv;
};

struct GenerateSummary {
  std::size_t items = 0;
  std::size_t flows = 0;
  std::size_t bursts = 0;
};

/// Writes the trace and, when loss was applied, its burst log.
GenerateSummary cmd_generate(const GenerateOptions& opts);

struct RunOptions {
  RunConfig cfg;
  std::filesystem::path input;
  std::optional<TraceFormat> format;
  std::optional<std::filesystem::path> output;  // reports CSV; stdout summary only when empty
};

RunResult cmd_run(const RunOptions& opts, std::ostream& summary);

struct EvalOptions {
  RunConfig cfg;
  std::filesystem::path reports;
  std::filesystem::path trace;
  std::optional<TraceFormat> format;
  bool csv = false;  // JSON otherwise
  std::optional<std::filesystem::path> annotate;  // reports joined with their fid
};

EvalResult cmd_eval(const EvalOptions& opts, std::ostream& out);

void write_eval_json(std::ostream& os, const EvalResult& r);
void write_eval_csv(std::ostream& os, const EvalResult& r);

struct BenchRow {
  DetectorKind detector = DetectorKind::so;
  double median_items_per_second = 0.0;
  std::vector<double> samples;
};

/// Median throughput of each detector over `repetitions` passes of an
/// in-memory trace.
std::vector<BenchRow> bench(const Trace& trace, const RunConfig& base,
                            const std::vector<DetectorKind>& detectors, std::size_t repetitions);

std::string cpu_model();

enum class SweepParam { w, ratio, lf };

struct SweepRow {
  std::string param;
  std::string value;
  EvalResult result;
};

/// F1 of SO across w, or of AO across suspect:civilian split or fingerprint
/// length, all at the base config's memory budget.
std::vector<SweepRow> sweep(const Trace& trace, const RunConfig& base, SweepParam param,
                            const std::vector<std::string>& values);

std::vector<std::string> default_sweep_values(SweepParam param);
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

struct BoundsOptions {
  std::vector<std::uint64_t> m{2, 4, 8, 16, 32, 64};
  std::vector<std::uint64_t> d{128, 1024, 8192};
  std::vector<double> alpha{1.5, 2.0, 2.5};
  std::vector<double> recall_m{100, 1024, 10000};
  std::uint64_t trials = 100000;
  std::uint64_t seed = kDefaultSeed;
};

void cmd_bounds(const BoundsOptions& opts, std::ostream& out);

}  // namespace gapfilter::cli
