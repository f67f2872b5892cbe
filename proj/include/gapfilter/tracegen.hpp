#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gapfilter/core.hpp"
#include "gapfilter/trace.hpp"

namespace gapfilter {

enum class Interleave { round_robin, shuffle };

/// How often an abnormal flow may start a burst of consecutive loss.
enum class BurstMode {
  per_item,         // every surviving item draws; bursts never overlap
  once_per_window,  // at most one burst per flow per window
};

/// Flow sizes L0 * j^-alpha for the j-th largest flow, floored.
struct ZipfSizes {
  double alpha = 1.5;
  double scale = 1000.0;
};

struct TraceSpec {
  std::size_t n_flows = 100;
  std::size_t flow_length = 100;  // used when `zipf` is empty
  std::optional<ZipfSizes> zipf;
  std::size_t n_windows = 10;
  double abnormal_ratio = 0.1;
  std::uint64_t seed = 1;
  Interleave interleave = Interleave::shuffle;
  unsigned seq_width = 16;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

/// Per-flow item counts; flows that floor to zero are omitted.
std::vector<std::size_t> flow_sizes(const TraceSpec& spec);

/// Deterministic 13-byte pseudo five-tuple for flow `index`.
std::string make_flow_id(std::uint64_t seed, std::uint64_t index);

/// Loss-free stream: flow k carries raw sequence numbers 0, 1, 2, ... (mod
/// 2^seq_width), interleaved per the spec's policy.
Trace gen_clean(const TraceSpec& spec);

/// Forces a burst on the item of `fid` whose sequence number is `start_seq`.
struct ForcedBurst {
  std::string fid;
  Seq start_seq = 0;
  std::uint32_t length = 0;
};

struct LossModel {
  double base = 0.9;         // burst of j items happens with probability base^j
  double single_loss = 0.0;  // independent drop probability p
  Thresholds th;             // burst lengths are uniform in [t1, t2)
  BurstMode mode = BurstMode::per_item;
  bool random_bursts = true;
  std::vector<ForcedBurst> forced;

  void validate() const;
};

struct InjectedBurst {
  std::uint32_t flow = 0;  // index into the lossy trace's flow table
  Seq start_seq = 0;
  std::uint32_t length = 0;

  friend bool operator==(const InjectedBurst&, const InjectedBurst&) = default;
};

struct LossyTrace {
  Trace trace;
  std::vector<InjectedBurst> bursts;
};

/// Applies windowed consecutive loss to abnormal flows and independent
/// single-item loss to everything else. The clean trace's flow table is
/// preserved index-for-index in the result, even for flows that vanish.
LossyTrace apply_loss(const Trace& clean, const LossModel& model, const TraceSpec& spec);

/// A stream in which every flow shares gap ratio `beta`: each item after a
/// flow's first is preceded, with probability beta, by a jump uniform in
/// [t1, t2) instead of +1.
Trace gen_with_gap_ratio(const TraceSpec& spec, double beta, const Thresholds& th);

}  // namespace gapfilter
