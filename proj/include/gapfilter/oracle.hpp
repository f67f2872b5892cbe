#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gapfilter/core.hpp"
#include "gapfilter/trace.hpp"

namespace gapfilter {

/// Exact gap detector with one unbounded entry per flow. It applies the
/// same randomization as the sketches so reported seq values line up.
///
/// A not-matched variation resets the flow's stored value, mirroring how a
/// sketch re-inserts the flow; a matched one follows the max rule.
class IdealDetector {
 public:
  IdealDetector(const Thresholds& th, const HashConfig& hash) : th_(th), hash_(hash) {}

  std::optional<GapReport> observe(const Item& item, std::uint64_t pos);

  std::size_t flows() const noexcept { return state_.size(); }

 private:
  Thresholds th_;
  HashConfig hash_;
  std::unordered_map<std::string, Seq> state_;
};

/// Ground-truth major gaps of a whole trace.
std::vector<GapReport> oracle_run(const Trace& trace, const Thresholds& th, const HashConfig& hash);

struct EvalResult {
  std::uint64_t reported = 0;
  std::uint64_t correct = 0;
  std::uint64_t truth = 0;  // correct instances (CI)
  std::uint64_t nri = 0;    // not-reported instances: truth - correct
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// Scores detector reports against ground truth. A report counts as
/// correct when a truth event with the same stream position and variation
/// is still unconsumed. If `trace_size` is given, any position at or beyond
/// it raises std::invalid_argument.
EvalResult score(std::span<const GapReport> reports, std::span<const GapReport> truth,
                 std::optional<std::size_t> trace_size = std::nullopt);

}  // namespace gapfilter
