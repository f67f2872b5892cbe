#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gapfilter/core.hpp"

namespace gapfilter {

struct SoConfig {
  std::size_t buckets = 1024;  // d
  std::size_t cells = 8;       // w
  Thresholds th;
  HashConfig hash;
  /// Whether a neglect-class match moves its cell to the front.
  bool refresh_on_neglect = true;
};

/// Speed-oriented gap filter.
///
/// Each bucket is a most-recently-used-first list of up to `cells` stored
/// sequence numbers; occupied cells sit contiguously at the front. An item is
/// matched to the stored value closest to its own (similarity absorption), so
/// no flow id is kept. Not thread-safe: one writer per instance.
class SoSketch {
 public:
  explicit SoSketch(const SoConfig& cfg);

  /// Sizes the table from a memory budget: d = budget / (w * cell_bytes).
  /// Throws std::invalid_argument if the budget cannot hold one bucket.
  static SoSketch from_budget(std::size_t budget_bytes, std::size_t cells, const Thresholds& th,
                              const HashConfig& hash, bool refresh_on_neglect = true);

  static std::size_t cell_bytes(const Thresholds& th) noexcept {
    return bytes_for_bits(th.seq_width());
  }

  std::optional<GapReport> observe(const Item& item, std::uint64_t pos);

  /// Stored values of one bucket, front (most recent) to back.
  std::vector<Seq> snapshot(std::size_t bucket) const;

  std::size_t buckets() const noexcept { return cfg_.buckets; }
  std::size_t cells_per_bucket() const noexcept { return cfg_.cells; }
  /// Logical table size: d * w * cell_bytes.
  std::size_t memory_bytes() const noexcept {
    return cfg_.buckets * cfg_.cells * cell_bytes(cfg_.th);
  }
  const SoConfig& config() const noexcept { return cfg_; }

 private:
  SoConfig cfg_;
  std::size_t stride_ = 0;  // cells per bucket rounded up for vector scans
  std::uint32_t mask_ = 0;
  std::uint32_t half_ = 0;
  bool vector_scan_ = false;
  std::vector<Seq> cells_;
  std::vector<std::uint8_t> occupancy_;
};

}  // namespace gapfilter
