#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gapfilter/core.hpp"

namespace gapfilter {

struct AoCell {
  Seq seq = 0;
  std::uint16_t fp = 0;

  friend bool operator==(const AoCell&, const AoCell&) = default;
};

struct AoConfig {
  std::size_t buckets = 1024;  // d
  std::size_t civilians = 5;   // c
  std::size_t suspects = 3;    // s
  Thresholds th;
  HashConfig hash;  // hash.fp_bits is the fingerprint length
  /// Whether a neglect-class match in the civilian region refreshes its LRU slot.
  bool refresh_on_neglect = true;
};

struct AoBucketView {
  std::vector<AoCell> suspect;   // front = most recently disrupted
  std::vector<AoCell> civilian;  // front = most recently used
};

/// Accuracy-oriented gap filter.
///
/// Every bucket holds `suspects` cells ordered least-recently-disrupted last
/// and `civilians` cells ordered least-recently-used last. Unknown flows
/// enter the suspect region at its lowest priority; a flow exhibiting a major
/// gap jumps to the suspect front; suspects squeezed out drop to the
/// civilian front, and civilians squeezed out are discarded. Cells carry an
/// l_f-bit fingerprint that must agree before sequence matching.
///
/// Invariant: a non-empty civilian region implies a full suspect region.
class AoSketch {
 public:
  explicit AoSketch(const AoConfig& cfg);

  /// d = budget / ((c + s) * ceil((seq_width + l_f) / 8)).
  static AoSketch from_budget(std::size_t budget_bytes, std::size_t civilians, std::size_t suspects,
                              const Thresholds& th, const HashConfig& hash,
                              bool refresh_on_neglect = true);

  static std::size_t cell_bytes(const Thresholds& th, const HashConfig& hash) noexcept {
    return bytes_for_bits(th.seq_width() + hash.fp_bits);
  }

  std::optional<GapReport> observe(const Item& item, std::uint64_t pos);

  AoBucketView snapshot(std::size_t bucket) const;

  std::size_t buckets() const noexcept { return cfg_.buckets; }
  std::size_t memory_bytes() const noexcept {
    return cfg_.buckets * width_ * cell_bytes(cfg_.th, cfg_.hash);
  }
  const AoConfig& config() const noexcept { return cfg_; }

 private:
  struct Counts {
    std::uint8_t suspect = 0;
    std::uint8_t civilian = 0;
  };

  // Bucket layout: [suspect 0..s) [civilian 0..c)
  AoCell* suspect_of(std::size_t b) noexcept { return cells_.data() + b * stride_; }
  AoCell* civilian_of(std::size_t b) noexcept { return cells_.data() + b * stride_ + cfg_.suspects; }

  void push_civilian_front(AoCell* civ, Counts& n, const AoCell& cell) noexcept;

  AoConfig cfg_;
  std::size_t width_;
  std::size_t stride_;  // width_ rounded up for vector scans
  bool vector_scan_ = false;
  std::vector<AoCell> cells_;
  std::vector<Counts> counts_;
};

}  // namespace gapfilter
