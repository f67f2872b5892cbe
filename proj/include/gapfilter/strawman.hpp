#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "gapfilter/core.hpp"

namespace gapfilter {

struct CuckooConfig {
  std::size_t buckets_per_block = 512;
  std::size_t cells_per_bucket = 4;
  std::size_t max_turns = 8;
  Thresholds th;
  HashConfig hash;
};

/// Cuckoo-filter-style baseline: every cell stores an explicit 32-bit flow
/// fingerprint next to the sequence number. The table is split into two
/// equally sized blocks; fingerprint fp may live in block one at h1(fp) or
/// block two at h2(fp). Insertion into two full buckets relocates random
/// residents for at most `max_turns` kicks, after which the entry still
/// without a home is dropped and counted.
class CuckooBaseline {
 public:
  explicit CuckooBaseline(const CuckooConfig& cfg);

  /// Splits the budget evenly across both blocks:
  /// buckets_per_block = budget / (2 * cells * (4 + ceil(seq_width / 8))).
  static CuckooBaseline from_budget(std::size_t budget_bytes, const Thresholds& th,
                                    const HashConfig& hash, std::size_t cells_per_bucket = 4,
                                    std::size_t max_turns = 8);

  static std::size_t cell_bytes(const Thresholds& th) noexcept {
    return 4 + bytes_for_bits(th.seq_width());
  }

  std::optional<GapReport> observe(const Item& item, std::uint64_t pos);

  struct Entry {
    std::uint32_t fp = 0;
    Seq seq = 0;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::uint32_t flow_fingerprint(std::string_view fid) const noexcept;
  /// Candidate bucket of `fp` in block 0 or 1.
  std::size_t candidate(std::uint32_t fp, int block) const noexcept;

  /// Occupied entries of one bucket in cell order.
  std::vector<Entry> snapshot(int block, std::size_t bucket) const;

  std::uint64_t drops() const noexcept { return drops_; }
  std::uint64_t kicks() const noexcept { return kicks_; }
  std::size_t occupancy() const noexcept { return occupied_; }
  std::size_t capacity() const noexcept { return slots_.size(); }
  std::size_t memory_bytes() const noexcept { return capacity() * cell_bytes(cfg_.th); }
  const CuckooConfig& config() const noexcept { return cfg_; }

 private:
  struct Slot {
    Entry entry;
    bool used = false;
  };

  Slot* bucket_ptr(int block, std::size_t bucket) noexcept {
    return slots_.data() + (static_cast<std::size_t>(block) * cfg_.buckets_per_block + bucket) *
                               cfg_.cells_per_bucket;
  }
  bool try_place(int block, std::size_t bucket, const Entry& e) noexcept;
  void insert(Entry e);

  CuckooConfig cfg_;
  std::uint64_t seed_h1_;
  std::uint64_t seed_h2_;
  std::vector<Slot> slots_;
  std::mt19937_64 rng_;
  std::uint64_t drops_ = 0;
  std::uint64_t kicks_ = 0;
  std::size_t occupied_ = 0;
};

}  // namespace gapfilter
