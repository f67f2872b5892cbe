#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gapfilter/core.hpp"

namespace gapfilter {

/// An in-memory item stream. Flow ids are stored once in a flow table and
/// each record refers to its flow by index, which keeps multi-million-item
/// traces compact.
class Trace {
 public:
  struct Record {
    std::uint32_t flow = 0;
    Seq seq = 0;
    friend bool operator==(const Record&, const Record&) = default;
  };

  explicit Trace(unsigned seq_width = 16) : seq_width_(seq_width) {}

  /// Returns the index of `fid`, adding it to the flow table if new.
  std::uint32_t intern(std::string_view fid);
  /// Index of `fid`, or -1 if unknown.
  std::int64_t find_flow(std::string_view fid) const;

  void push(std::uint32_t flow, Seq seq) { records_.push_back({flow, seq}); }
  void push(std::string_view fid, Seq seq) { push(intern(fid), seq); }
  void reserve(std::size_t n) { records_.reserve(n); }

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  Item operator[](std::size_t i) const noexcept {
    const Record& r = records_[i];
    return Item{flows_[r.flow], r.seq};
  }

  std::size_t flow_count() const noexcept { return flows_.size(); }
  std::string_view fid(std::uint32_t flow) const noexcept { return flows_[flow]; }
  const std::vector<Record>& records() const noexcept { return records_; }
  unsigned seq_width() const noexcept { return seq_width_; }

  /// Same item sequence (fid bytes and seqs), regardless of flow-table order.
  bool same_items(const Trace& other) const;

 private:
  unsigned seq_width_;
  std::vector<std::string> flows_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<Record> records_;
};

}  // namespace gapfilter
