#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gapfilter/core.hpp"
#include "gapfilter/trace.hpp"
#include "gapfilter/tracegen.hpp"

namespace gapfilter {

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input. `line()` is 1-based for text formats and 0 for binary.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

enum class TraceFormat { csv, binary };

// Trace CSV: header `fid,seq`. A fid written as 0x<hex> is decoded to raw
// bytes; any other token (e.g. a decimal id) is taken verbatim.
void write_trace_csv(std::ostream& os, const Trace& trace);
Trace read_trace_csv(std::istream& is, unsigned seq_width = 16);

// Binary trace: "GFTR", u16 version, u8 seq_width, then records of
// [u16 fid_len][fid bytes][u32 seq], all little-endian.
inline constexpr std::uint16_t kBinaryTraceVersion = 1;
void write_trace_binary(std::ostream& os, const Trace& trace);
Trace read_trace_binary(std::istream& is);

void save_trace(const std::filesystem::path& path, const Trace& trace, TraceFormat format);
/// Detects the format from the magic bytes unless `format` is given.
/// `seq_width` applies to CSV input only; binary files carry their own.
Trace load_trace(const std::filesystem::path& path, unsigned seq_width = 16,
                 std::optional<TraceFormat> format = std::nullopt);

// Reports CSV: header `pos,var,seq_before,seq_after,bucket,cell`.
void write_reports_csv(std::ostream& os, std::span<const GapReport> reports);
std::vector<GapReport> read_reports_csv(std::istream& is);

// Burst log CSV: header `fid,start_seq,length`.
void write_bursts_csv(std::ostream& os, const Trace& trace, std::span<const InjectedBurst> bursts);

std::string encode_fid(std::string_view fid);
std::string decode_fid(std::string_view token);

}  // namespace gapfilter
