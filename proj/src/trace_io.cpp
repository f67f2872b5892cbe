#include "gapfilter/trace_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

namespace gapfilter {

namespace {

constexpr std::array<char, 4> kMagic{'G', 'F', 'T', 'R'};
constexpr char kHex[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <typename T>
bool parse_int(std::string_view token, T& out) {
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 24)};
  os.write(b, 4);
}

// Returns false on clean EOF before the first byte; throws on a short read.
bool get_bytes(std::istream& is, char* dst, std::size_t n, bool eof_ok) {
  is.read(dst, static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(is.gcount());
  if (got == n) return true;
  if (got == 0 && eof_ok) return false;
  throw FormatError("truncated binary trace record", 0);
}

std::uint32_t le32(const char* b) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[3])) << 24;
}

std::uint16_t le16(const char* b) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                    static_cast<unsigned char>(b[1]) << 8);
}

}  // namespace

std::string encode_fid(std::string_view fid) {
  std::string out = "0x";
  out.reserve(2 + 2 * fid.size());
  for (unsigned char c : fid) {
    out.push_back(kHex[c >> 4]);
    out.push_back(kHex[c & 0xf]);
  }
  return out;
}

std::string decode_fid(std::string_view token) {
  if (token.size() < 2 || token[0] != '0' || (token[1] != 'x' && token[1] != 'X')) {
    return std::string(token);
  }
  token.remove_prefix(2);
  if (token.size() % 2 != 0) throw std::invalid_argument("odd-length hex flow id");
  std::string out(token.size() / 2, '\0');
  for (std::size_t i = 0; i < out.size(); ++i) {
    const int hi = hex_value(token[2 * i]);
    const int lo = hex_value(token[2 * i + 1]);
    if (hi < 0 || lo < 0) throw std::invalid_argument("invalid hex digit in flow id");
    out[i] = static_cast<char>(hi << 4 | lo);
  }
  return out;
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  std::vector<std::string> encoded(trace.flow_count());
  for (std::uint32_t f = 0; f < trace.flow_count(); ++f) encoded[f] = encode_fid(trace.fid(f));
  os << "fid,seq\n";
  for (const auto& r : trace.records()) os << encoded[r.flow] << ',' << r.seq << '\n';
  if (!os) throw IoError("failed writing trace CSV");
}

Trace read_trace_csv(std::istream& is, unsigned seq_width) {
  Trace trace(seq_width);
  const std::uint64_t mask = seq_mask(seq_width);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (view == "fid,seq") continue;
      throw FormatError("expected header 'fid,seq'", lineno);
    }
    const auto fields = split(view);
    if (fields.size() != 2) throw FormatError("expected 2 fields 'fid,seq'", lineno);
    if (fields[0].empty()) throw FormatError("empty flow id", lineno);
    std::uint64_t seq = 0;
    if (!parse_int(fields[1], seq)) throw FormatError("invalid sequence number", lineno);
    if (seq > mask) {
      throw FormatError("sequence number exceeds " + std::to_string(seq_width) + " bits", lineno);
    }
    std::string fid;
    try {
      fid = decode_fid(fields[0]);
    } catch (const std::invalid_argument& e) {
      throw FormatError(e.what(), lineno);
    }
    if (fid.empty()) throw FormatError("empty flow id", lineno);
    trace.push(fid, static_cast<Seq>(seq));
  }
  if (is.bad()) throw IoError("failed reading trace CSV");
  return trace;
}

void write_trace_binary(std::ostream& os, const Trace& trace) {
  os.write(kMagic.data(), kMagic.size());
  put_u16(os, kBinaryTraceVersion);
  os.put(static_cast<char>(trace.seq_width()));
  for (const auto& r : trace.records()) {
    const std::string_view fid = trace.fid(r.flow);
    put_u16(os, static_cast<std::uint16_t>(fid.size()));
    os.write(fid.data(), static_cast<std::streamsize>(fid.size()));
    put_u32(os, r.seq);
  }
  if (!os) throw IoError("failed writing binary trace");
}

Trace read_trace_binary(std::istream& is) {
  char header[7];
  if (!get_bytes(is, header, sizeof header, true)) throw FormatError("empty binary trace", 0);
  if (!std::equal(kMagic.begin(), kMagic.end(), header)) {
    throw FormatError("bad magic, expected GFTR", 0);
  }
  if (le16(header + 4) != kBinaryTraceVersion) {
    throw FormatError("unsupported binary trace version " + std::to_string(le16(header + 4)), 0);
  }
  const auto width = static_cast<unsigned>(static_cast<unsigned char>(header[6]));
  if (width < 8 || width > 32) throw FormatError("invalid seq_width in header", 0);
  const std::uint64_t mask = seq_mask(width);

  Trace trace(width);
  std::string fid;
  char buf[4];
  while (get_bytes(is, buf, 2, true)) {
    const std::uint16_t len = le16(buf);
    if (len == 0) throw FormatError("record " + std::to_string(trace.size()) + ": empty flow id", 0);
    fid.resize(len);
    get_bytes(is, fid.data(), len, false);
    get_bytes(is, buf, 4, false);
    const std::uint32_t seq = le32(buf);
    if (seq > mask) {
      throw FormatError("record " + std::to_string(trace.size()) + ": sequence number exceeds " +
                            std::to_string(width) + " bits",
                        0);
    }
    trace.push(fid, seq);
  }
  if (is.bad()) throw IoError("failed reading binary trace");
  return trace;
}

void save_trace(const std::filesystem::path& path, const Trace& trace, TraceFormat format) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  if (format == TraceFormat::csv) {
    write_trace_csv(os, trace);
  } else {
    write_trace_binary(os, trace);
  }
  os.flush();
  if (!os) throw IoError("failed writing " + path.string());
}

Trace load_trace(const std::filesystem::path& path, unsigned seq_width,
                 std::optional<TraceFormat> format) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  if (!format) {
    char probe[4] = {};
    is.read(probe, 4);
    const bool binary = is.gcount() == 4 && std::equal(kMagic.begin(), kMagic.end(), probe);
    format = binary ? TraceFormat::binary : TraceFormat::csv;
    is.clear();
    is.seekg(0);
  }
  return *format == TraceFormat::binary ? read_trace_binary(is) : read_trace_csv(is, seq_width);
}

void write_reports_csv(std::ostream& os, std::span<const GapReport> reports) {
  os << "pos,var,seq_before,seq_after,bucket,cell\n";
  for (const GapReport& r : reports) {
    os << r.stream_position << ',' << r.var << ',' << r.seq_before << ',' << r.seq_after << ','
       << r.bucket_index << ',' << r.cell_index << '\n';
  }
  if (!os) throw IoError("failed writing reports CSV");
}

std::vector<GapReport> read_reports_csv(std::istream& is) {
  std::vector<GapReport> reports;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string_view view = trim_cr(line);
    if (view.empty()) continue;
    if (!header_seen) {
      header_seen = true;
      if (view == "pos,var,seq_before,seq_after,bucket,cell") continue;
      throw FormatError("expected header 'pos,var,seq_before,seq_after,bucket,cell'", lineno);
    }
    const auto f = split(view);
    if (f.size() != 6) throw FormatError("expected 6 fields", lineno);
    GapReport r;
    if (!parse_int(f[0], r.stream_position) || !parse_int(f[1], r.var) ||
        !parse_int(f[2], r.seq_before) || !parse_int(f[3], r.seq_after) ||
        !parse_int(f[4], r.bucket_index) || !parse_int(f[5], r.cell_index)) {
      throw FormatError("invalid integer field", lineno);
    }
    reports.push_back(r);
  }
  if (is.bad()) throw IoError("failed reading reports CSV");
  return reports;
}

void write_bursts_csv(std::ostream& os, const Trace& trace, std::span<const InjectedBurst> bursts) {
  os << "fid,start_seq,length\n";
  for (const InjectedBurst& b : bursts) {
    os << encode_fid(trace.fid(b.flow)) << ',' << b.start_seq << ',' << b.length << '\n';
  }
  if (!os) throw IoError("failed writing burst log");
}

}  // namespace gapfilter
