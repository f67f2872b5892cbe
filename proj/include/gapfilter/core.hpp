#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string_view>

namespace gapfilter {

using Seq = std::uint32_t;

/// One stream element. `fid` is a non-owning view of the flow-identifier
/// bytes (a five-tuple, a decimal id, ...); the owning trace keeps them alive.
struct Item {
  std::string_view fid;
  Seq seq = 0;
};

/// Detection thresholds together with the width of the sequence space.
///
/// Holds 2 <= t1 < t2 < 2^(seq_width-1) and 8 <= seq_width <= 32. The
/// constructor throws std::invalid_argument on anything else.
class Thresholds {
 public:
  Thresholds() : Thresholds(5, 30, 16) {}
  Thresholds(std::int64_t t1, std::int64_t t2, unsigned seq_width = 16);

  std::int64_t t1() const noexcept { return t1_; }
  std::int64_t t2() const noexcept { return t2_; }
  unsigned seq_width() const noexcept { return seq_width_; }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;

 private:
  std::int64_t t1_;
  std::int64_t t2_;
  unsigned seq_width_;
};

enum class SituationKind : std::uint8_t {
  neglect,
  normal,
  minor_gap,
  major_gap,
  not_matched,
};

struct Situation {
  SituationKind kind = SituationKind::not_matched;
  std::int64_t var = 0;

  bool matched() const noexcept { return kind != SituationKind::not_matched; }
  friend bool operator==(const Situation&, const Situation&) = default;
};

const char* to_string(SituationKind kind) noexcept;

/// A reported major gap. Detectors keep no flow id, so the triggering item is
/// identified by its stream position.
struct GapReport {
  std::uint64_t bucket_index = 0;
  std::uint32_t cell_index = 0;
  Seq seq_after = 0;   // incoming (randomized) sequence number
  Seq seq_before = 0;  // value held by the matched cell
  std::int64_t var = 0;
  std::uint64_t stream_position = 0;

  friend bool operator==(const GapReport&, const GapReport&) = default;
};

/// Seeds for the three hash roles: bucket selection, sequence bias and
/// fingerprint. `fp_bits == 0` disables fingerprinting and `randomize ==
/// false` forces a zero bias.
struct HashConfig {
  std::uint64_t seed_bucket = 0x9e3779b97f4a7c15ULL;
  std::uint64_t seed_bias = 0xc2b2ae3d27d4eb4fULL;
  std::uint64_t seed_fingerprint = 0x165667b19e3779f9ULL;
  unsigned fp_bits = 8;
  bool randomize = true;

  /// Derives three distinct seeds from one master seed.
  static HashConfig from_master_seed(std::uint64_t seed, unsigned fp_bits = 8,
                                     bool randomize = true);

  /// Throws std::invalid_argument if seeds coincide or fp_bits > 16.
  void validate() const;

  friend bool operator==(const HashConfig&, const HashConfig&) = default;
};

/// Low `width` bits set; width < 64.
inline constexpr std::uint64_t seq_mask(unsigned width) noexcept {
  return (std::uint64_t{1} << width) - 1;
}

/// Signed modular difference a - b: the unique v in (-2^(w-1), 2^(w-1)] with
/// (b + v) mod 2^w == a.
inline std::int64_t seq_diff(Seq a, Seq b, unsigned width) noexcept {
  const std::uint64_t mask = seq_mask(width);
  const std::uint64_t half = std::uint64_t{1} << (width - 1);
  const std::uint64_t d = (std::uint64_t{a} - std::uint64_t{b}) & mask;
  return d <= half ? static_cast<std::int64_t>(d)
                   : static_cast<std::int64_t>(d) - static_cast<std::int64_t>(mask + 1);
}

inline Situation classify(std::int64_t var, const Thresholds& th) noexcept {
  SituationKind kind;
  if (var <= -th.t2() || var >= th.t2()) {
    kind = SituationKind::not_matched;
  } else if (var < 1) {
    kind = SituationKind::neglect;
  } else if (var == 1) {
    kind = SituationKind::normal;
  } else if (var < th.t1()) {
    kind = SituationKind::minor_gap;
  } else {
    kind = SituationKind::major_gap;
  }
  return {kind, var};
}

/// Closest-cell ordering shared by every detector: smaller |var| wins, and
/// on equal magnitude the positive variation wins. Callers scan cells in
/// index order and replace only on a strict win, so lower indices win ties.
inline bool closer_var(std::int64_t candidate, std::int64_t incumbent) noexcept {
  const std::int64_t ac = candidate < 0 ? -candidate : candidate;
  const std::int64_t ai = incumbent < 0 ? -incumbent : incumbent;
  return ac < ai || (ac == ai && candidate > incumbent);
}

/// MurmurHash64A of the same bytes under several seeds in one pass; block
/// mixing does not depend on the seed, so only the running states differ.
template <std::size_t N>
inline std::array<std::uint64_t, N> hash64_many(std::string_view bytes,
                                                const std::array<std::uint64_t, N>& seeds) noexcept {
  constexpr std::uint64_t m = 0xc6a4a7935bd1e995ULL;
  constexpr int r = 47;
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t len = bytes.size();
  std::array<std::uint64_t, N> h;
  for (std::size_t i = 0; i < N; ++i) h[i] = seeds[i] ^ (len * m);

  const std::size_t blocks = len / 8;
  for (std::size_t b = 0; b < blocks; ++b) {
    std::uint64_t k;
    std::memcpy(&k, data + b * 8, sizeof k);
    k *= m;
    k ^= k >> r;
    k *= m;
    for (std::size_t i = 0; i < N; ++i) h[i] = (h[i] ^ k) * m;
  }

  // Tail bytes as a little-endian integer, read with two overlapping loads.
  const unsigned char* tail = data + blocks * 8;
  const std::size_t rest = len & 7;
  if (rest != 0) {
    std::uint64_t k = 0;
    if (rest >= 4) {
      std::uint32_t lo, hi;
      std::memcpy(&lo, tail, 4);
      std::memcpy(&hi, tail + rest - 4, 4);
      k = lo | std::uint64_t{hi} << (8 * (rest - 4));
    } else if (rest >= 2) {
      std::uint16_t lo, hi;
      std::memcpy(&lo, tail, 2);
      std::memcpy(&hi, tail + rest - 2, 2);
      k = lo | std::uint64_t{hi} << (8 * (rest - 2));
    } else {
      k = tail[0];
    }
    for (std::size_t i = 0; i < N; ++i) h[i] = (h[i] ^ k) * m;
  }

  for (std::size_t i = 0; i < N; ++i) {
    h[i] ^= h[i] >> r;
    h[i] *= m;
    h[i] ^= h[i] >> r;
  }
  return h;
}

/// Seeded 64-bit hash over arbitrary bytes (MurmurHash64A).
inline std::uint64_t hash64(std::string_view bytes, std::uint64_t seed) noexcept {
  return hash64_many<1>(bytes, {seed})[0];
}

inline std::uint64_t hash64(std::uint32_t value, std::uint64_t seed) noexcept {
  char buf[sizeof value];
  std::memcpy(buf, &value, sizeof value);
  return hash64(std::string_view(buf, sizeof buf), seed);
}

/// Maps a 64-bit hash onto [0, d) by the high half of a 128-bit product.
inline std::size_t reduce_range(std::uint64_t h, std::size_t d) noexcept {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(h) * d) >> 64);
}

inline std::size_t bucket_index(std::string_view fid, std::size_t d,
                                const HashConfig& cfg) noexcept {
  return reduce_range(hash64(fid, cfg.seed_bucket), d);
}

/// Per-flow bias b(fid) in [0, 2^seq_width); zero when randomizing is off.
inline Seq seq_bias(std::string_view fid, const HashConfig& cfg, unsigned seq_width) noexcept {
  if (!cfg.randomize) return 0;
  return static_cast<Seq>(hash64(fid, cfg.seed_bias) & seq_mask(seq_width));
}

inline Seq randomize_seq(std::string_view fid, Seq seq, const HashConfig& cfg,
                         unsigned seq_width) noexcept {
  return static_cast<Seq>((std::uint64_t{seq} + seq_bias(fid, cfg, seq_width)) &
                          seq_mask(seq_width));
}

/// randomize_seq given the flow's bias-role hash.
inline Seq randomize_with(Seq seq, std::uint64_t bias_hash, const HashConfig& cfg,
                          unsigned seq_width) noexcept {
  const std::uint64_t bias = cfg.randomize ? bias_hash : 0;
  return static_cast<Seq>((std::uint64_t{seq} + bias) & seq_mask(seq_width));
}

/// l_f-bit fingerprint of the flow id; empty when fingerprinting is disabled.
inline std::optional<std::uint16_t> fingerprint(std::string_view fid, const HashConfig& cfg) noexcept {
  if (cfg.fp_bits == 0) return std::nullopt;
  return static_cast<std::uint16_t>(hash64(fid, cfg.seed_fingerprint) & seq_mask(cfg.fp_bits));
}

/// Bytes needed to hold `bits` bits.
inline constexpr std::size_t bytes_for_bits(unsigned bits) noexcept { return (bits + 7) / 8; }

}  // namespace gapfilter
