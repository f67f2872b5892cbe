#include "gapfilter/so_filter.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string>

#if defined(__SSE4_1__)
#include <smmintrin.h>
#endif

namespace gapfilter {

namespace {

// Moves *pos to *first, shifting the cells in between back by one.
void move_to_front(Seq* first, Seq* pos) noexcept {
  const Seq v = *pos;
  std::copy_backward(first, pos, pos + 1);
  *first = v;
}

struct Closest {
  std::size_t index = 0;
  std::uint64_t key = ~std::uint64_t{0};  // 2|var| + (var < 0)
};

Closest scan_scalar(const Seq* cells, std::size_t occ, Seq s, std::uint32_t mask,
                    std::uint32_t half) noexcept {
  Closest best;
  for (std::size_t j = 0; j < occ; ++j) {
    const std::uint32_t d = (s - cells[j]) & mask;
    const bool neg = d > half;
    const std::uint32_t mag = neg ? mask - d + 1 : d;
    const std::uint64_t key = std::uint64_t{mag} << 1 | std::uint64_t{neg};
    best.index = key < best.key ? j : best.index;
    best.key = key < best.key ? key : best.key;
  }
  return best;
}

#if defined(__SSE4_1__)
// Row n marks 16-bit lanes n..7 as empty.
constexpr auto kEmptyLanes = [] {
  std::array<std::array<std::uint16_t, 8>, 9> t{};
  for (std::size_t n = 0; n <= 8; ++n) {
    for (std::size_t j = n; j < 8; ++j) t[n][j] = 0xffff;
  }
  return t;
}();

// Same ordering with magnitudes clamped to t2, which keeps keys in 16 bits;
// every clamped cell is not-matched anyway. Reads whole 8-cell chunks.
Closest scan_sse(const Seq* cells, std::size_t occ, Seq s, std::uint32_t mask, std::uint32_t half,
                 std::uint32_t t2) noexcept {
  const __m128i vs = _mm_set1_epi32(static_cast<int>(s));
  const __m128i vmask = _mm_set1_epi32(static_cast<int>(mask));
  const __m128i vmod = _mm_set1_epi32(static_cast<int>(mask + 1));
  const __m128i flip = _mm_set1_epi32(INT32_MIN);
  const __m128i vhalf = _mm_set1_epi32(static_cast<int>(half ^ 0x80000000u));
  const __m128i vt2 = _mm_set1_epi32(static_cast<int>(t2));
  const __m128i one = _mm_set1_epi32(1);

  auto keys = [&](const Seq* p) {
    const __m128i c = _mm_loadu_si128(reinterpret_cast<const __m128i*>(p));
    const __m128i d = _mm_and_si128(_mm_sub_epi32(vs, c), vmask);
    const __m128i neg = _mm_cmpgt_epi32(_mm_xor_si128(d, flip), vhalf);
    const __m128i mag = _mm_min_epu32(_mm_blendv_epi8(d, _mm_sub_epi32(vmod, d), neg), vt2);
    return _mm_or_si128(_mm_slli_epi32(mag, 1), _mm_and_si128(neg, one));
  };

  Closest best;
  for (std::size_t base = 0; base < occ; base += 8) {
    const std::size_t live = std::min<std::size_t>(occ - base, 8);
    const __m128i empty = _mm_loadu_si128(reinterpret_cast<const __m128i*>(kEmptyLanes[live].data()));
    const __m128i packed = _mm_or_si128(_mm_packus_epi32(keys(cells + base), keys(cells + base + 4)), empty);
    const auto r = static_cast<std::uint32_t>(_mm_cvtsi128_si32(_mm_minpos_epu16(packed)));
    const std::uint64_t key = r & 0xffff;
    if (key < best.key) {
      best.key = key;
      best.index = base + ((r >> 16) & 7);
    }
  }
  if (best.key == 0xffff) best.key = ~std::uint64_t{0};
  return best;
}
#endif

std::size_t cell_stride(std::size_t cells) noexcept {
#if defined(__SSE4_1__)
  return (cells + 7) / 8 * 8;
#else
  return cells;
#endif
}

}  // namespace

SoSketch::SoSketch(const SoConfig& cfg) : cfg_(cfg) {
  if (cfg_.buckets < 1) throw std::invalid_argument("SoSketch needs at least one bucket");
  if (cfg_.cells < 1 || cfg_.cells > 255) {
    throw std::invalid_argument("SoSketch cells per bucket must be in [1, 255]");
  }
  cfg_.hash.validate();
  stride_ = cell_stride(cfg_.cells);
  mask_ = static_cast<std::uint32_t>(seq_mask(cfg_.th.seq_width()));
  half_ = std::uint32_t{1} << (cfg_.th.seq_width() - 1);
#if defined(__SSE4_1__)
  vector_scan_ = 2 * cfg_.th.t2() + 1 < 0xffff;
#endif
  cells_.assign(cfg_.buckets * stride_, 0);
  occupancy_.assign(cfg_.buckets, 0);
}

SoSketch SoSketch::from_budget(std::size_t budget_bytes, std::size_t cells, const Thresholds& th,
                               const HashConfig& hash, bool refresh_on_neglect) {
  if (cells < 1) throw std::invalid_argument("SoSketch cells per bucket must be >= 1");
  const std::size_t bucket_bytes = cells * cell_bytes(th);
  const std::size_t d = budget_bytes / bucket_bytes;
  if (d < 1) {
    throw std::invalid_argument("memory budget of " + std::to_string(budget_bytes) +
                                " bytes cannot hold one " + std::to_string(bucket_bytes) +
                                "-byte bucket");
  }
  return SoSketch(SoConfig{d, cells, th, hash, refresh_on_neglect});
}

std::optional<GapReport> SoSketch::observe(const Item& item, std::uint64_t pos) {
  const unsigned width = cfg_.th.seq_width();
  const auto h = hash64_many<2>(item.fid, {cfg_.hash.seed_bucket, cfg_.hash.seed_bias});
  const Seq s = randomize_with(item.seq, h[1], cfg_.hash, width);
  const std::size_t b = reduce_range(h[0], cfg_.buckets);
  Seq* const bucket = cells_.data() + b * stride_;
  std::uint8_t& occ = occupancy_[b];

#if defined(__SSE4_1__)
  const Closest c = vector_scan_
                        ? scan_sse(bucket, occ, s, mask_, half_, static_cast<std::uint32_t>(cfg_.th.t2()))
                        : scan_scalar(bucket, occ, s, mask_, half_);
#else
  const Closest c = scan_scalar(bucket, occ, s, mask_, half_);
#endif
  const std::size_t best = c.index;
  if (c.key == 2) [[likely]] {  // var == 1: the in-order case
    bucket[best] = s;
    move_to_front(bucket, bucket + best);
    return std::nullopt;
  }
  const bool found = occ > 0;
  const auto best_mag = static_cast<std::int64_t>(c.key >> 1);
  const std::int64_t best_var = (c.key & 1) ? -best_mag : best_mag;

  const Situation sit = found ? classify(best_var, cfg_.th) : Situation{};
  if (!sit.matched()) {
    // Insert at the front; a full bucket loses its least recently used cell.
    const std::size_t keep = std::min<std::size_t>(occ, cfg_.cells - 1);
    std::copy_backward(bucket, bucket + keep, bucket + keep + 1);
    bucket[0] = s;
    if (occ < cfg_.cells) ++occ;
    return std::nullopt;
  }

  std::optional<GapReport> report;
  if (sit.kind == SituationKind::major_gap) {
    report = GapReport{b, static_cast<std::uint32_t>(best), s, bucket[best], sit.var, pos};
  }
  if (sit.var > 0) bucket[best] = s;
  if (sit.kind != SituationKind::neglect || cfg_.refresh_on_neglect) {
    move_to_front(bucket, bucket + best);
  }
  return report;
}

std::vector<Seq> SoSketch::snapshot(std::size_t bucket) const {
  if (bucket >= cfg_.buckets) throw std::out_of_range("bucket index out of range");
  const Seq* begin = cells_.data() + bucket * stride_;
  return {begin, begin + occupancy_[bucket]};
}

}  // namespace gapfilter
