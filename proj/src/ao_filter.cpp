#include "gapfilter/ao_filter.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

#if defined(__SSE4_1__)
#include <smmintrin.h>
#endif

namespace gapfilter {

namespace {

// Moves *pos to *first, shifting the cells in between back by one.
void move_to_front(AoCell* first, AoCell* pos) noexcept {
  const AoCell v = *pos;
  std::copy_backward(first, pos, pos + 1);
  *first = v;
}

struct Closest {
  std::size_t index = 0;
  std::uint64_t key = ~std::uint64_t{0};  // 2|var| + (var < 0); foreign fingerprints never win
};

// Scans the flattened bucket; `valid` tells which indices hold cells.
template <typename Valid>
Closest scan_scalar(const AoCell* cells, std::size_t width, Valid valid, Seq s, std::uint16_t f,
                    std::uint32_t mask, std::uint32_t half) noexcept {
  Closest best;
  for (std::size_t j = 0; j < width; ++j) {
    const std::uint32_t d = (s - cells[j].seq) & mask;
    const bool neg = d > half;
    const std::uint32_t mag = neg ? mask - d + 1 : d;
    std::uint64_t key = std::uint64_t{mag} << 1 | std::uint64_t{neg};
    key = cells[j].fp == f && valid(j) ? key : ~std::uint64_t{0};
    best.index = key < best.key ? j : best.index;
    best.key = key < best.key ? key : best.key;
  }
  return best;
}

#if defined(__SSE4_1__)
// Magnitudes clamp to t2 so keys fit 16 bits; empty cells and foreign
// fingerprints map to 0xffff. Reads whole 8-cell chunks.
Closest scan_sse(const AoCell* cells, std::size_t width, std::size_t n_suspect,
                 std::size_t suspects, std::size_t n_civilian, Seq s, std::uint16_t f,
                 std::uint32_t mask, std::uint32_t half, std::uint32_t t2) noexcept {
  static_assert(sizeof(AoCell) == 8);
  const __m128i vs = _mm_set1_epi32(static_cast<int>(s));
  const __m128i vf = _mm_set1_epi32(f);
  const __m128i vmask = _mm_set1_epi32(static_cast<int>(mask));
  const __m128i vmod = _mm_set1_epi32(static_cast<int>(mask + 1));
  const __m128i flip = _mm_set1_epi32(INT32_MIN);
  const __m128i vhalf = _mm_set1_epi32(static_cast<int>(half ^ 0x80000000u));
  const __m128i vt2 = _mm_set1_epi32(static_cast<int>(t2));
  const __m128i one = _mm_set1_epi32(1);
  const __m128i low = _mm_set1_epi32(0xffff);
  const __m128i ns = _mm_set1_epi32(static_cast<int>(n_suspect));
  const __m128i sbeg = _mm_set1_epi32(static_cast<int>(suspects) - 1);
  const __m128i cend = _mm_set1_epi32(static_cast<int>(suspects + n_civilian));

  auto keys = [&](const AoCell* p, int base) {
    const __m128 a = _mm_castsi128_ps(_mm_loadu_si128(reinterpret_cast<const __m128i*>(p)));
    const __m128 b = _mm_castsi128_ps(_mm_loadu_si128(reinterpret_cast<const __m128i*>(p + 2)));
    const __m128i seq = _mm_castps_si128(_mm_shuffle_ps(a, b, _MM_SHUFFLE(2, 0, 2, 0)));
    const __m128i fp =
        _mm_and_si128(_mm_castps_si128(_mm_shuffle_ps(a, b, _MM_SHUFFLE(3, 1, 3, 1))), low);
    const __m128i d = _mm_and_si128(_mm_sub_epi32(vs, seq), vmask);
    const __m128i neg = _mm_cmpgt_epi32(_mm_xor_si128(d, flip), vhalf);
    const __m128i mag = _mm_min_epu32(_mm_blendv_epi8(d, _mm_sub_epi32(vmod, d), neg), vt2);
    const __m128i key = _mm_or_si128(_mm_slli_epi32(mag, 1), _mm_and_si128(neg, one));
    const __m128i idx = _mm_add_epi32(_mm_set1_epi32(base), _mm_setr_epi32(0, 1, 2, 3));
    const __m128i valid = _mm_and_si128(
        _mm_cmpeq_epi32(fp, vf),
        _mm_or_si128(_mm_cmpgt_epi32(ns, idx),
                     _mm_and_si128(_mm_cmpgt_epi32(idx, sbeg), _mm_cmpgt_epi32(cend, idx))));
    return _mm_or_si128(key, _mm_andnot_si128(valid, low));
  };

  Closest best;
  for (std::size_t base = 0; base < width; base += 8) {
    const int b = static_cast<int>(base);
    const __m128i packed = _mm_packus_epi32(keys(cells + base, b), keys(cells + base + 4, b + 4));
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

std::size_t cell_stride(std::size_t width) noexcept {
#if defined(__SSE4_1__)
  return (width + 7) / 8 * 8;
#else
  return width;
#endif
}

#if defined(__SSE4_1__)
// Writes (seq, fp) to cells[start] and shifts cells[start, pos) back by one in
// an 8-cell bucket, without branches and with whole-register stores only.
void rotate8_sse(AoCell* cells, std::size_t start, std::size_t pos, Seq seq, std::uint16_t fp) noexcept {
  static_assert(sizeof(AoCell) == 8 && offsetof(AoCell, seq) == 0 && offsetof(AoCell, fp) == 4);
  auto* p = reinterpret_cast<__m128i*>(cells);
  const auto bits = static_cast<std::int64_t>(std::uint64_t{seq} | std::uint64_t{fp} << 32);
  const __m128i vmoved = _mm_set1_epi64x(bits);
  const __m128i first = _mm_set1_epi32(static_cast<int>(start));
  const __m128i last = _mm_set1_epi32(static_cast<int>(pos) + 1);
  __m128i prev = _mm_setzero_si128();
  for (int k = 0; k < 4; ++k) {
    const __m128i cur = _mm_loadu_si128(p + k);
    const __m128i shifted = _mm_alignr_epi8(cur, prev, 8);
    const __m128i idx = _mm_setr_epi32(2 * k, 2 * k, 2 * k + 1, 2 * k + 1);
    const __m128i take = _mm_and_si128(_mm_cmpgt_epi32(idx, first), _mm_cmpgt_epi32(last, idx));
    const __m128i out = _mm_blendv_epi8(_mm_blendv_epi8(cur, shifted, take), vmoved,
                                        _mm_cmpeq_epi32(idx, first));
    _mm_storeu_si128(p + k, out);
    prev = cur;
  }
}
#endif

}  // namespace

AoSketch::AoSketch(const AoConfig& cfg)
    : cfg_(cfg), width_(cfg.civilians + cfg.suspects), stride_(cell_stride(width_)) {
  if (cfg_.buckets < 1) throw std::invalid_argument("AoSketch needs at least one bucket");
  if (cfg_.civilians < 1 || cfg_.suspects < 1) {
    throw std::invalid_argument("AoSketch needs c >= 1 and s >= 1");
  }
  if (cfg_.civilians > 255 || cfg_.suspects > 255) {
    throw std::invalid_argument("AoSketch regions are limited to 255 cells");
  }
  cfg_.hash.validate();
  cells_.assign(cfg_.buckets * stride_, AoCell{});
#if defined(__SSE4_1__)
  vector_scan_ = 2 * cfg_.th.t2() + 1 < 0xffff;
#endif
  counts_.assign(cfg_.buckets, Counts{});
}

AoSketch AoSketch::from_budget(std::size_t budget_bytes, std::size_t civilians,
                               std::size_t suspects, const Thresholds& th, const HashConfig& hash,
                               bool refresh_on_neglect) {
  const std::size_t bucket_bytes = (civilians + suspects) * cell_bytes(th, hash);
  if (bucket_bytes == 0) throw std::invalid_argument("AoSketch needs c >= 1 and s >= 1");
  const std::size_t d = budget_bytes / bucket_bytes;
  if (d < 1) {
    throw std::invalid_argument("memory budget of " + std::to_string(budget_bytes) +
                                " bytes cannot hold one " + std::to_string(bucket_bytes) +
                                "-byte bucket");
  }
  return AoSketch(AoConfig{d, civilians, suspects, th, hash, refresh_on_neglect});
}

void AoSketch::push_civilian_front(AoCell* civ, Counts& n, const AoCell& cell) noexcept {
  const std::size_t keep = std::min<std::size_t>(n.civilian, cfg_.civilians - 1);
  std::copy_backward(civ, civ + keep, civ + keep + 1);
  civ[0] = cell;
  if (n.civilian < cfg_.civilians) ++n.civilian;
}

std::optional<GapReport> AoSketch::observe(const Item& item, std::uint64_t pos) {
  const unsigned width = cfg_.th.seq_width();
  const auto h = hash64_many<3>(
      item.fid, {cfg_.hash.seed_bucket, cfg_.hash.seed_bias, cfg_.hash.seed_fingerprint});
  const Seq s = randomize_with(item.seq, h[1], cfg_.hash, width);
  const auto f = static_cast<std::uint16_t>(h[2] & seq_mask(cfg_.hash.fp_bits));
  const std::size_t b = reduce_range(h[0], cfg_.buckets);
  AoCell* const sus = suspect_of(b);
  AoCell* const civ = civilian_of(b);
  Counts& n = counts_[b];

  // Flattened candidate index: suspects first, then civilians.
  const auto mask = static_cast<std::uint32_t>(seq_mask(width));
  const std::uint32_t half = std::uint32_t{1} << (width - 1);
  const std::size_t ns = n.suspect;
  const std::size_t nc = n.civilian;
  const std::size_t sc = cfg_.suspects;
  auto valid = [&](std::size_t j) { return j < ns || (j >= sc && j < sc + nc); };
#if defined(__SSE4_1__)
  const auto t2 = static_cast<std::uint32_t>(cfg_.th.t2());
  const Closest c = vector_scan_ ? scan_sse(sus, width_, ns, sc, nc, s, f, mask, half, t2)
                                 : scan_scalar(sus, width_, valid, s, f, mask, half);
#else
  const Closest c = scan_scalar(sus, width_, valid, s, f, mask, half);
#endif
  const std::size_t best = c.index;
  const std::uint64_t best_key = c.key;
  const bool found = best_key != ~std::uint64_t{0};
  const auto best_mag = static_cast<std::int64_t>(best_key >> 1);
  const std::int64_t best_var = (best_key & 1) ? -best_mag : best_mag;

  if (best_key == 2) [[likely]] {  // var == 1: the in-order case
    // Suspects keep their place; a civilian moves to the civilian front.
    // Branching on "does it move" predicts far better than on the region.
    const std::size_t start = best < sc ? best : sc;
    if (start == best) {
      sus[best].seq = s;
      return std::nullopt;
    }
#if defined(__SSE4_1__)
    if (stride_ == 8) {
      rotate8_sse(sus, start, best, s, f);
      return std::nullopt;
    }
#endif
    sus[best].seq = s;
    move_to_front(sus + start, sus + best);
    return std::nullopt;
  }

  const Situation sit = found ? classify(best_var, cfg_.th) : Situation{};

  if (!sit.matched()) {
    const AoCell fresh{s, f};
    if (n.suspect < cfg_.suspects) {
      sus[n.suspect++] = fresh;
    } else {
      push_civilian_front(civ, n, sus[cfg_.suspects - 1]);
      sus[cfg_.suspects - 1] = fresh;
    }
    return std::nullopt;
  }

  const bool in_suspect = best < cfg_.suspects;
  AoCell* const cell = in_suspect ? sus + best : civ + (best - cfg_.suspects);

  if (sit.kind != SituationKind::major_gap) {
    if (sit.var > 0) cell->seq = s;
    if (!in_suspect && (sit.kind != SituationKind::neglect || cfg_.refresh_on_neglect)) {
      move_to_front(civ, cell);
    }
    return std::nullopt;
  }

  GapReport report{b, static_cast<std::uint32_t>(best), s, cell->seq, sit.var, pos};
  cell->seq = s;  // var >= t1 > 0

  if (in_suspect) {
    move_to_front(sus, cell);
    return report;
  }

  const AoCell moved = *cell;
  std::copy(cell + 1, civ + n.civilian, cell);
  --n.civilian;
  if (n.suspect < cfg_.suspects) {
    // Unreachable while the region invariant holds.
    std::copy_backward(sus, sus + n.suspect, sus + n.suspect + 1);
    ++n.suspect;
    sus[0] = moved;
    return report;
  }
  const AoCell exonerated = sus[cfg_.suspects - 1];
  std::copy_backward(sus, sus + cfg_.suspects - 1, sus + cfg_.suspects);
  sus[0] = moved;
  push_civilian_front(civ, n, exonerated);
  return report;
}

AoBucketView AoSketch::snapshot(std::size_t bucket) const {
  if (bucket >= cfg_.buckets) throw std::out_of_range("bucket index out of range");
  const AoCell* sus = cells_.data() + bucket * stride_;
  const AoCell* civ = sus + cfg_.suspects;
  const Counts& n = counts_[bucket];
  return {{sus, sus + n.suspect}, {civ, civ + n.civilian}};
}

}  // namespace gapfilter
