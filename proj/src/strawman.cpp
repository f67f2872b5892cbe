#include "gapfilter/strawman.hpp"

#include <stdexcept>
#include <string>

namespace gapfilter {

CuckooBaseline::CuckooBaseline(const CuckooConfig& cfg)
    : cfg_(cfg),
      seed_h1_(cfg.hash.seed_bucket),
      seed_h2_(~cfg.hash.seed_bucket),
      rng_(cfg.hash.seed_bucket ^ cfg.hash.seed_fingerprint) {
  if (cfg_.buckets_per_block < 1) throw std::invalid_argument("CuckooBaseline needs >= 1 bucket per block");
  if (cfg_.cells_per_bucket < 1) throw std::invalid_argument("CuckooBaseline needs >= 1 cell per bucket");
  slots_.assign(2 * cfg_.buckets_per_block * cfg_.cells_per_bucket, Slot{});
}

CuckooBaseline CuckooBaseline::from_budget(std::size_t budget_bytes, const Thresholds& th,
                                           const HashConfig& hash, std::size_t cells_per_bucket,
                                           std::size_t max_turns) {
  const std::size_t bucket_bytes = cells_per_bucket * cell_bytes(th);
  const std::size_t per_block = bucket_bytes == 0 ? 0 : budget_bytes / (2 * bucket_bytes);
  if (per_block < 1) {
    throw std::invalid_argument("memory budget of " + std::to_string(budget_bytes) +
                                " bytes cannot hold one bucket per block");
  }
  return CuckooBaseline(CuckooConfig{per_block, cells_per_bucket, max_turns, th, hash});
}

std::uint32_t CuckooBaseline::flow_fingerprint(std::string_view fid) const noexcept {
  return static_cast<std::uint32_t>(hash64(fid, cfg_.hash.seed_fingerprint));
}

std::size_t CuckooBaseline::candidate(std::uint32_t fp, int block) const noexcept {
  return reduce_range(hash64(fp, block == 0 ? seed_h1_ : seed_h2_), cfg_.buckets_per_block);
}

bool CuckooBaseline::try_place(int block, std::size_t bucket, const Entry& e) noexcept {
  Slot* cells = bucket_ptr(block, bucket);
  for (std::size_t j = 0; j < cfg_.cells_per_bucket; ++j) {
    if (!cells[j].used) {
      cells[j] = Slot{e, true};
      ++occupied_;
      return true;
    }
  }
  return false;
}

void CuckooBaseline::insert(Entry e) {
  const std::size_t b1 = candidate(e.fp, 0);
  if (try_place(0, b1, e)) return;
  const std::size_t b2 = candidate(e.fp, 1);
  if (try_place(1, b2, e)) return;

  std::uniform_int_distribution<std::size_t> pick_cell(0, cfg_.cells_per_bucket - 1);
  int block = static_cast<int>(rng_() & 1);
  std::size_t bucket = block == 0 ? b1 : b2;
  for (std::size_t turn = 0; turn < cfg_.max_turns; ++turn) {
    Slot& victim = bucket_ptr(block, bucket)[pick_cell(rng_)];
    std::swap(e, victim.entry);
    ++kicks_;
    block ^= 1;
    bucket = candidate(e.fp, block);
    if (try_place(block, bucket, e)) return;
  }
  ++drops_;
}

std::optional<GapReport> CuckooBaseline::observe(const Item& item, std::uint64_t pos) {
  const unsigned width = cfg_.th.seq_width();
  const auto h = hash64_many<2>(item.fid, {cfg_.hash.seed_fingerprint, cfg_.hash.seed_bias});
  const Seq s = randomize_with(item.seq, h[1], cfg_.hash, width);
  const auto fp = static_cast<std::uint32_t>(h[0]);
  const auto mask = static_cast<Seq>(seq_mask(width));

  for (int block = 0; block < 2; ++block) {
    const std::size_t bucket = candidate(fp, block);
    Slot* cells = bucket_ptr(block, bucket);
    for (std::size_t j = 0; j < cfg_.cells_per_bucket; ++j) {
      if (!cells[j].used || cells[j].entry.fp != fp) continue;
      Entry& hit = cells[j].entry;
      if (((s - hit.seq) & mask) == 1) [[likely]] {  // var == 1: the in-order case
        hit.seq = s;
        return std::nullopt;
      }
      const Situation sit = classify(seq_diff(s, hit.seq, width), cfg_.th);
      std::optional<GapReport> report;
      if (sit.kind == SituationKind::major_gap) {
        const std::uint64_t global_bucket =
            static_cast<std::uint64_t>(block) * cfg_.buckets_per_block + bucket;
        report = GapReport{global_bucket, static_cast<std::uint32_t>(j), s, hit.seq, sit.var, pos};
      }
      if (sit.var > 0) hit.seq = s;
      return report;
    }
  }

  insert(Entry{fp, s});
  return std::nullopt;
}

std::vector<CuckooBaseline::Entry> CuckooBaseline::snapshot(int block, std::size_t bucket) const {
  if (block < 0 || block > 1 || bucket >= cfg_.buckets_per_block) {
    throw std::out_of_range("bucket index out of range");
  }
  std::vector<Entry> out;
  const Slot* cells = slots_.data() +
                      (static_cast<std::size_t>(block) * cfg_.buckets_per_block + bucket) *
                          cfg_.cells_per_bucket;
  for (std::size_t j = 0; j < cfg_.cells_per_bucket; ++j) {
    if (cells[j].used) out.push_back(cells[j].entry);
  }
  return out;
}

}  // namespace gapfilter
