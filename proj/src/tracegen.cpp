#include "gapfilter/tracegen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace gapfilter {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Independent RNG streams for the generation stages.
constexpr std::uint64_t kInterleaveStream = 0x1;
constexpr std::uint64_t kLossStream = 0x2;
constexpr std::uint64_t kGapStream = 0x3;

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  return std::mt19937_64(splitmix64(state));
}

// Flow index sequence of the interleaved stream.
std::vector<std::uint32_t> interleave_order(const std::vector<std::size_t>& sizes,
                                            const TraceSpec& spec) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  std::vector<std::uint32_t> order;
  order.reserve(total);

  if (spec.interleave == Interleave::shuffle) {
    for (std::size_t f = 0; f < sizes.size(); ++f) {
      order.insert(order.end(), sizes[f], static_cast<std::uint32_t>(f));
    }
    auto rng = stream_rng(spec.seed, kInterleaveStream);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
  }

  std::vector<std::uint32_t> active(sizes.size());
  std::iota(active.begin(), active.end(), 0u);
  for (std::size_t round = 0; !active.empty(); ++round) {
    std::size_t kept = 0;
    for (std::uint32_t f : active) {
      order.push_back(f);
      if (sizes[f] > round + 1) active[kept++] = f;
    }
    active.resize(kept);
  }
  return order;
}

Trace build_trace(const TraceSpec& spec, const std::vector<std::size_t>& sizes) {
  Trace trace(spec.seq_width);
  for (std::size_t f = 0; f < sizes.size(); ++f) {
    std::uint64_t salt = 0;
    std::string fid = make_flow_id(spec.seed, f);
    while (trace.find_flow(fid) >= 0) fid = make_flow_id(spec.seed + (++salt << 40), f);
    trace.intern(fid);
  }
  return trace;
}

}  // namespace

void TraceSpec::validate() const {
  if (n_flows < 1) throw std::invalid_argument("trace needs at least one flow");
  if (n_windows < 1) throw std::invalid_argument("n_windows must be >= 1");
  if (!(abnormal_ratio > 0.0 && abnormal_ratio < 1.0)) {
    throw std::invalid_argument("abnormal_ratio must lie in (0, 1)");
  }
  if (seq_width < 8 || seq_width > 32) throw std::invalid_argument("seq_width must be in [8, 32]");
  if (zipf) {
    if (!(zipf->alpha > 1.0 && zipf->alpha <= 3.0)) {
      throw std::invalid_argument("zipf alpha must lie in (1, 3]");
    }
    if (!(zipf->scale > 0.0)) throw std::invalid_argument("zipf scale must be positive");
  }
}

void LossModel::validate() const {
  if (!(base > 0.0 && base < 1.0)) throw std::invalid_argument("burst base b must lie in (0, 1)");
  if (!(single_loss >= 0.0 && single_loss < 1.0)) {
    throw std::invalid_argument("single-loss probability p must lie in [0, 1)");
  }
}

std::vector<std::size_t> flow_sizes(const TraceSpec& spec) {
  spec.validate();
  std::vector<std::size_t> sizes;
  sizes.reserve(spec.n_flows);
  for (std::size_t j = 1; j <= spec.n_flows; ++j) {
    std::size_t size = spec.flow_length;
    if (spec.zipf) {
      const double exact = spec.zipf->scale * std::pow(static_cast<double>(j), -spec.zipf->alpha);
      size = static_cast<std::size_t>(std::floor(exact * (1.0 + 1e-12)));
    }
    if (size > 0) sizes.push_back(size);
  }
  return sizes;
}

std::string make_flow_id(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t state = seed * 0x2545f4914f6cdd1dULL + index;
  const std::uint64_t a = splitmix64(state);
  const std::uint64_t b = splitmix64(state);
  std::string fid(13, '\0');
  for (int i = 0; i < 8; ++i) fid[i] = static_cast<char>(a >> (8 * i));
  for (int i = 0; i < 5; ++i) fid[8 + i] = static_cast<char>(b >> (8 * i));
  return fid;
}

Trace gen_clean(const TraceSpec& spec) {
  const std::vector<std::size_t> sizes = flow_sizes(spec);
  Trace trace = build_trace(spec, sizes);
  const std::vector<std::uint32_t> order = interleave_order(sizes, spec);
  const std::uint64_t mask = seq_mask(spec.seq_width);

  std::vector<std::uint64_t> next(sizes.size(), 0);
  trace.reserve(order.size());
  for (std::uint32_t f : order) trace.push(f, static_cast<Seq>(next[f]++ & mask));
  return trace;
}

LossyTrace apply_loss(const Trace& clean, const LossModel& model, const TraceSpec& spec) {
  spec.validate();
  model.validate();

  LossyTrace out{Trace(clean.seq_width()), {}};
  for (std::uint32_t f = 0; f < clean.flow_count(); ++f) out.trace.intern(clean.fid(f));
  out.trace.reserve(clean.size());

  const std::size_t n_flows = clean.flow_count();
  const std::size_t n = clean.size();
  const std::size_t n_windows = spec.n_windows;
  auto rng = stream_rng(spec.seed, kLossStream);

  const auto t1 = static_cast<std::uint32_t>(model.th.t1());
  const auto t2 = static_cast<std::uint32_t>(model.th.t2());
  std::vector<double> burst_prob(t2, 0.0);
  for (std::uint32_t j = t1; j < t2; ++j) burst_prob[j] = std::pow(model.base, j);
  std::uniform_int_distribution<std::uint32_t> burst_len(t1, t2 - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::unordered_map<std::uint32_t, std::vector<const ForcedBurst*>> forced;
  for (const ForcedBurst& fb : model.forced) {
    const std::int64_t f = clean.find_flow(fb.fid);
    if (f < 0) throw std::invalid_argument("forced burst names an unknown flow");
    if (fb.length < 1) throw std::invalid_argument("forced burst length must be >= 1");
    forced[static_cast<std::uint32_t>(f)].push_back(&fb);
  }

  constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
  std::vector<std::uint64_t> ordinal(n_flows, 0);
  std::vector<std::uint64_t> burst_end(n_flows, 0);
  std::vector<std::size_t> seen_window(n_flows, kNever);
  std::vector<std::size_t> abnormal_window(n_flows, kNever);
  std::vector<std::size_t> burst_window(n_flows, kNever);
  std::vector<std::uint32_t> present;

  const auto& records = clean.records();
  std::size_t begin = 0;
  for (std::size_t k = 0; k < n_windows; ++k) {
    const std::size_t end = static_cast<std::size_t>(
        (static_cast<unsigned __int128>(n) * (k + 1)) / n_windows);

    present.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t f = records[i].flow;
      if (seen_window[f] != k) {
        seen_window[f] = k;
        present.push_back(f);
      }
    }
    const auto n_abnormal = static_cast<std::size_t>(
        std::ceil(spec.abnormal_ratio * static_cast<double>(present.size())));
    for (std::size_t a = 0; a < n_abnormal && a < present.size(); ++a) {
      std::uniform_int_distribution<std::size_t> pick(a, present.size() - 1);
      std::swap(present[a], present[pick(rng)]);
      abnormal_window[present[a]] = k;
    }

    for (std::size_t i = begin; i < end; ++i) {
      const auto [f, seq] = records[i];
      const std::uint64_t ord = ordinal[f]++;
      if (ord < burst_end[f]) continue;

      std::uint32_t length = 0;
      if (auto it = forced.find(f); it != forced.end()) {
        for (const ForcedBurst* fb : it->second) {
          if (fb->start_seq == seq) length = fb->length;
        }
      }
      if (length == 0 && model.random_bursts && abnormal_window[f] == k &&
          (model.mode == BurstMode::per_item || burst_window[f] != k)) {
        const std::uint32_t j = burst_len(rng);
        if (unit(rng) < burst_prob[j]) length = j;
      }
      if (length > 0) {
        burst_end[f] = ord + length;
        burst_window[f] = k;
        out.bursts.push_back({f, seq, length});
        continue;
      }

      if (model.single_loss > 0.0 && unit(rng) < model.single_loss) continue;
      out.trace.push(f, seq);
    }
    begin = end;
  }
  return out;
}

Trace gen_with_gap_ratio(const TraceSpec& spec, double beta, const Thresholds& th) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("gap ratio must lie in [0, 1]");
  const std::vector<std::size_t> sizes = flow_sizes(spec);
  Trace trace = build_trace(spec, sizes);
  const std::vector<std::uint32_t> order = interleave_order(sizes, spec);
  const std::uint64_t mask = seq_mask(spec.seq_width);

  auto rng = stream_rng(spec.seed, kGapStream);
  std::bernoulli_distribution gap(beta);
  std::uniform_int_distribution<std::int64_t> jump(th.t1(), th.t2() - 1);

  std::vector<std::uint64_t> next(sizes.size(), 0);
  std::vector<bool> started(sizes.size(), false);
  trace.reserve(order.size());
  for (std::uint32_t f : order) {
    if (started[f]) {
      next[f] += gap(rng) ? static_cast<std::uint64_t>(jump(rng)) : 1;
    } else {
      started[f] = true;
    }
    trace.push(f, static_cast<Seq>(next[f] & mask));
  }
  return trace;
}

}  // namespace gapfilter
