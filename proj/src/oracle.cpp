#include "gapfilter/oracle.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace gapfilter {

std::optional<GapReport> IdealDetector::observe(const Item& item, std::uint64_t pos) {
  const unsigned width = th_.seq_width();
  const Seq s = randomize_seq(item.fid, item.seq, hash_, width);
  auto [it, inserted] = state_.try_emplace(std::string(item.fid), s);
  if (inserted) return std::nullopt;

  Seq& stored = it->second;
  const Situation sit = classify(seq_diff(s, stored, width), th_);
  if (!sit.matched()) {
    stored = s;
    return std::nullopt;
  }
  std::optional<GapReport> report;
  if (sit.kind == SituationKind::major_gap) report = GapReport{0, 0, s, stored, sit.var, pos};
  if (sit.var > 0) stored = s;
  return report;
}

std::vector<GapReport> oracle_run(const Trace& trace, const Thresholds& th, const HashConfig& hash) {
  IdealDetector ideal(th, hash);
  std::vector<GapReport> events;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (auto r = ideal.observe(trace[i], i)) events.push_back(*r);
  }
  return events;
}

EvalResult score(std::span<const GapReport> reports, std::span<const GapReport> truth,
                 std::optional<std::size_t> trace_size) {
  auto check = [&](const GapReport& r) {
    if (trace_size && r.stream_position >= *trace_size) {
      throw std::invalid_argument("report at position " + std::to_string(r.stream_position) +
                                  " lies beyond a trace of " + std::to_string(*trace_size) +
                                  " items");
    }
  };

  std::vector<std::pair<std::uint64_t, std::int64_t>> keys;
  keys.reserve(truth.size());
  for (const GapReport& t : truth) {
    check(t);
    keys.emplace_back(t.stream_position, t.var);
  }
  std::sort(keys.begin(), keys.end());
  std::vector<bool> consumed(keys.size(), false);

  EvalResult r;
  r.truth = truth.size();
  r.reported = reports.size();
  for (const GapReport& rep : reports) {
    check(rep);
    const std::pair<std::uint64_t, std::int64_t> key{rep.stream_position, rep.var};
    for (auto it = std::lower_bound(keys.begin(), keys.end(), key); it != keys.end() && *it == key;
         ++it) {
      const auto idx = static_cast<std::size_t>(it - keys.begin());
      if (!consumed[idx]) {
        consumed[idx] = true;
        ++r.correct;
        break;
      }
    }
  }
  r.nri = r.truth - r.correct;
  r.precision = r.reported == 0 ? 1.0 : static_cast<double>(r.correct) / r.reported;
  r.recall = r.truth == 0 ? 1.0 : static_cast<double>(r.correct) / r.truth;
  const double sum = r.precision + r.recall;
  r.f1 = sum == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / sum;
  return r;
}

}  // namespace gapfilter
