#include "gapfilter/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "gapfilter/bounds.hpp"

namespace gapfilter::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

std::size_t parse_size(const std::string& text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an unsigned integer: '" + text + "'");
  }
  return v;
}

}  // namespace

std::uint64_t default_seed() {
  if (const char* env = std::getenv("GAPFILTER_SEED")) {
    std::uint64_t v = 0;
    const std::string_view text(env);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && ptr == text.data() + text.size()) return v;
  }
  return kDefaultSeed;
}

const char* to_string(DetectorKind kind) noexcept {
  switch (kind) {
    case DetectorKind::so: return "so";
    case DetectorKind::ao: return "ao";
    case DetectorKind::strawman: return "strawman";
    case DetectorKind::oracle: return "oracle";
  }
  return "unknown";
}

DetectorKind parse_detector(const std::string& name) {
  if (name == "so") return DetectorKind::so;
  if (name == "ao") return DetectorKind::ao;
  if (name == "strawman") return DetectorKind::strawman;
  if (name == "oracle") return DetectorKind::oracle;
  throw std::invalid_argument("unknown detector '" + name + "' (so, ao, strawman, oracle)");
}

HashConfig RunConfig::hash_config() const {
  return HashConfig::from_master_seed(seed, detector == DetectorKind::ao ? lf : 0, randomize);
}

void RunConfig::validate() const {
  (void)thresholds();
  if (lf > 16) throw std::invalid_argument("--lf must be <= 16");
  if (buckets && *buckets < 1) throw std::invalid_argument("--buckets must be >= 1");
  switch (detector) {
    case DetectorKind::so:
      if (w < 1 || w > 255) throw std::invalid_argument("--w must be in [1, 255]");
      break;
    case DetectorKind::ao:
      if (c < 1 || s < 1) throw std::invalid_argument("ao needs --c >= 1 and --s >= 1");
      if (c + s != w) throw std::invalid_argument("ao needs c + s == w");
      break;
    case DetectorKind::strawman:
      if (cuckoo_cells < 1) throw std::invalid_argument("strawman needs >= 1 cell per bucket");
      break;
    case DetectorKind::oracle:
      break;
  }
}

AnyDetector make_detector(const RunConfig& cfg) {
  cfg.validate();
  const Thresholds th = cfg.thresholds();
  const HashConfig hash = cfg.hash_config();
  switch (cfg.detector) {
    case DetectorKind::so:
      if (cfg.buckets) return SoSketch(SoConfig{*cfg.buckets, cfg.w, th, hash, cfg.refresh_on_neglect});
      return SoSketch::from_budget(cfg.memory_bytes, cfg.w, th, hash, cfg.refresh_on_neglect);
    case DetectorKind::ao:
      if (cfg.buckets) {
        return AoSketch(AoConfig{*cfg.buckets, cfg.c, cfg.s, th, hash, cfg.refresh_on_neglect});
      }
      return AoSketch::from_budget(cfg.memory_bytes, cfg.c, cfg.s, th, hash, cfg.refresh_on_neglect);
    case DetectorKind::strawman:
      if (cfg.buckets) {
        return CuckooBaseline(CuckooConfig{*cfg.buckets, cfg.cuckoo_cells, cfg.max_turns, th, hash});
      }
      return CuckooBaseline::from_budget(cfg.memory_bytes, th, hash, cfg.cuckoo_cells, cfg.max_turns);
    case DetectorKind::oracle:
      return IdealDetector(th, hash);
  }
  throw std::invalid_argument("unknown detector");
}

std::size_t detector_memory(const AnyDetector& det) {
  return std::visit(
      [](const auto& d) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(d)>, IdealDetector>) {
          return 0;
        } else {
          return d.memory_bytes();
        }
      },
      det);
}

std::uint64_t detector_drops(const AnyDetector& det) {
  if (const auto* cb = std::get_if<CuckooBaseline>(&det)) return cb->drops();
  return 0;
}

double RunResult::items_per_second() const {
  return seconds > 0.0 ? static_cast<double>(items) / seconds : 0.0;
}

RunResult run_trace(const RunConfig& cfg, const Trace& trace) {
  AnyDetector det = make_detector(cfg);
  RunResult result;
  result.items = trace.size();
  const auto start = Clock::now();
  std::visit(
      [&](auto& d) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
          if (auto r = d.observe(trace[i], i)) result.reports.push_back(*r);
        }
      },
      det);
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  result.drops = detector_drops(det);
  result.memory_bytes = detector_memory(det);
  return result;
}

EvalResult evaluate(std::span<const GapReport> reports, const Trace& trace, const RunConfig& cfg) {
  const std::vector<GapReport> truth = oracle_run(trace, cfg.thresholds(), cfg.hash_config());
  return score(reports, truth, trace.size());
}

GenerateSummary cmd_generate(const GenerateOptions& opts) {
  opts.spec.validate();
  Trace trace;
  std::vector<InjectedBurst> bursts;
  bool logged = false;
  if (opts.gap_ratio) {
    trace = gen_with_gap_ratio(opts.spec, *opts.gap_ratio, opts.loss.th);
  } else {
    Trace clean = gen_clean(opts.spec);
    if (opts.apply_loss || !opts.forced.empty()) {
      LossModel model = opts.loss;
      for (const auto& [flow, start, length] : opts.forced) {
        if (flow >= clean.flow_count()) {
          throw std::invalid_argument("forced burst flow index " + std::to_string(flow) +
                                      " out of range");
        }
        model.forced.push_back({std::string(clean.fid(static_cast<std::uint32_t>(flow))), start, length});
      }
      LossyTrace lossy = apply_loss(clean, model, opts.spec);
      trace = std::move(lossy.trace);
      bursts = std::move(lossy.bursts);
      logged = true;
    } else {
      trace = std::move(clean);
    }
  }

  save_trace(opts.out, trace, opts.format);
  if (logged) {
    const std::filesystem::path log_path =
        opts.bursts_out.value_or(std::filesystem::path(opts.out.string() + ".bursts.csv"));
    std::ofstream log = open_out(log_path);
    write_bursts_csv(log, trace, bursts);
  }

  std::size_t live_flows = 0;
  {
    std::vector<bool> seen(trace.flow_count(), false);
    for (const auto& r : trace.records()) {
      if (!seen[r.flow]) {
        seen[r.flow] = true;
        ++live_flows;
      }
    }
  }
  return {trace.size(), live_flows, bursts.size()};
}

RunResult cmd_run(const RunOptions& opts, std::ostream& summary) {
  opts.cfg.validate();
  const Trace trace = load_trace(opts.input, opts.cfg.seq_width, opts.format);
  if (trace.seq_width() != opts.cfg.seq_width) {
    throw std::invalid_argument("trace seq_width " + std::to_string(trace.seq_width()) +
                                " differs from --seq-width " + std::to_string(opts.cfg.seq_width));
  }
  RunResult result = run_trace(opts.cfg, trace);
  if (opts.output) {
    std::ofstream os = open_out(*opts.output);
    write_reports_csv(os, result.reports);
  }
  summary << "detector=" << to_string(opts.cfg.detector) << " items=" << result.items
          << " reports=" << result.reports.size() << " drops=" << result.drops
          << " memory_bytes=" << result.memory_bytes << " seconds=" << std::fixed
          << std::setprecision(6) << result.seconds << " items_per_sec=" << std::setprecision(0)
          << result.items_per_second() << '\n';
  summary.unsetf(std::ios::floatfield);
  return result;
}

void write_eval_json(std::ostream& os, const EvalResult& r) {
  os << std::setprecision(10) << "{\"reported\": " << r.reported << ", \"correct\": " << r.correct
     << ", \"truth\": " << r.truth << ", \"precision\": " << r.precision
     << ", \"recall\": " << r.recall << ", \"f1\": " << r.f1 << ", \"nri\": " << r.nri << "}\n";
}

void write_eval_csv(std::ostream& os, const EvalResult& r) {
  os << "reported,correct,truth,precision,recall,f1,nri\n"
     << std::setprecision(10) << r.reported << ',' << r.correct << ',' << r.truth << ','
     << r.precision << ',' << r.recall << ',' << r.f1 << ',' << r.nri << '\n';
}

EvalResult cmd_eval(const EvalOptions& opts, std::ostream& out) {
  opts.cfg.validate();
  const Trace trace = load_trace(opts.trace, opts.cfg.seq_width, opts.format);
  std::vector<GapReport> reports;
  {
    std::ifstream is(opts.reports, std::ios::binary);
    if (!is) throw IoError("cannot open " + opts.reports.string());
    reports = read_reports_csv(is);
  }
  const std::vector<GapReport> truth =
      oracle_run(trace, opts.cfg.thresholds(), opts.cfg.hash_config());
  const EvalResult result = score(reports, truth, trace.size());

  if (opts.annotate) {
    std::ofstream os = open_out(*opts.annotate);
    os << "pos,fid,var,seq_before,seq_after,bucket,cell\n";
    for (const GapReport& r : reports) {
      os << r.stream_position << ',' << encode_fid(trace[r.stream_position].fid) << ',' << r.var
         << ',' << r.seq_before << ',' << r.seq_after << ',' << r.bucket_index << ','
         << r.cell_index << '\n';
    }
  }
  if (opts.csv) {
    write_eval_csv(out, result);
  } else {
    write_eval_json(out, result);
  }
  return result;
}

std::vector<BenchRow> bench(const Trace& trace, const RunConfig& base,
                            const std::vector<DetectorKind>& detectors, std::size_t repetitions) {
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  std::vector<BenchRow> rows;
  std::vector<RunConfig> cfgs;
  for (DetectorKind kind : detectors) {
    RunConfig cfg = base;
    cfg.detector = kind;
    cfgs.push_back(cfg);
    rows.push_back(BenchRow{kind, 0.0, {}});
  }
  // One untimed warm-up pass, then repetitions interleaved across detectors
  // so that clock drift hits every detector alike.
  for (const RunConfig& cfg : cfgs) run_trace(cfg, trace);
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
      rows[k].samples.push_back(run_trace(cfgs[k], trace).items_per_second());
    }
  }
  for (BenchRow& row : rows) {
    std::vector<double> sorted = row.samples;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    row.median_items_per_second =
        n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  return rows;
}

std::string cpu_model() {
  std::ifstream is("/proc/cpuinfo");
  std::string line;
  while (std::getline(is, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        auto start = line.find_first_not_of(' ', colon + 1);
        return start == std::string::npos ? std::string{} : line.substr(start);
      }
    }
  }
  return "unknown";
}

std::vector<std::string> default_sweep_values(SweepParam param) {
  switch (param) {
    case SweepParam::w: return {"2", "4", "8", "16"};
    case SweepParam::ratio: return {"1:7", "2:6", "3:5", "4:4", "5:3", "6:2", "7:1"};
    case SweepParam::lf: return {"2", "4", "8", "16"};
  }
  return {};
}

std::vector<SweepRow> sweep(const Trace& trace, const RunConfig& base, SweepParam param,
                            const std::vector<std::string>& values) {
  const std::vector<GapReport> truth = oracle_run(trace, base.thresholds(), base.hash_config());
  std::vector<SweepRow> rows;
  for (const std::string& value : values) {
    RunConfig cfg = base;
    std::string name;
    switch (param) {
      case SweepParam::w:
        name = "w";
        cfg.detector = DetectorKind::so;
        cfg.w = parse_size(value);
        break;
      case SweepParam::ratio: {
        name = "s:c";
        cfg.detector = DetectorKind::ao;
        const auto colon = value.find(':');
        if (colon == std::string::npos) {
          throw std::invalid_argument("ratio values look like s:c, got '" + value + "'");
        }
        cfg.s = parse_size(value.substr(0, colon));
        cfg.c = parse_size(value.substr(colon + 1));
        cfg.w = cfg.s + cfg.c;
        break;
      }
      case SweepParam::lf:
        name = "lf";
        cfg.detector = DetectorKind::ao;
        cfg.lf = static_cast<unsigned>(parse_size(value));
        break;
    }
    const RunResult run = run_trace(cfg, trace);
    rows.push_back({name, value, score(run.reports, truth, trace.size())});
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "param,value,f1,precision,recall\n" << std::setprecision(6);
  for (const SweepRow& r : rows) {
    os << r.param << ',' << r.value << ',' << r.result.f1 << ',' << r.result.precision << ','
       << r.result.recall << '\n';
  }
}

void cmd_bounds(const BoundsOptions& opts, std::ostream& out) {
  std::ostringstream buf;
  buf << std::left << std::setw(6) << "M" << std::setw(8) << "d" << std::setw(14) << "exact"
      << std::setw(14) << "lower_bound" << "monte_carlo\n";
  for (std::uint64_t d : opts.d) {
    for (std::uint64_t m : opts.m) {
      buf << std::left << std::setw(6) << m << std::setw(8) << d << std::fixed
          << std::setprecision(8) << std::setw(14) << bounds::pdiff_exact(m, d);
      if (m < d) {
        buf << std::setw(14) << bounds::pdiff_lower_bound(m, d);
      } else {
        buf << std::setw(14) << "n/a";
      }
      const auto mc = bounds::pdiff_montecarlo(m, d, opts.trials, opts.seed ^ (m * 1315423911u + d));
      buf << mc.estimate << " +/- " << mc.std_error << '\n';
    }
  }
  buf << '\n' << std::setw(8) << "alpha" << std::setw(10) << "M" << std::setw(14) << "recall_lb"
      << "raw\n";
  for (double a : opts.alpha) {
    for (double m : opts.recall_m) {
      buf << std::left << std::setw(8) << std::setprecision(2) << a << std::setw(10)
          << std::setprecision(0) << m << std::setprecision(8) << std::setw(14)
          << bounds::recall_lower_bound(a, m) << bounds::recall_lower_bound_raw(a, m) << '\n';
    }
  }
  out << buf.str();
}

}  // namespace gapfilter::cli
