// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any selected criterion fails.
//
//   acceptance            run every criterion
//   acceptance --only 5   run one criterion

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "gapfilter/ao_filter.hpp"
#include "gapfilter/bounds.hpp"
#include "gapfilter/cli.hpp"
#include "gapfilter/core.hpp"
#include "gapfilter/oracle.hpp"
#include "gapfilter/so_filter.hpp"
#include "gapfilter/strawman.hpp"
#include "gapfilter/tracegen.hpp"
#include "support/reference.hpp"

using namespace gapfilter;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

using ReportKey = std::tuple<std::uint64_t, std::int64_t, Seq, Seq>;

std::vector<ReportKey> report_keys(const std::vector<GapReport>& reports) {
  std::vector<ReportKey> keys;
  keys.reserve(reports.size());
  for (const GapReport& r : reports) keys.emplace_back(r.stream_position, r.var, r.seq_after, r.seq_before);
  std::sort(keys.begin(), keys.end());
  return keys;
}

template <typename Detector>
std::vector<GapReport> run_detector(Detector& det, const Trace& trace) {
  std::vector<GapReport> out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (auto r = det.observe(trace[i], i)) out.push_back(*r);
  }
  return out;
}

// Draws separable traces until `count` are accepted.
template <typename Check>
Outcome separable_family(std::size_t count, testing::SeparableSpec spec, std::uint64_t seed,
                         Check check) {
  std::mt19937_64 rng(seed);
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t reports = 0;
  std::size_t items = 0;
  while (accepted < count) {
    spec.hash = HashConfig::from_master_seed(rng(), spec.hash.fp_bits);
    spec.fp32_seed = spec.hash.seed_fingerprint;
    auto trace = testing::make_separable_trace(spec, rng);
    if (!trace) {
      ++rejected;
      continue;
    }
    const std::vector<GapReport> truth = oracle_run(*trace, spec.th, spec.hash);
    std::string why;
    if (!check(*trace, spec, truth, why)) {
      return {false, "trace " + std::to_string(accepted) + ": " + why};
    }
    ++accepted;
    reports += truth.size();
    items += trace->size();
  }
  if (reports == 0) return {false, "no gaps in any trace"};
  return {true, std::to_string(accepted) + " traces, " + std::to_string(items) + " items, " +
                    std::to_string(reports) + " oracle reports, " + std::to_string(rejected) +
                    " draws rejected"};
}

bool same_reports(const std::vector<GapReport>& got, const std::vector<GapReport>& truth,
                  std::string& why) {
  if (report_keys(got) == report_keys(truth)) return true;
  why = std::to_string(got.size()) + " reports vs " + std::to_string(truth.size()) + " from the oracle";
  return false;
}

// 1 -------------------------------------------------------------------------
Outcome classifier_totality() {
  const Thresholds th(5, 30, 16);
  for (std::int64_t var = -100; var <= 100; ++var) {
    SituationKind want;
    if (var <= -30 || var >= 30) {
      want = SituationKind::not_matched;
    } else if (var <= 0) {
      want = SituationKind::neglect;
    } else if (var == 1) {
      want = SituationKind::normal;
    } else if (var <= 4) {
      want = SituationKind::minor_gap;
    } else {
      want = SituationKind::major_gap;
    }
    const Situation got = classify(var, th);
    if (got.kind != want) {
      return {false, "var=" + std::to_string(var) + " classified " + to_string(got.kind)};
    }
  }
  return {true, "201 values"};
}

// 2 -------------------------------------------------------------------------
Outcome oracle_equivalence_so() {
  testing::SeparableSpec spec;
  spec.flows = 64;
  spec.buckets = 256;
  spec.max_per_bucket = 8;
  spec.hash.fp_bits = 0;
  return separable_family(200, spec, 2002, [](const Trace& trace, const testing::SeparableSpec& sp,
                                               const std::vector<GapReport>& truth, std::string& why) {
    SoSketch so(SoConfig{sp.buckets, sp.max_per_bucket, sp.th, sp.hash, true});
    return same_reports(run_detector(so, trace), truth, why);
  });
}

// 3 -------------------------------------------------------------------------
Outcome oracle_equivalence_ao_strawman() {
  testing::SeparableSpec spec;
  spec.flows = 64;
  spec.buckets = 256;
  spec.max_per_bucket = 8;  // c + s
  spec.hash.fp_bits = 8;
  spec.unique_fp_per_bucket = true;
  spec.unique_fp32 = true;
  std::uint64_t drops = 0;
  Outcome out = separable_family(
      200, spec, 3003,
      [&](const Trace& trace, const testing::SeparableSpec& sp, const std::vector<GapReport>& truth,
          std::string& why) {
        AoSketch ao(AoConfig{sp.buckets, 5, 3, sp.th, sp.hash, true});
        if (!same_reports(run_detector(ao, trace), truth, why)) {
          why = "ao: " + why;
          return false;
        }
        CuckooBaseline straw(CuckooConfig{64, 4, 8, sp.th, sp.hash});
        const bool ok = same_reports(run_detector(straw, trace), truth, why);
        drops += straw.drops();
        if (!ok) why = "strawman: " + why + ", drops=" + std::to_string(straw.drops());
        return ok;
      });
  if (out.pass) out.detail += ", strawman drops " + std::to_string(drops);
  return out;
}

// 4 -------------------------------------------------------------------------
Outcome lru_lrd_reference() {
  constexpr std::uint64_t kSteps = 100000;
  const Thresholds th;
  std::mt19937_64 rng(4004);
  auto delta = [&] {
    // Mostly small moves, with regular excursions into every class.
    const std::int64_t span = 2 * th.t2() + 2;
    return rng() % 4 == 0 ? static_cast<std::int64_t>(rng() % 3000) - 1500
                          : static_cast<std::int64_t>(rng() % span) - th.t2() / 2;
  };

  std::size_t configs = 0;
  for (const std::size_t w : {1, 4, 8, 16}) {
    for (const bool refresh : {true, false}) {
      SoConfig cfg{1, w, th, HashConfig{}, refresh};
      cfg.hash.randomize = false;
      SoSketch so(cfg);
      testing::RefSoBucket ref(w, th, refresh);
      std::vector<Seq> cur(2 * w + 3, 0);
      for (auto& c : cur) c = static_cast<Seq>(rng() & 0xffff);
      for (std::uint64_t step = 0; step < kSteps; ++step) {
        const std::size_t f = rng() % cur.size();
        cur[f] = static_cast<Seq>((cur[f] + delta()) & 0xffff);
        const std::string fid = "f" + std::to_string(f);
        const auto got = so.observe({fid, cur[f]}, step);
        const auto want = ref.observe(cur[f]);
        if (got.has_value() != want.report || (got && got->var != want.var) ||
            so.snapshot(0) != ref.state()) {
          return {false, "so w=" + std::to_string(w) + " diverged at step " + std::to_string(step)};
        }
      }
      ++configs;
    }
  }

  for (const auto& [c, s] : {std::pair<std::size_t, std::size_t>{5, 3}, {6, 2}, {2, 6}, {12, 4}}) {
    for (const unsigned lf : {0u, 2u}) {
      AoConfig cfg{1, c, s, th, HashConfig{}, true};
      cfg.hash.randomize = false;
      cfg.hash.fp_bits = lf;
      AoSketch ao(cfg);
      testing::RefAoBucket ref(c, s, th, true);
      std::vector<Seq> cur(2 * (c + s) + 3, 0);
      for (auto& v : cur) v = static_cast<Seq>(rng() & 0xffff);
      for (std::uint64_t step = 0; step < kSteps; ++step) {
        const std::size_t f = rng() % cur.size();
        cur[f] = static_cast<Seq>((cur[f] + delta()) & 0xffff);
        const std::string fid = "f" + std::to_string(f);
        const auto got = ao.observe({fid, cur[f]}, step);
        const auto want = ref.observe(cur[f], fingerprint(fid, cfg.hash).value_or(0));
        bool same = got.has_value() == want.report && (!got || got->var == want.var);
        const AoBucketView v = ao.snapshot(0);
        auto cells_equal = [](const std::vector<AoCell>& a, const std::list<testing::RefAoCell>& b) {
          return a.size() == b.size() &&
                 std::equal(a.begin(), a.end(), b.begin(), [](const AoCell& x, const testing::RefAoCell& y) {
                   return x.seq == y.seq && x.fp == y.fp;
                 });
        };
        same = same && cells_equal(v.suspect, ref.suspect()) && cells_equal(v.civilian, ref.civilian());
        if (!same) {
          return {false, "ao c=" + std::to_string(c) + " s=" + std::to_string(s) + " diverged at step " +
                             std::to_string(step)};
        }
      }
      ++configs;
    }
  }
  return {true, std::to_string(configs) + " bucket configurations x " + std::to_string(kSteps) + " steps"};
}

// 5 -------------------------------------------------------------------------
Outcome memory_accuracy_ordering() {
  constexpr double kSlack = 0.02;
  const std::vector<std::size_t> kib{1, 2, 4, 8, 16, 32, 64, 128};
  const std::vector<cli::DetectorKind> kinds{cli::DetectorKind::ao, cli::DetectorKind::so,
                                             cli::DetectorKind::strawman};
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  // f1[detector][budget] summed over seeds
  std::map<cli::DetectorKind, std::vector<double>> f1_sum;
  for (auto k : kinds) f1_sum[k].assign(kib.size(), 0.0);
  std::vector<std::string> violations;

  for (std::uint64_t seed : seeds) {
    TraceSpec spec;
    spec.n_flows = 50000;
    spec.zipf = ZipfSizes{1.5, std::pow(50000.0, 1.5)};  // smallest flow keeps one item
    spec.n_windows = 10;
    spec.abnormal_ratio = 0.1;
    spec.seed = seed;
    LossModel loss;
    loss.base = 0.9;
    loss.single_loss = 0.001;
    Trace trace = apply_loss(gen_clean(spec), loss, spec).trace;

    cli::RunConfig base;
    base.seed = seed;
    const std::vector<GapReport> truth = oracle_run(trace, base.thresholds(), base.hash_config());

    for (std::size_t i = 0; i < kib.size(); ++i) {
      std::map<cli::DetectorKind, double> f1;
      for (auto k : kinds) {
        cli::RunConfig cfg = base;
        cfg.detector = k;
        cfg.memory_bytes = kib[i] * 1024;
        const cli::RunResult run = cli::run_trace(cfg, trace);
        f1[k] = score(run.reports, truth).f1;
        f1_sum[k][i] += f1[k];
      }
      const auto ao = f1[cli::DetectorKind::ao];
      const auto so = f1[cli::DetectorKind::so];
      const auto st = f1[cli::DetectorKind::strawman];
      if (ao + kSlack < so || so + kSlack < st) {
        violations.push_back("seed " + std::to_string(seed) + " " + std::to_string(kib[i]) + "KiB ao=" +
                             fmt(ao) + " so=" + fmt(so) + " strawman=" + fmt(st));
      }
    }
  }

  std::ostringstream table;
  table << "mean F1 by KiB (ao/so/strawman):";
  for (std::size_t i = 0; i < kib.size(); ++i) {
    table << ' ' << kib[i] << ':' << fmt(f1_sum[cli::DetectorKind::ao][i] / seeds.size(), 3) << '/'
          << fmt(f1_sum[cli::DetectorKind::so][i] / seeds.size(), 3) << '/'
          << fmt(f1_sum[cli::DetectorKind::strawman][i] / seeds.size(), 3);
  }

  // AO at X against the strawman at 8X, on seed-averaged F1.
  std::vector<std::string> short_of_8x;
  for (std::size_t i = 0; i + 3 < kib.size(); ++i) {
    const double ao = f1_sum[cli::DetectorKind::ao][i] / seeds.size();
    const double st8 = f1_sum[cli::DetectorKind::strawman][i + 3] / seeds.size();
    if (ao < st8) {
      short_of_8x.push_back("ao@" + std::to_string(kib[i]) + "KiB=" + fmt(ao) + " < strawman@" +
                            std::to_string(kib[i + 3]) + "KiB=" + fmt(st8));
    }
  }

  std::string detail = table.str();
  detail += violations.empty() ? "; ordering holds within " + fmt(kSlack, 2)
                               : "; ordering violated: " + violations.front() + " (+" +
                                     std::to_string(violations.size() - 1) + " more)";
  detail += short_of_8x.empty() ? "; 8x memory clause holds"
                                : "; 8x memory clause fails: " + short_of_8x.front() + " (+" +
                                      std::to_string(short_of_8x.size() - 1) + " more)";
  return {violations.empty() && short_of_8x.empty(), detail};
}

// 6 -------------------------------------------------------------------------
Outcome recall_bound_bridge() {
  constexpr std::size_t kBuckets = 1024;
  const Thresholds th;
  std::vector<std::string> parts;
  bool pass = true;
  for (const double alpha : {1.5, 2.0, 2.5}) {
    const double bound = bounds::recall_lower_bound(alpha, static_cast<double>(kBuckets));
    double worst = 1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      TraceSpec spec;
      spec.n_flows = 10000;
      spec.zipf = ZipfSizes{alpha, 1e6};
      spec.seed = seed;
      const Trace trace = gen_with_gap_ratio(spec, 0.1, th);
      const HashConfig hash = HashConfig::from_master_seed(seed, 0);
      SoSketch so(SoConfig{kBuckets, 8, th, hash, true});
      const EvalResult r = score(run_detector(so, trace), oracle_run(trace, th, hash));
      worst = std::min(worst, r.recall);
    }
    pass = pass && worst >= bound;
    parts.push_back("alpha=" + fmt(alpha, 1) + " min RR=" + fmt(worst) + " bound=" + fmt(bound));
  }
  std::string detail;
  for (const std::string& p : parts) detail += (detail.empty() ? "" : "; ") + p;
  return {pass, detail};
}

// 7 -------------------------------------------------------------------------
Outcome lemma_verification() {
  constexpr std::uint64_t kTrials = 100000;
  std::size_t cases = 0;
  double worst_sigmas = 0.0;
  for (const std::uint64_t d : {128, 1024, 8192}) {
    for (std::uint64_t m = 2; m <= 64; m += 2) {
      const double exact = bounds::pdiff_exact(m, d);
      const double lower = bounds::pdiff_lower_bound(m, d);
      if (!(lower <= exact)) {
        return {false, "bound " + std::to_string(lower) + " > exact " + std::to_string(exact) +
                           " at M=" + std::to_string(m) + " d=" + std::to_string(d)};
      }
      const auto mc = bounds::pdiff_montecarlo(m, d, kTrials, 7000 + m * 31 + d);
      // Binomial standard error at the exact probability.
      const double sigma = std::sqrt(exact * (1.0 - exact) / static_cast<double>(kTrials));
      const double dev = std::abs(mc.estimate - exact);
      if (dev > 4.0 * sigma) {
        return {false, "Monte Carlo " + fmt(mc.estimate, 6) + " vs exact " + fmt(exact, 6) + " at M=" +
                           std::to_string(m) + " d=" + std::to_string(d)};
      }
      if (sigma > 0) worst_sigmas = std::max(worst_sigmas, dev / sigma);
      ++cases;
    }
  }
  return {true, std::to_string(cases) + " (M, d) pairs, largest deviation " + fmt(worst_sigmas, 2) + " sigma"};
}

// 8 -------------------------------------------------------------------------
Outcome throughput_ordering() {
  TraceSpec spec;
  spec.n_flows = 50000;
  spec.abnormal_ratio = 0.1;
  spec.seed = 8;
  double harmonic = 0.0;
  for (std::size_t j = 1; j <= spec.n_flows; ++j) harmonic += std::pow(static_cast<double>(j), -1.5);
  // Sized so that roughly 10M items survive the loss.
  spec.zipf = ZipfSizes{1.5, 10.2e6 / harmonic};
  LossModel loss;
  loss.base = 0.9;
  loss.single_loss = 0.001;
  const Trace trace = apply_loss(gen_clean(spec), loss, spec).trace;

  cli::RunConfig base;
  base.memory_bytes = 64 * 1024;
  base.seed = 8;
  const auto rows = cli::bench(
      trace, base, {cli::DetectorKind::so, cli::DetectorKind::ao, cli::DetectorKind::strawman}, 5);
  const double so = rows[0].median_items_per_second;
  const double ao = rows[1].median_items_per_second;
  const double st = rows[2].median_items_per_second;
  const double so_ratio = so / st;
  const double ao_ratio = ao / st;
  return {so_ratio >= 1.5 && ao_ratio >= 1.2,
          std::to_string(trace.size()) + " items, 64 KiB, medians so=" + fmt(so / 1e6, 1) + "M/s ao=" +
              fmt(ao / 1e6, 1) + "M/s strawman=" + fmt(st / 1e6, 1) + "M/s, so/strawman=" +
              fmt(so_ratio, 2) + " (need 1.5) ao/strawman=" + fmt(ao_ratio, 2) + " (need 1.2), cpu " +
              cli::cpu_model()};
}

// 9 -------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("gapfilter-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::string tool = GAPFILTER_TOOL;
  const std::vector<std::string> files{"trace.csv",      "trace.csv.bursts.csv", "trace.bin",
                                       "so.csv",         "ao.csv",               "strawman.csv",
                                       "eval-so.json"};

  for (const char* run : {"a", "b"}) {
    const fs::path dir = root / run;
    fs::create_directories(dir);
    const std::string d = dir.string() + "/";
    const std::vector<std::string> cmds{
        "generate --flows 2000 --zipf-alpha 1.5 --zipf-scale 200000 --seed 9 --out " + d + "trace.csv",
        "generate --flows 2000 --zipf-alpha 1.5 --zipf-scale 200000 --seed 9 --format binary --out " + d +
            "trace.bin --bursts-out " + d + "trace.bin.bursts.csv",
        "run --detector so --seed 9 --input " + d + "trace.csv --output " + d + "so.csv",
        "run --detector ao --seed 9 --input " + d + "trace.bin --output " + d + "ao.csv",
        "run --detector strawman --seed 9 --input " + d + "trace.csv --output " + d + "strawman.csv",
        "eval --seed 9 --reports " + d + "so.csv --input " + d + "trace.csv > " + d + "eval-so.json",
    };
    for (const std::string& c : cmds) {
      const std::string line = "\"" + tool + "\" " + c + (c.find('>') == std::string::npos ? " > /dev/null" : "");
      if (std::system(line.c_str()) != 0) return {false, "command failed: " + c};
    }
  }

  std::size_t bytes = 0;
  for (const std::string& f : files) {
    const std::string a = slurp(root / "a" / f);
    const std::string b = slurp(root / "b" / f);
    if (a.empty()) return {false, f + " is empty"};
    if (a != b) return {false, f + " differs between runs"};
    bytes += a.size();
  }
  if (slurp(root / "a" / "trace.csv.bursts.csv") != slurp(root / "a" / "trace.bin.bursts.csv")) {
    return {false, "burst logs differ between csv and binary generation"};
  }
  fs::remove_all(root);
  return {true, std::to_string(files.size()) + " files, " + std::to_string(bytes) + " bytes identical"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion (1-9)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "classifier totality", 1, classifier_totality},
      {2, "oracle equivalence (so)", 30, oracle_equivalence_so},
      {3, "oracle equivalence (ao, strawman)", 60, oracle_equivalence_ao_strawman},
      {4, "LRU/LRD reference equivalence", 30, lru_lrd_reference},
      {5, "memory-accuracy ordering", 600, memory_accuracy_ordering},
      {6, "recall bound bridge", 300, recall_bound_bridge},
      {7, "collision probability bound", 120, lemma_verification},
      {8, "throughput ordering", 300, throughput_ordering},
      {9, "determinism", 120, determinism},
  };

  int failures = 0;
  bool ran = false;
  for (const Criterion& c : all) {
    if (only != 0 && c.id != only) continue;
    ran = true;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) {
      out.pass = false;
      out.detail += "; over the " + fmt(c.limit_seconds, 0) + " s limit";
    }
    std::cout << (out.pass ? "PASS" : "FAIL") << " #" << c.id << ' ' << c.name << " [" << fmt(secs, 2)
              << " s] " << out.detail << std::endl;
    if (!out.pass) ++failures;
  }
  if (!ran) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
