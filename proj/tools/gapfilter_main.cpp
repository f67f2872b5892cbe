// gapfilter: generate synthetic loss traces, run gap detectors over them,
// score the reports and print the analytical bounds.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "gapfilter/cli.hpp"
#include "gapfilter/tracegen.hpp"

namespace cli = gapfilter::cli;
using gapfilter::TraceFormat;

namespace {

TraceFormat parse_format(const std::string& s) {
  if (s == "csv") return TraceFormat::csv;
  if (s == "binary" || s == "bin") return TraceFormat::binary;
  throw std::invalid_argument("unknown trace format '" + s + "' (csv, binary)");
}

struct RunFlags {
  std::string detector = "so";
  std::size_t memory_bytes = 64 * 1024;
  std::size_t buckets = 0;
  std::size_t w = 8;
  std::size_t c = 5;
  std::size_t s = 3;
  unsigned lf = 8;
  std::int64_t t1 = 5;
  std::int64_t t2 = 30;
  unsigned seq_width = 16;
  std::uint64_t seed = cli::default_seed();
  bool no_randomize = false;
  bool no_refresh_on_neglect = false;
  std::size_t max_turns = 8;
  CLI::Option* w_opt = nullptr;

  void attach(CLI::App* app, bool with_detector = true) {
    if (with_detector) app->add_option("--detector", detector, "so | ao | strawman | oracle");
    app->add_option("--memory-bytes", memory_bytes, "detector memory budget in bytes");
    app->add_option("--buckets", buckets, "explicit bucket count (overrides --memory-bytes)");
    w_opt = app->add_option("--w", w, "cells per bucket (so; c + s for ao)");
    app->add_option("--c", c, "civilian cells per bucket (ao)");
    app->add_option("--s", s, "suspect cells per bucket (ao)");
    app->add_option("--lf", lf, "fingerprint bits (ao)");
    app->add_option("--t1", t1, "minor/major gap boundary");
    app->add_option("--t2", t2, "matched/not-matched boundary");
    app->add_option("--seq-width", seq_width, "sequence number width in bits");
    app->add_option("--seed", seed, "master hash seed (default: $GAPFILTER_SEED or 1)");
    app->add_flag("--no-randomize", no_randomize, "disable per-flow sequence randomizing");
    app->add_flag("--no-refresh-on-neglect", no_refresh_on_neglect,
                  "neglect-class matches keep their LRU position");
    app->add_option("--max-turns", max_turns, "cuckoo kick bound (strawman)");
  }

  cli::RunConfig config() const {
    cli::RunConfig cfg;
    cfg.detector = cli::parse_detector(detector);
    cfg.memory_bytes = memory_bytes;
    if (buckets) cfg.buckets = buckets;
    cfg.c = c;
    cfg.s = s;
    // For ao the bucket width follows the region split unless --w is given.
    cfg.w = cfg.detector == cli::DetectorKind::ao && w_opt->count() == 0 ? c + s : w;
    cfg.lf = lf;
    cfg.t1 = t1;
    cfg.t2 = t2;
    cfg.seq_width = seq_width;
    cfg.seed = seed;
    cfg.randomize = !no_randomize;
    cfg.refresh_on_neglect = !no_refresh_on_neglect;
    cfg.max_turns = max_turns;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flow-gap detection toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic trace and its burst log");
  gapfilter::cli::GenerateOptions gen_opts;
  gen_opts.spec.seed = cli::default_seed();
  std::string gen_format = "csv";
  std::string interleave = "shuffle";
  std::string burst_mode = "per-item";
  double zipf_alpha = 0.0;
  double zipf_scale = 0.0;
  std::int64_t gen_t1 = 5;
  std::int64_t gen_t2 = 30;
  bool no_loss = false;
  bool no_random_bursts = false;
  double gap_ratio = -1.0;
  std::vector<std::string> forced;
  std::string bursts_out;
  gen->add_option("--flows", gen_opts.spec.n_flows, "number of flows N");
  gen->add_option("--length", gen_opts.spec.flow_length, "items per flow (uniform sizes)");
  gen->add_option("--zipf-alpha", zipf_alpha, "Zipf exponent in (1, 3]; enables Zipf sizes");
  gen->add_option("--zipf-scale", zipf_scale, "largest flow size L0");
  gen->add_option("--windows", gen_opts.spec.n_windows, "number of windows n_T");
  gen->add_option("--abnormal-ratio", gen_opts.spec.abnormal_ratio, "abnormal flow ratio r");
  gen->add_option("--interleave", interleave, "round-robin | shuffle");
  gen->add_option("--seq-width", gen_opts.spec.seq_width, "sequence number width in bits");
  gen->add_option("--seed", gen_opts.spec.seed, "generation seed (default: $GAPFILTER_SEED or 1)");
  gen->add_option("--base", gen_opts.loss.base, "burst base b");
  gen->add_option("--single-loss", gen_opts.loss.single_loss, "single-item loss probability p");
  gen->add_option("--burst-mode", burst_mode, "per-item | once-per-window");
  gen->add_option("--t1", gen_t1, "shortest burst length");
  gen->add_option("--t2", gen_t2, "burst lengths stay below this");
  gen->add_flag("--no-loss", no_loss, "write the clean trace");
  gen->add_flag("--no-random-bursts", no_random_bursts, "only forced bursts");
  gen->add_option("--force-burst", forced, "FLOW:SEQ:LEN (flow index in generation order)");
  gen->add_option("--gap-ratio", gap_ratio, "generate with per-item gap ratio beta instead of loss");
  gen->add_option("--out", gen_opts.out, "trace output path")->required();
  gen->add_option("--bursts-out", bursts_out, "burst log path (default: <out>.bursts.csv)");
  gen->add_option("--format", gen_format, "csv | binary");

  // run
  auto* run = app.add_subcommand("run", "run one detector over a trace file");
  RunFlags run_flags;
  run_flags.attach(run);
  std::string run_input;
  std::string run_output;
  std::string run_format;
  run->add_option("--input", run_input, "trace path")->required();
  run->add_option("--output", run_output, "reports CSV path");
  run->add_option("--format", run_format, "csv | binary (default: detect)");

  // eval
  auto* eval = app.add_subcommand("eval", "score a reports CSV against the oracle");
  RunFlags eval_flags;
  eval_flags.attach(eval, false);
  std::string eval_reports;
  std::string eval_trace;
  std::string eval_format;
  std::string eval_annotate;
  bool eval_csv = false;
  eval->add_option("--reports", eval_reports, "reports CSV")->required();
  eval->add_option("--input", eval_trace, "trace path")->required();
  eval->add_option("--format", eval_format, "csv | binary (default: detect)");
  eval->add_option("--annotate", eval_annotate, "write reports joined with their flow id");
  eval->add_flag("--csv", eval_csv, "CSV instead of JSON");

  // bench
  auto* bench = app.add_subcommand("bench", "throughput of each detector on an in-memory trace");
  RunFlags bench_flags;
  bench_flags.attach(bench, false);
  std::string bench_input;
  std::vector<std::string> bench_detectors{"so", "ao", "strawman"};
  std::size_t repetitions = 5;
  std::size_t bench_flows = 50000;
  double bench_alpha = 1.5;
  std::size_t bench_items = 10'000'000;
  bench->add_option("--input", bench_input, "trace path (default: synthetic Zipf trace)");
  bench->add_option("--detectors", bench_detectors, "detectors to time");
  bench->add_option("--repetitions", repetitions, "runs per detector; the median is reported");
  bench->add_option("--flows", bench_flows, "synthetic trace flows");
  bench->add_option("--zipf-alpha", bench_alpha, "synthetic trace Zipf exponent");
  bench->add_option("--items", bench_items, "approximate synthetic trace size");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "F1 across a parameter grid");
  RunFlags sweep_flags;
  sweep_flags.attach(sweep, false);
  std::string sweep_input;
  std::string sweep_param = "w";
  std::vector<std::string> sweep_values;
  sweep->add_option("--input", sweep_input, "trace path")->required();
  sweep->add_option("--param", sweep_param, "w | ratio | lf");
  sweep->add_option("--values", sweep_values, "grid values (ratio as s:c)");

  // bounds
  auto* bnd = app.add_subcommand("bounds", "collision-probability and recall bound table");
  cli::BoundsOptions bounds_opts;
  bounds_opts.seed = cli::default_seed();
  bnd->add_option("--M", bounds_opts.m, "flow counts");
  bnd->add_option("--d", bounds_opts.d, "bucket counts");
  bnd->add_option("--alpha", bounds_opts.alpha, "Zipf exponents for the recall bound");
  bnd->add_option("--recall-M", bounds_opts.recall_m, "M values for the recall bound");
  bnd->add_option("--trials", bounds_opts.trials, "Monte Carlo trials");
  bnd->add_option("--seed", bounds_opts.seed, "Monte Carlo seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*gen) {
      if (zipf_alpha > 0.0 || zipf_scale > 0.0) {
        gen_opts.spec.zipf = gapfilter::ZipfSizes{zipf_alpha, zipf_scale};
      }
      if (interleave == "shuffle") {
        gen_opts.spec.interleave = gapfilter::Interleave::shuffle;
      } else if (interleave == "round-robin") {
        gen_opts.spec.interleave = gapfilter::Interleave::round_robin;
      } else {
        throw std::invalid_argument("unknown interleave '" + interleave + "'");
      }
      if (burst_mode == "per-item") {
        gen_opts.loss.mode = gapfilter::BurstMode::per_item;
      } else if (burst_mode == "once-per-window") {
        gen_opts.loss.mode = gapfilter::BurstMode::once_per_window;
      } else {
        throw std::invalid_argument("unknown burst mode '" + burst_mode + "'");
      }
      gen_opts.loss.th = gapfilter::Thresholds(gen_t1, gen_t2, gen_opts.spec.seq_width);
      gen_opts.loss.random_bursts = !no_random_bursts;
      gen_opts.apply_loss = !no_loss;
      if (gap_ratio >= 0.0) gen_opts.gap_ratio = gap_ratio;
      for (const std::string& f : forced) {
        std::size_t flow = 0;
        unsigned long start = 0;
        unsigned long len = 0;
        char c1 = 0;
        char c2 = 0;
        std::istringstream is(f);
        if (!(is >> flow >> c1 >> start >> c2 >> len) || c1 != ':' || c2 != ':') {
          throw std::invalid_argument("--force-burst expects FLOW:SEQ:LEN, got '" + f + "'");
        }
        gen_opts.forced.emplace_back(flow, static_cast<gapfilter::Seq>(start),
                                     static_cast<std::uint32_t>(len));
      }
      if (!bursts_out.empty()) gen_opts.bursts_out = bursts_out;
      gen_opts.format = parse_format(gen_format);
      const auto summary = cli::cmd_generate(gen_opts);
      std::cout << "items=" << summary.items << " flows=" << summary.flows
                << " bursts=" << summary.bursts << '\n';
    } else if (*run) {
      cli::RunOptions opts;
      opts.cfg = run_flags.config();
      opts.input = run_input;
      if (!run_format.empty()) opts.format = parse_format(run_format);
      if (!run_output.empty()) opts.output = run_output;
      cli::cmd_run(opts, std::cout);
    } else if (*eval) {
      cli::EvalOptions opts;
      opts.cfg = eval_flags.config();
      opts.reports = eval_reports;
      opts.trace = eval_trace;
      if (!eval_format.empty()) opts.format = parse_format(eval_format);
      if (!eval_annotate.empty()) opts.annotate = eval_annotate;
      opts.csv = eval_csv;
      cli::cmd_eval(opts, std::cout);
    } else if (*bench) {
      cli::RunConfig base = bench_flags.config();
      gapfilter::Trace trace;
      if (!bench_input.empty()) {
        trace = gapfilter::load_trace(bench_input, base.seq_width);
      } else {
        gapfilter::TraceSpec spec;
        spec.n_flows = bench_flows;
        spec.seq_width = base.seq_width;
        spec.seed = base.seed;
        // Scale L0 so the Zipf sizes sum to roughly the requested item count.
        double harmonic = 0.0;
        for (std::size_t j = 1; j <= bench_flows; ++j) harmonic += std::pow(double(j), -bench_alpha);
        spec.zipf = gapfilter::ZipfSizes{bench_alpha, double(bench_items) / harmonic};
        trace = gapfilter::gen_clean(spec);
      }
      std::vector<cli::DetectorKind> kinds;
      for (const auto& d : bench_detectors) kinds.push_back(cli::parse_detector(d));
      std::cout << "cpu=" << cli::cpu_model() << " items=" << trace.size()
                << " memory_bytes=" << base.memory_bytes << " repetitions=" << repetitions << '\n';
      for (const auto& row : cli::bench(trace, base, kinds, repetitions)) {
        std::cout << cli::to_string(row.detector) << " items_per_sec=" << std::fixed
                  << std::setprecision(0) << row.median_items_per_second << '\n';
      }
    } else if (*sweep) {
      cli::RunConfig base = sweep_flags.config();
      cli::SweepParam param;
      if (sweep_param == "w") {
        param = cli::SweepParam::w;
      } else if (sweep_param == "ratio") {
        param = cli::SweepParam::ratio;
      } else if (sweep_param == "lf") {
        param = cli::SweepParam::lf;
      } else {
        throw std::invalid_argument("unknown sweep parameter '" + sweep_param + "'");
      }
      if (sweep_values.empty()) sweep_values = cli::default_sweep_values(param);
      const gapfilter::Trace trace = gapfilter::load_trace(sweep_input, base.seq_width);
      cli::write_sweep_csv(std::cout, cli::sweep(trace, base, param, sweep_values));
    } else if (*bnd) {
      cli::cmd_bounds(bounds_opts, std::cout);
    }
  } catch (const gapfilter::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitIo;
  } catch (const gapfilter::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitIo;
  }
  return cli::kExitOk;
}
