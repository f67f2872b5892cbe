#include <doctest.h>

#include <stdexcept>

#include <random>
#include <string>
#include <vector>

#include "gapfilter/oracle.hpp"
#include "gapfilter/so_filter.hpp"
#include "support/reference.hpp"

using namespace gapfilter;
using gapfilter::testing::RefSoBucket;

namespace {

SoConfig one_bucket(std::size_t w, bool refresh = true) {
  SoConfig cfg;
  cfg.buckets = 1;
  cfg.cells = w;
  cfg.hash.randomize = false;
  cfg.refresh_on_neglect = refresh;
  return cfg;
}

}  // namespace

TEST_CASE("so: first item inserts, consecutive items are normal") {
  SoSketch so(one_bucket(4));
  CHECK_FALSE(so.observe({"a", 10}, 0));
  CHECK(so.snapshot(0) == std::vector<Seq>{10});
  CHECK_FALSE(so.observe({"a", 11}, 1));
  CHECK(so.snapshot(0) == std::vector<Seq>{11});
}

TEST_CASE("so: major gap is reported with position and cell values") {
  SoSketch so(one_bucket(4));
  so.observe({"a", 100}, 0);
  const auto r = so.observe({"a", 107}, 5);
  REQUIRE(r);
  CHECK(r->var == 7);
  CHECK(r->seq_before == 100);
  CHECK(r->seq_after == 107);
  CHECK(r->stream_position == 5);
  CHECK(r->bucket_index == 0);
  CHECK(r->cell_index == 0);
  CHECK_FALSE(so.observe({"a", 110}, 6));  // minor gap (3)
  CHECK(so.snapshot(0) == std::vector<Seq>{110});
}

TEST_CASE("so: far values insert at the front and evict the LRU cell") {
  SoSketch so(one_bucket(3));
  so.observe({"a", 100}, 0);
  so.observe({"b", 1000}, 1);
  so.observe({"c", 5000}, 2);
  CHECK(so.snapshot(0) == std::vector<Seq>{5000, 1000, 100});
  so.observe({"a", 101}, 3);  // refresh a
  CHECK(so.snapshot(0) == std::vector<Seq>{101, 5000, 1000});
  so.observe({"d", 20000}, 4);
  CHECK(so.snapshot(0) == std::vector<Seq>{20000, 101, 5000});
}

TEST_CASE("so: max rule keeps the larger value on reorder") {
  SoSketch so(one_bucket(2));
  so.observe({"a", 100}, 0);
  so.observe({"b", 9000}, 1);
  so.observe({"a", 95}, 2);  // neglect, refreshes position only
  CHECK(so.snapshot(0) == std::vector<Seq>{100, 9000});

  SoSketch keep(one_bucket(2, false));
  keep.observe({"a", 100}, 0);
  keep.observe({"b", 9000}, 1);
  keep.observe({"a", 95}, 2);
  CHECK(keep.snapshot(0) == std::vector<Seq>{9000, 100});
}

TEST_CASE("so: closest cell tie-break favours the positive side") {
  SoSketch so(one_bucket(4));
  so.observe({"x", 100}, 0);
  so.observe({"y", 110}, 1);  // var 10 against 100: major gap, updates that cell
  CHECK(so.snapshot(0) == std::vector<Seq>{110});
  SoSketch two(one_bucket(4));
  two.observe({"x", 100}, 0);
  two.observe({"y", 1000}, 1);
  two.observe({"z", 1100}, 2);
  // 1050 sits 50 from both stored neighbours: not matched either way.
  CHECK_FALSE(two.observe({"w", 1050}, 3));
  CHECK(two.snapshot(0).size() == 4);
  SoSketch tie(one_bucket(4));
  tie.observe({"x", 100}, 0);
  tie.observe({"y", 140}, 1);
  // 120 is 20 above 100 and 20 below 140: the positive side (100) wins.
  const auto r = tie.observe({"z", 120}, 2);
  REQUIRE(r);
  CHECK(r->seq_before == 100);
  CHECK(r->var == 20);
  CHECK(tie.snapshot(0) == std::vector<Seq>{120, 140});
}

TEST_CASE("so: wrap-around at 16 bits") {
  SoSketch so(one_bucket(2));
  so.observe({"a", 65534}, 0);
  const auto r = so.observe({"a", 4}, 1);
  REQUIRE(r);
  CHECK(r->var == 6);
}

TEST_CASE("so: budget sizing") {
  const Thresholds th;
  const HashConfig hash;
  const SoSketch so = SoSketch::from_budget(64 * 1024, 8, th, hash);
  CHECK(so.buckets() == 4096);
  CHECK(so.memory_bytes() == 64 * 1024);
  const SoSketch odd = SoSketch::from_budget(1000, 8, th, hash);
  CHECK(odd.buckets() == 62);
  CHECK(odd.memory_bytes() <= 1000);
  CHECK(SoSketch::cell_bytes(Thresholds(5, 30, 24)) == 3);
  CHECK_THROWS_AS(SoSketch::from_budget(15, 8, th, hash), std::invalid_argument);
  SoConfig bad;
  bad.cells = 0;
  CHECK_THROWS_AS(SoSketch{bad}, std::invalid_argument);
}

TEST_CASE("so: property, single bucket matches the list reference") {
  std::mt19937_64 rng(11);
  for (int round = 0; round < 40; ++round) {
    const std::size_t w = 1 + rng() % 20;
    const bool refresh = rng() & 1;
    // Every fourth round uses a t2 too wide for 16-bit scan keys.
    const Thresholds th = round % 4 == 3 ? Thresholds(5, 40000 + rng() % 20000, 24)
                                         : Thresholds(2 + rng() % 6, 12 + rng() % 40, 8 + rng() % 9);
    SoConfig cfg = one_bucket(w, refresh);
    cfg.th = th;
    cfg.hash.randomize = rng() & 1;
    SoSketch so(cfg);
    RefSoBucket ref(w, th, refresh);
    const std::size_t flows = 1 + rng() % 20;
    std::vector<Seq> cur(flows);
    for (auto& c : cur) c = static_cast<Seq>(rng() & seq_mask(th.seq_width()));
    for (std::uint64_t step = 0; step < 2000; ++step) {
      const std::size_t f = rng() % flows;
      const std::int64_t delta = static_cast<std::int64_t>(rng() % (2 * th.t2() + 2)) - th.t2() / 2;
      cur[f] = static_cast<Seq>((cur[f] + delta) & seq_mask(th.seq_width()));
      const std::string fid = "flow" + std::to_string(f);
      const Seq s = randomize_seq(fid, cur[f], cfg.hash, th.seq_width());
      const auto got = so.observe({fid, cur[f]}, step);
      const auto want = ref.observe(s);
      REQUIRE(got.has_value() == want.report);
      if (got) REQUIRE(got->var == want.var);
      REQUIRE(so.snapshot(0) == ref.state());
    }
  }
}

TEST_CASE("so: with one flow per bucket, reports equal the oracle") {
  // Every flow sits alone in its bucket because d is huge relative to flows.
  std::mt19937_64 rng(5);
  const Thresholds th;
  const HashConfig hash = HashConfig::from_master_seed(5, 0);
  SoSketch so(SoConfig{1 << 20, 8, th, hash, true});
  IdealDetector ideal(th, hash);
  std::vector<Seq> cur(50, 0);
  for (std::uint64_t pos = 0; pos < 20000; ++pos) {
    const std::size_t f = rng() % cur.size();
    cur[f] = static_cast<Seq>((cur[f] + 1 + (rng() % 10 == 0 ? rng() % 40 : 0)) & 0xffff);
    const std::string fid = "f" + std::to_string(f);
    const auto a = so.observe({fid, cur[f]}, pos);
    const auto b = ideal.observe({fid, cur[f]}, pos);
    REQUIRE(a.has_value() == b.has_value());
    if (a) REQUIRE(a->var == b->var);
  }
}
