#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lssim/engine.hpp"
#include "lssim/placement.hpp"
#include "lssim/workload.hpp"
#include "test_util.hpp"

using namespace lssim;

namespace {

Segment reclaimed_class_segment(std::uint32_t class_id, Clock created) {
  Segment seg;
  seg.id = 0;
  seg.class_id = class_id;
  seg.creation_time = created;
  seg.capacity_blocks = 8;
  seg.seal_time = created;
  return seg;
}

BlockMeta block_written_at(Clock t) {
  return BlockMeta{0, t, true};
}

SepBitOptions exact_options() {
  SepBitOptions opts;
  opts.index_mode = SepBitIndexMode::kExactMap;
  return opts;
}

// Drives the lifespan estimate to a fixed value through class-1 reclaims.
void force_ell(SepBitPlacement& sepbit, std::uint64_t ell, Clock now = 100000) {
  for (std::uint32_t i = 0; i < sepbit.options().window; ++i) {
    sepbit.notify_reclaim(reclaimed_class_segment(1, now - ell), now);
  }
  REQUIRE(sepbit.ell() == doctest::Approx(static_cast<double>(ell)));
}

}  // namespace

TEST_CASE("nosep and sepgc classifications") {
  NoSepPlacement nosep;
  CHECK(nosep.on_user_write(1, std::nullopt) == 0);
  CHECK(nosep.on_user_write(1, 17) == 0);
  CHECK(nosep.on_gc_write(block_written_at(0), 0, 10) == 0);

  SepGcPlacement sepgc;
  CHECK(sepgc.on_user_write(1, std::nullopt) == 0);
  CHECK(sepgc.on_user_write(1, 17) == 0);
  CHECK(sepgc.on_gc_write(block_written_at(0), 0, 10) == 1);
  CHECK(sepgc.on_gc_write(block_written_at(0), 1, 10) == 1);
}

TEST_CASE("sepbit user writes split on the lifespan threshold") {
  SUBCASE("cold start treats any update as short-lived") {
    SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
    CHECK(std::isinf(sepbit.ell()));
    CHECK(sepbit.on_user_write(1, 123456) == 1);
  }

  SUBCASE("first writes are long-lived") {
    SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
    CHECK(sepbit.on_user_write(1, std::nullopt) == 2);
  }

  SUBCASE("lifespans at or above ell are long-lived") {
    SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
    force_ell(sepbit, 1000);
    CHECK(sepbit.on_user_write(1, 1500) == 2);
    CHECK(sepbit.on_user_write(1, 1000) == 2);  // strict v < ell
    CHECK(sepbit.on_user_write(1, 999) == 1);
  }
}

TEST_CASE("sepbit gc writes group by origin and age") {
  SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
  force_ell(sepbit, 1000);
  const Clock now = 200000;

  CHECK(sepbit.on_gc_write(block_written_at(now - 99999), 1, now) == 3);
  CHECK(sepbit.on_gc_write(block_written_at(now - 2000), 4, now) == 4);
  CHECK(sepbit.on_gc_write(block_written_at(now - 5000), 2, now) == 5);
  CHECK(sepbit.on_gc_write(block_written_at(now - 20000), 2, now) == 6);
  // Boundary ages land in the upper class.
  CHECK(sepbit.on_gc_write(block_written_at(now - 4000), 2, now) == 5);
  CHECK(sepbit.on_gc_write(block_written_at(now - 16000), 2, now) == 6);
}

TEST_CASE("sepbit gc class is monotone in age") {
  SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
  force_ell(sepbit, 500);
  const Clock now = 300000;
  std::uint32_t prev = 0;
  for (std::uint64_t g = 0; g < 20000; g += 7) {
    const std::uint32_t cls =
        sepbit.on_gc_write(block_written_at(now - g), 2, now);
    CHECK(cls >= std::max<std::uint32_t>(prev, 4));
    CHECK(cls <= 6);
    prev = cls;
  }
}

TEST_CASE("ell refreshes after every window of class-1 reclaims") {
  SUBCASE("sixteen equal lifespans") {
    SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
    force_ell(sepbit, 1000);
  }

  SUBCASE("fifteen reclaims leave the estimate untouched") {
    SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
    for (int i = 0; i < 15; ++i) {
      sepbit.notify_reclaim(reclaimed_class_segment(1, 0), 1000);
    }
    CHECK(std::isinf(sepbit.ell()));
    // Non-class-1 victims never count toward the window.
    sepbit.notify_reclaim(reclaimed_class_segment(2, 0), 1000);
    CHECK(std::isinf(sepbit.ell()));
    sepbit.notify_reclaim(reclaimed_class_segment(1, 0), 1000);
    CHECK(sepbit.ell() == doctest::Approx(1000.0));
  }

  SUBCASE("lifespans 1..16 average to 8.5") {
    SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, exact_options());
    const Clock now = 1000;
    for (std::uint64_t lifespan = 1; lifespan <= 16; ++lifespan) {
      sepbit.notify_reclaim(reclaimed_class_segment(1, now - lifespan), now);
    }
    CHECK(sepbit.ell() == doctest::Approx(8.5));
  }
}

TEST_CASE("uw separates user writes only") {
  SepBitPlacement uw(SepBitPlacement::Layout::kUserOnly, exact_options());
  force_ell(uw, 1000);
  CHECK(uw.on_user_write(1, 10) == 1);
  CHECK(uw.on_user_write(1, std::nullopt) == 2);
  CHECK(uw.on_gc_write(block_written_at(0), 1, 50000) == 3);
  CHECK(uw.on_gc_write(block_written_at(0), 2, 50000) == 3);
}

TEST_CASE("gw separates gc writes only") {
  SepBitPlacement gw(SepBitPlacement::Layout::kGcOnly, exact_options());
  force_ell(gw, 1000);
  const Clock now = 200000;
  CHECK(gw.on_user_write(1, 1) == 1);
  CHECK(gw.on_user_write(1, std::nullopt) == 1);
  CHECK(gw.on_gc_write(block_written_at(now - 100), 1, now) == 2);
  CHECK(gw.on_gc_write(block_written_at(now - 5000), 1, now) == 3);
  CHECK(gw.on_gc_write(block_written_at(now - 99999), 1, now) == 4);
}

TEST_CASE("threshold scaling halves and doubles every separation bound") {
  SepBitOptions half = exact_options();
  half.threshold_scale = 0.5;
  SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, half);
  force_ell(sepbit, 1000);
  CHECK(sepbit.on_user_write(1, 499) == 1);
  CHECK(sepbit.on_user_write(1, 500) == 2);
  const Clock now = 100000;
  CHECK(sepbit.on_gc_write(block_written_at(now - 1999), 2, now) == 4);
  CHECK(sepbit.on_gc_write(block_written_at(now - 2000), 2, now) == 5);
}

TEST_CASE("threshold generators reproduce the default ladder") {
  const auto m1 = sepbit_multipliers_method1(3);
  REQUIRE(m1.size() == 2);
  CHECK(m1[0] == doctest::Approx(4.0));
  CHECK(m1[1] == doctest::Approx(16.0));

  const auto m1_wide = sepbit_multipliers_method1(5);
  REQUIRE(m1_wide.size() == 4);
  CHECK(m1_wide[0] == doctest::Approx(2.0));
  CHECK(m1_wide[3] == doctest::Approx(16.0));

  const auto m2 = sepbit_multipliers_method2(5);
  REQUIRE(m2.size() == 4);
  CHECK(m2[0] == doctest::Approx(4.0));
  CHECK(m2[3] == doctest::Approx(256.0));
}

TEST_CASE("adaptive gc thresholds follow class-3 and class-4 lifespans") {
  SepBitOptions opts = exact_options();
  opts.adaptive_gc_thresholds = true;
  SepBitPlacement sepbit(SepBitPlacement::Layout::kFull, opts);
  force_ell(sepbit, 1000);
  const Clock now = 1000000;
  for (int i = 0; i < 16; ++i) {
    sepbit.notify_reclaim(reclaimed_class_segment(3, now - 2000), now);
    sepbit.notify_reclaim(reclaimed_class_segment(4, now - 3000), now);
  }
  // Thresholds are now l3 = 2000 and l3 + l4 = 5000.
  CHECK(sepbit.on_gc_write(block_written_at(now - 1999), 2, now) == 4);
  CHECK(sepbit.on_gc_write(block_written_at(now - 2000), 2, now) == 5);
  CHECK(sepbit.on_gc_write(block_written_at(now - 4999), 2, now) == 5);
  CHECK(sepbit.on_gc_write(block_written_at(now - 5000), 2, now) == 6);
}

TEST_CASE("dac promotes on user writes and demotes on gc writes") {
  DacPlacement dac(6);
  CHECK(dac.on_user_write(9, std::nullopt) == 1);  // 0 promoted to 1
  CHECK(dac.on_user_write(9, 5) == 2);
  for (int i = 0; i < 10; ++i) dac.on_user_write(9, 1);
  CHECK(dac.on_user_write(9, 1) == 5);  // clamped at the top

  for (int i = 0; i < 10; ++i) dac.on_gc_write(block_written_at(0), 5, 0);
  CHECK(dac.on_gc_write(block_written_at(0), 0, 0) == 0);  // clamped at 0

  DacPlacement fresh(6);
  CHECK(fresh.on_gc_write(BlockMeta{7, 0, true}, 0, 0) == 0);
}

TEST_CASE("fk assigns by bytes until invalidation") {
  const std::uint64_t s = 512ull << 20;
  CHECK(fk_assign(s / 2, s, 6) == 1);
  CHECK(fk_assign(3 * s, s, 6) == 3);
  CHECK(fk_assign(10 * s, s, 6) == 6);
  CHECK(fk_assign(5 * s, s, 6) == 5);
  CHECK(fk_assign(5 * s + 1, s, 6) == 6);
  CHECK(fk_assign(0, s, 6) == 1);
}

TEST_CASE("fk placement uses annotated clocks, residual on gc") {
  // Stream [A B A]: write 0 invalidated at clock 2.
  std::vector<Clock> inv{2, kNeverInvalidated, kNeverInvalidated};
  VolumeConfig cfg;
  cfg.segment_size = 4096;  // one block per segment: class = blocks ahead
  cfg.num_classes = 6;
  FkPlacement fk(&inv, cfg.segment_size, cfg.block_size, cfg.num_classes);
  CHECK(fk.on_user_write(7, std::nullopt) == 2);   // invalidated 2 blocks out
  CHECK(fk.on_user_write(8, std::nullopt) == 6);   // never: last class
  // GC rewrite of write 0 at clock 1: residual 1 block.
  CHECK(fk.on_gc_write(BlockMeta{7, 0, true}, 0, 1) == 1);
}

TEST_CASE("ideal assignment follows the invalidation order") {
  CHECK(ideal_assign(2, 2) == 1);
  CHECK(ideal_assign(3, 2) == 2);
  CHECK(ideal_assign(5, 2) == 3);
  CHECK(ideal_assign(1, 4) == 1);
  CHECK(ideal_assign(4, 4) == 1);
  CHECK(ideal_assign(5, 4) == 2);
}

TEST_CASE("sepbit layouts expose their class counts") {
  CHECK(SepBitPlacement(SepBitPlacement::Layout::kFull).num_classes() == 6);
  CHECK(SepBitPlacement(SepBitPlacement::Layout::kUserOnly).num_classes() ==
        3);
  CHECK(SepBitPlacement(SepBitPlacement::Layout::kGcOnly).num_classes() == 4);
  SepBitOptions wide;
  wide.age_multipliers = sepbit_multipliers_method2(5);
  CHECK(SepBitPlacement(SepBitPlacement::Layout::kFull, wide).num_classes() ==
        8);
}

TEST_CASE("no scheme opens more segments than its class count") {
  SyntheticSpec spec;
  spec.wss_blocks = 1 << 10;
  spec.alpha = 1.0;
  spec.total_writes = 40000;
  spec.churn_period_blocks = 1 << 9;
  spec.seed = 404;
  const std::vector<Lba> writes = gen_two_region(spec);
  const std::vector<Clock> clocks = invalidation_clocks(writes);

  VolumeConfig cfg;
  cfg.segment_size = 32 * kBlockSize;
  cfg.gp_threshold = 0.15;
  cfg.num_classes = 6;

  const auto max_open = [&](std::unique_ptr<PlacementScheme> scheme) {
    VolumeSim sim(cfg, std::move(scheme), SelectorKind::kGreedy);
    std::size_t peak = 0;
    for (const Lba lba : writes) {
      sim.user_write(lba);
      peak = std::max(peak, sim.open_segment_count());
    }
    return peak;
  };

  CHECK(max_open(std::make_unique<NoSepPlacement>()) == 1);
  CHECK(max_open(std::make_unique<SepGcPlacement>()) <= 2);
  CHECK(max_open(std::make_unique<SepBitPlacement>(
            SepBitPlacement::Layout::kFull)) <= 6);
  CHECK(max_open(std::make_unique<SepBitPlacement>(
            SepBitPlacement::Layout::kUserOnly)) <= 3);
  CHECK(max_open(std::make_unique<SepBitPlacement>(
            SepBitPlacement::Layout::kGcOnly)) <= 4);
  CHECK(max_open(std::make_unique<DacPlacement>(6)) <= 6);
  CHECK(max_open(std::make_unique<FkPlacement>(&clocks, cfg.segment_size,
                                               cfg.block_size, 6)) <= 6);
}

TEST_CASE("scheme names round-trip") {
  for (const SchemeKind kind :
       {SchemeKind::kNoSep, SchemeKind::kSepGc, SchemeKind::kSepBit,
        SchemeKind::kSepBitUw, SchemeKind::kSepBitGw, SchemeKind::kDac,
        SchemeKind::kFk, SchemeKind::kIdeal}) {
    CHECK(parse_scheme(scheme_name(kind)) == kind);
  }
  CHECK_FALSE(parse_scheme("warcip").has_value());
}

// The FIFO-backed index and the exact map must agree whenever the queue
// still covers the separation window.
TEST_CASE("fifo index and exact map make identical class decisions") {
  std::mt19937_64 seed_rng(2024);
  for (int round = 0; round < 3; ++round) {
    SyntheticSpec spec;
    spec.wss_blocks = 1 << 10;
    spec.alpha = 0.8 + 0.1 * round;
    spec.total_writes = 60000;
    spec.churn_period_blocks = 1 << 9;
    spec.seed = seed_rng();
    const std::vector<Lba> writes = gen_two_region(spec);

    VolumeConfig cfg;
    cfg.segment_size = 64 * kBlockSize;
    cfg.gp_threshold = 0.15;

    auto comparator = std::make_unique<testutil::SepBitComparator>();
    const testutil::SepBitComparator* raw = comparator.get();
    VolumeSim sim(cfg, std::move(comparator), SelectorKind::kGreedy);
    for (const Lba lba : writes) sim.user_write(lba);

    CHECK(raw->covered_decisions() > writes.size() / 2);
    CHECK(raw->divergences() == 0);
    CHECK(raw->gc_divergences() == 0);
  }
}
