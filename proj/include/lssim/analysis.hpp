#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "lssim/types.hpp"

// Analytic probability model for block-invalidation-time inference under
// Zipf workloads, plus the matching empirical estimators and trace
// statistics.

namespace lssim {

inline constexpr std::uint64_t kBlocksPerGiB = 1ull << 18;  // 4 KiB blocks

// LBA-write probabilities p_i = (1/i^alpha) / sum_j (1/j^alpha), i = 1..n.
struct ZipfModel {
  std::uint64_t n = 0;
  double alpha = 0.0;
  std::vector<double> p;        // non-increasing
  std::vector<double> log1m_p;  // log(1 - p_i)

  static ZipfModel make(std::uint64_t n, double alpha);
};

// Pr(u <= u0 | v <= v0): probability that a user-written block lives at most
// u0 blocks given that the block it invalidates lived at most v0 blocks.
// Throws on v0 = 0 (empty condition).
double cond_prob_user(const ZipfModel& model, std::uint64_t u0_blocks,
                      std::uint64_t v0_blocks);

// Pr(u <= g0 + r0 | u >= g0): probability that a block with age g0 at GC
// time is invalidated within a residual lifespan of r0 blocks.
double cond_prob_gc(const ZipfModel& model, std::uint64_t g0_blocks,
                    std::uint64_t r0_blocks);

// Fraction of write traffic going to the top frac of LBAs by rank.
double top_fraction_traffic(const ZipfModel& model, double frac);

// Trace-side estimators over annotated writes. Writes with no measured next
// write count as u > u0. Throws when the conditioning set is empty.
double empirical_cond_prob_user(std::span<const AnnotatedWrite> records,
                                std::uint64_t u0, std::uint64_t v0);

// Denominator: records with u >= g0 (never-invalidated counted in).
// Numerator: records with g0 < u <= g0 + r0.
double empirical_cond_prob_gc(std::span<const AnnotatedWrite> records,
                              std::uint64_t g0, std::uint64_t r0);

struct ObservationReport {
  // Lifespan thresholds as fractions of the write WSS; lifespans of
  // never-invalidated blocks run to the end of the trace.
  static constexpr std::array<double, 4> kShortLifespanFractions{0.1, 0.2,
                                                                 0.4, 0.8};
  // Fraction of user-written blocks with lifespan below each threshold.
  std::array<double, 4> short_lifespan_fractions{};

  // Coefficient of variation of lifespans per update-frequency rank group
  // (top 1%, 1-5%, 5-10%, 10-20% of the WSS). Empty when the group has no
  // invalidated blocks. An update is any write after the first to an LBA.
  struct FrequencyGroup {
    double rank_lo = 0.0;  // fraction of WSS, inclusive
    double rank_hi = 0.0;  // exclusive
    std::uint64_t lba_count = 0;
    std::uint64_t sample_count = 0;
    std::optional<double> cv;
  };
  std::array<FrequencyGroup, 4> frequency_cv{};

  // LBAs updated at most four times. Buckets partition their block versions
  // by lifespan at {0.5, 1, 1.5, 2} x WSS. Empty when no LBA qualifies.
  std::optional<double> rarely_updated_wss_fraction;
  std::optional<std::array<double, 5>> rare_lifespan_fractions;
};

ObservationReport observation_stats(std::span<const AnnotatedWrite> records,
                                    std::uint64_t wss_blocks);

struct GpDistribution {
  std::vector<double> sorted_gps;  // one entry per collected victim
  double median = 0.0;
};

// Per-victim garbage proportions across a GC log. Throws on an empty log.
GpDistribution collected_gp_distribution(std::span<const GcEvent> gc_log);

double median_of_sorted(std::span<const double> sorted);

}  // namespace lssim
