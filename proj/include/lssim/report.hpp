#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lssim/engine.hpp"
#include "lssim/placement.hpp"
#include "lssim/selection.hpp"
#include "lssim/types.hpp"

// Per-volume replay driving and result emission.

namespace lssim {

inline constexpr int kResultSchemaVersion = 1;

struct RunSpec {
  VolumeConfig volume;
  SchemeKind scheme = SchemeKind::kNoSep;
  SelectorKind selector = SelectorKind::kGreedy;
  SepBitOptions sepbit;
};

// Recency-index footprint per the worst-case / snapshot methodology: the
// worst case takes the peak unique-LBA count over the samples collected at
// each average-lifespan refresh, excluding the first 10% of them; the
// snapshot takes the count at the end of the trace. Reductions are relative
// to the volume's unique written LBAs.
struct MemoryMetrics {
  std::uint64_t sample_count = 0;
  bool sufficient = false;  // needs at least 10 samples
  std::uint64_t worst_unique = 0;
  std::uint64_t snapshot_unique = 0;
  double worst_reduction = 0.0;
  double snapshot_reduction = 0.0;
};

inline constexpr std::uint64_t kMinMemorySamples = 10;

std::uint64_t worst_case_unique(std::span<const std::uint64_t> samples);

MemoryMetrics memory_report(
    std::span<const SepBitPlacement::MemorySample> samples,
    std::uint64_t snapshot_unique, std::uint64_t wss_unique_lbas);

struct VolumeResult {
  std::string volume_id;
  std::uint64_t user_blocks = 0;
  std::uint64_t gc_blocks = 0;
  double wa = 1.0;
  std::uint64_t gc_ops = 0;
  std::uint64_t distinct_lbas = 0;
  // WSS / (1 - GP threshold); informational, GC is threshold-driven.
  std::uint64_t capacity_bytes = 0;
  std::optional<double> median_victim_gp;
  std::optional<MemoryMetrics> memory;
};

// Replays one volume's block-write sequence under the given scheme and
// selector. FK and ideal runs derive their annotations from the sequence
// itself unless invalidation clocks are supplied. The GC log is appended to
// gc_log_out when given.
VolumeResult run_volume(const std::string& volume_id,
                        std::span<const Lba> writes, const RunSpec& spec,
                        std::vector<GcEvent>* gc_log_out = nullptr,
                        const std::vector<Clock>* invalidation_clock = nullptr);

// Overall WA across volumes: sum(user + gc) / sum(user).
double aggregate_wa(std::span<const VolumeResult> results);

// One CSV row per volume; axis columns echo the run configuration.
struct ResultRow {
  std::string scheme;
  std::string selector;
  std::uint64_t segment_size_bytes = 0;
  double gp_threshold = 0.0;
  std::optional<double> alpha;  // synthetic runs only
  VolumeResult result;
};

void write_results_csv_header(std::ostream& out);
void write_results_csv_row(std::ostream& out, const ResultRow& row);
void write_gc_log_csv(std::ostream& out, std::span<const GcEvent> events);

// Fixed-precision deterministic float formatting for result files.
std::string fmt_double(double value);

}  // namespace lssim
