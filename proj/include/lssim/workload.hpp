#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lssim/analysis.hpp"
#include "lssim/rng.hpp"
#include "lssim/types.hpp"

// Trace ingestion and pre-processing, full-trace lifespan annotation, and
// synthetic workload generation.

namespace lssim {

enum class TraceFormat { kNativeCsv, kAlibaba, kTencent };

std::optional<TraceFormat> parse_trace_format(std::string_view name);
std::string_view trace_format_name(TraceFormat format);

// One write after alignment: offset and length are multiples of the block
// size. Block-level records carry length == kBlockSize.
struct WriteRecord {
  std::uint64_t timestamp_us = 0;
  std::string volume_id;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;

  Lba lba() const { return offset / kBlockSize; }

  friend bool operator==(const WriteRecord&, const WriteRecord&) = default;
};

// Positional column override: indices of the timestamp, volume, opcode,
// offset and length fields within a line. Units and opcode conventions stay
// those of the selected format. The Tencent layout has no volume-less lines;
// formats that lack an explicit field use -1.
struct TraceColumns {
  int timestamp = -1;
  int volume = -1;
  int opcode = -1;
  int offset = -1;
  int length = -1;
};

TraceColumns default_columns(TraceFormat format);

// Parses comma lists such as "ts,vol,op,off,len" or "off,len,op" with
// optional "skip" entries. Throws ConfigError on unknown tokens.
TraceColumns parse_columns_spec(std::string_view spec);

// Streams a trace, invoking sink once per written 4 KiB block in file order.
// Read requests are dropped; unaligned requests are widened to full block
// coverage. Throws DataError with the line number on malformed input.
void for_each_block_write(
    std::istream& in, TraceFormat format,
    const std::function<void(const WriteRecord&)>& sink,
    std::optional<TraceColumns> columns = std::nullopt);

// Materialized per-block records (native CSV test surface).
std::vector<WriteRecord> parse_trace(
    std::istream& in, TraceFormat format,
    std::optional<TraceColumns> columns = std::nullopt);

// Native CSV line format: timestamp_us,volume_id,opcode,offset,length.
void serialize_native(std::ostream& out, std::span<const WriteRecord> records);

struct VolumeStats {
  std::string volume_id;
  std::uint64_t wss_blocks = 0;
  std::uint64_t traffic_blocks = 0;

  std::uint64_t wss_bytes() const { return wss_blocks * kBlockSize; }
  std::uint64_t traffic_bytes() const { return traffic_blocks * kBlockSize; }
};

// One pass over the trace; stats ordered by first appearance.
std::vector<VolumeStats> collect_volume_stats(
    std::istream& in, TraceFormat format,
    std::optional<TraceColumns> columns = std::nullopt);

struct FilterRule {
  std::uint64_t min_wss_bytes = 10ull << 30;
  double traffic_multiple = 2.0;
};

// WSS strictly above the floor and traffic strictly above the multiple.
bool volume_selected(const VolumeStats& stats, const FilterRule& rule);

std::vector<std::string> filter_volumes(std::span<const VolumeStats> stats,
                                        const FilterRule& rule);

// Forward/backward lifespan annotation of one volume's write sequence.
std::vector<AnnotatedWrite> annotate_bits(std::span<const Lba> writes);

// Clock at which each write's version is invalidated (kNeverInvalidated for
// final versions).
std::vector<Clock> invalidation_clocks(std::span<const Lba> writes);

// 1-based invalidation ranks derived from invalidation clocks;
// kNeverInvalidated passes through.
std::vector<std::uint64_t> invalidation_orders(
    std::span<const Clock> invalidation_clock);

// Annotation sidecar CSV: write_index,lba,lifespan,prev_lifespan with "-"
// for never/new.
void write_annotations_csv(std::ostream& out,
                           std::span<const AnnotatedWrite> records);
std::vector<AnnotatedWrite> read_annotations_csv(std::istream& in);

struct SyntheticSpec {
  std::uint64_t wss_blocks = 1ull << 17;  // 512 MiB of 4 KiB blocks
  double alpha = 1.0;
  std::uint64_t total_writes = 0;
  double hot_fraction = 0.2;  // share of the WSS in the hot region
  std::uint64_t churn_period_blocks = 1ull << 17;  // 512 MiB equivalent
  std::uint64_t seed = 1;

  void validate() const;
};

// Streams i.i.d. Zipf-distributed LBAs. In two-region mode the top ranks map
// onto a fixed hot subset of the LBA space whose internal rank assignment is
// re-permuted every churn period, keeping the overall distribution unchanged
// while rotating which hot LBAs are hottest.
class SyntheticGenerator {
 public:
  SyntheticGenerator(const SyntheticSpec& spec, bool two_region);

  Lba next();
  std::uint64_t emitted() const { return emitted_; }
  const SyntheticSpec& spec() const { return spec_; }

 private:
  std::uint64_t draw_rank();
  void churn();

  SyntheticSpec spec_;
  bool two_region_;
  std::vector<double> cumulative_;  // by rank
  std::vector<Lba> hot_lbas_;       // rank r < h -> hot_lbas_[r]
  std::vector<Lba> cold_lbas_;      // rank r >= h -> cold_lbas_[r - h]
  Rng draw_rng_;
  Rng churn_rng_;
  std::uint64_t emitted_ = 0;
  std::uint64_t epoch_ = 0;
};

std::vector<Lba> gen_zipf(const SyntheticSpec& spec);
std::vector<Lba> gen_two_region(const SyntheticSpec& spec);

}  // namespace lssim
