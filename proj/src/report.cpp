#include "lssim/report.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "lssim/analysis.hpp"
#include "lssim/workload.hpp"

namespace lssim {

std::uint64_t worst_case_unique(std::span<const std::uint64_t> samples) {
  if (samples.empty()) return 0;
  const std::size_t skip = samples.size() / 10;  // cold-start exclusion
  std::uint64_t worst = 0;
  for (std::size_t i = skip; i < samples.size(); ++i) {
    worst = std::max(worst, samples[i]);
  }
  return worst;
}

MemoryMetrics memory_report(
    std::span<const SepBitPlacement::MemorySample> samples,
    std::uint64_t snapshot_unique, std::uint64_t wss_unique_lbas) {
  MemoryMetrics metrics;
  metrics.sample_count = samples.size();
  metrics.sufficient = samples.size() >= kMinMemorySamples;
  std::vector<std::uint64_t> uniques;
  uniques.reserve(samples.size());
  for (const auto& s : samples) uniques.push_back(s.unique_lbas);
  metrics.worst_unique = worst_case_unique(uniques);
  metrics.snapshot_unique = snapshot_unique;
  if (wss_unique_lbas > 0) {
    metrics.worst_reduction = 1.0 - static_cast<double>(metrics.worst_unique) /
                                        static_cast<double>(wss_unique_lbas);
    metrics.snapshot_reduction =
        1.0 - static_cast<double>(metrics.snapshot_unique) /
                  static_cast<double>(wss_unique_lbas);
  }
  return metrics;
}

namespace {

VolumeResult run_ideal(const std::string& volume_id,
                       std::span<const Lba> writes, const RunSpec& spec,
                       std::vector<GcEvent>* gc_log_out,
                       const std::vector<Clock>* invalidation_clock) {
  std::vector<Clock> local_clocks;
  if (invalidation_clock == nullptr) {
    local_clocks = invalidation_clocks(writes);
    invalidation_clock = &local_clocks;
  }
  IdealSim sim(spec.volume, invalidation_orders(*invalidation_clock));
  sim.replay(writes);

  VolumeResult result;
  result.volume_id = volume_id;
  result.user_blocks = sim.user_blocks_written();
  result.gc_blocks = sim.gc_blocks_written();
  result.wa = sim.write_amplification();
  result.gc_ops = sim.gc_log().size();
  if (!sim.gc_log().empty()) {
    result.median_victim_gp = collected_gp_distribution(sim.gc_log()).median;
  }
  std::uint64_t distinct = 0;
  {
    std::vector<Lba> sorted(writes.begin(), writes.end());
    std::sort(sorted.begin(), sorted.end());
    distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  }
  result.distinct_lbas = distinct;
  result.capacity_bytes = spec.volume.capacity_bytes(distinct * spec.volume.block_size);
  if (gc_log_out != nullptr) {
    gc_log_out->insert(gc_log_out->end(), sim.gc_log().begin(),
                       sim.gc_log().end());
  }
  return result;
}

}  // namespace

VolumeResult run_volume(const std::string& volume_id,
                        std::span<const Lba> writes, const RunSpec& spec,
                        std::vector<GcEvent>* gc_log_out,
                        const std::vector<Clock>* invalidation_clock) {
  spec.volume.validate();
  if (spec.scheme == SchemeKind::kIdeal) {
    return run_ideal(volume_id, writes, spec, gc_log_out, invalidation_clock);
  }

  std::vector<Clock> local_clocks;
  std::unique_ptr<PlacementScheme> placement;
  if (spec.scheme == SchemeKind::kFk) {
    if (invalidation_clock == nullptr) {
      local_clocks = invalidation_clocks(writes);
      invalidation_clock = &local_clocks;
    }
    placement = std::make_unique<FkPlacement>(
        invalidation_clock, spec.volume.segment_size, spec.volume.block_size,
        spec.volume.num_classes);
  } else {
    placement = make_scheme(spec.scheme, spec.volume, spec.sepbit);
  }

  VolumeSim sim(spec.volume, std::move(placement), spec.selector);
  for (const Lba lba : writes) sim.user_write(lba);

  VolumeResult result;
  result.volume_id = volume_id;
  result.user_blocks = sim.user_blocks_written();
  result.gc_blocks = sim.gc_blocks_written();
  result.wa = sim.write_amplification();
  result.gc_ops = sim.gc_log().size();
  result.distinct_lbas = sim.distinct_lbas_written();
  result.capacity_bytes = spec.volume.capacity_bytes(
      sim.distinct_lbas_written() * spec.volume.block_size);
  if (!sim.gc_log().empty()) {
    result.median_victim_gp = collected_gp_distribution(sim.gc_log()).median;
  }
  if (const auto* sepbit =
          dynamic_cast<const SepBitPlacement*>(&sim.placement());
      sepbit != nullptr &&
      sepbit->options().index_mode == SepBitIndexMode::kFifoQueue) {
    result.memory =
        memory_report(sepbit->memory_samples(),
                      sepbit->index().unique_lba_count(),
                      sim.distinct_lbas_written());
  }
  if (gc_log_out != nullptr) {
    gc_log_out->insert(gc_log_out->end(), sim.gc_log().begin(),
                       sim.gc_log().end());
  }
  return result;
}

double aggregate_wa(std::span<const VolumeResult> results) {
  if (results.empty()) {
    throw DataError("aggregate WA over zero volumes");
  }
  std::uint64_t user = 0;
  std::uint64_t total = 0;
  for (const VolumeResult& r : results) {
    user += r.user_blocks;
    total += r.user_blocks + r.gc_blocks;
  }
  if (user == 0) {
    throw DataError("aggregate WA undefined without user writes");
  }
  return static_cast<double>(total) / static_cast<double>(user);
}

std::string fmt_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  return buf;
}

void write_results_csv_header(std::ostream& out) {
  out << "schema_version,volume_id,scheme,selector,segment_size_bytes,"
         "gp_threshold,alpha,user_blocks,gc_blocks,wa,gc_ops,distinct_lbas,"
         "capacity_bytes,"
         "median_victim_gp,mem_samples,mem_worst_unique,mem_snapshot_unique,"
         "mem_worst_reduction,mem_snapshot_reduction\n";
}

void write_results_csv_row(std::ostream& out, const ResultRow& row) {
  const VolumeResult& r = row.result;
  out << kResultSchemaVersion << ',' << r.volume_id << ',' << row.scheme << ','
      << row.selector << ',' << row.segment_size_bytes << ','
      << fmt_double(row.gp_threshold) << ',';
  if (row.alpha) out << fmt_double(*row.alpha);
  out << ',' << r.user_blocks << ',' << r.gc_blocks << ',' << fmt_double(r.wa)
      << ',' << r.gc_ops << ',' << r.distinct_lbas << ',' << r.capacity_bytes
      << ',';
  if (r.median_victim_gp) out << fmt_double(*r.median_victim_gp);
  out << ',';
  if (r.memory) {
    const MemoryMetrics& m = *r.memory;
    out << m.sample_count << ',' << m.worst_unique << ',' << m.snapshot_unique
        << ',' << fmt_double(m.worst_reduction) << ','
        << fmt_double(m.snapshot_reduction);
  } else {
    out << ",,,,";
  }
  out << '\n';
}

void write_gc_log_csv(std::ostream& out, std::span<const GcEvent> events) {
  out << "at_time,victim_id,victim_gp,rewritten,reclaimed\n";
  for (const GcEvent& ev : events) {
    for (const GcVictimInfo& v : ev.victims) {
      out << ev.at_time << ',' << v.segment_id << ',' << fmt_double(v.gp)
          << ',' << v.rewritten << ',' << v.reclaimed << '\n';
    }
  }
}

}  // namespace lssim
