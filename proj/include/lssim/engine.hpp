#pragma once

#include <map>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "lssim/placement.hpp"
#include "lssim/selection.hpp"
#include "lssim/types.hpp"

namespace lssim {

// Per-volume log-structured state machine: user-write path, invalidation,
// GC triggering and rewriting, and the write-amplification counters. The
// garbage proportion that drives GC triggering is computed over sealed
// segments only; open segments are not GC candidates.
class VolumeSim {
 public:
  VolumeSim(VolumeConfig config, std::unique_ptr<PlacementScheme> placement,
            SelectorKind selector);

  // Invalidates the prior version of lba, places and appends the new block,
  // advances the clock, then runs GC until the trigger clears.
  void user_write(Lba lba);

  // Runs GC operations while GP >= threshold and some sealed segment holds
  // an invalid block. Returns the number of operations run.
  std::uint64_t maybe_gc();

  // One GC operation: selects victims until their cumulative size reaches
  // the configured retrieval amount, rewrites their valid blocks through the
  // placement scheme, and reclaims them.
  GcEvent garbage_collect_once();

  // Invalid fraction over all blocks in sealed segments; 0 with none sealed.
  double garbage_proportion() const;

  // (user + GC writes) / user writes. Requires at least one user write.
  double write_amplification() const;

  Clock clock() const { return clock_; }
  std::uint64_t user_blocks_written() const { return user_blocks_; }
  std::uint64_t gc_blocks_written() const { return gc_blocks_; }
  const std::vector<GcEvent>& gc_log() const { return gc_log_; }
  const VolumeConfig& config() const { return config_; }
  PlacementScheme& placement() { return *placement_; }
  const PlacementScheme& placement() const { return *placement_; }

  std::uint64_t distinct_lbas_written() const { return lba_index_.size(); }
  std::uint64_t total_valid_blocks() const;
  std::size_t sealed_segment_count() const { return sealed_.size(); }
  std::size_t open_segment_count() const { return open_.size(); }
  std::vector<const Segment*> sealed_view() const;
  const Segment* find_segment(std::uint64_t id) const;

  void set_gp_threshold(double gpt);

 private:
  struct BlockLocation {
    std::uint64_t segment_id;
    std::uint32_t slot;
  };

  InvalidatedLifespan invalidate_current(Lba lba);
  void append_block(std::uint32_t class_id, const BlockMeta& meta);
  Segment& open_segment_for(std::uint32_t class_id);
  void seal_open(std::uint32_t class_id);

  VolumeConfig config_;
  std::unique_ptr<PlacementScheme> placement_;
  SelectorKind selector_;

  Clock clock_ = 0;
  std::uint64_t next_segment_id_ = 0;
  std::map<std::uint32_t, Segment> open_;  // class id -> open segment
  std::unordered_map<std::uint64_t, Segment> sealed_;
  std::unordered_map<Lba, BlockLocation> lba_index_;

  std::uint64_t user_blocks_ = 0;
  std::uint64_t gc_blocks_ = 0;
  std::uint64_t sealed_blocks_ = 0;   // block slots in sealed segments
  std::uint64_t sealed_invalid_ = 0;  // invalid blocks in sealed segments
  std::vector<GcEvent> gc_log_;
};

// Oracle replay with future knowledge of invalidation order. Block i goes to
// open segment ceil(o_i / s) out of an unbounded pool; blocks that are never
// invalidated go to a dedicated overflow group that is never collected. GC
// reclaims segment j as soon as j*s invalidations have happened, at which
// point segment j is fully invalid, so no block is ever rewritten.
class IdealSim {
 public:
  // invalidation_order[i] is the 1-based rank of write i among all
  // invalidated writes ordered by invalidation time, or kNeverInvalidated.
  IdealSim(VolumeConfig config, std::vector<std::uint64_t> invalidation_order);

  void user_write(Lba lba);
  void replay(std::span<const Lba> writes);

  double write_amplification() const;
  Clock clock() const { return clock_; }
  std::uint64_t user_blocks_written() const { return user_blocks_; }
  std::uint64_t gc_blocks_written() const { return gc_blocks_; }
  const std::vector<GcEvent>& gc_log() const { return gc_log_; }
  std::uint64_t reclaimed_segments() const { return next_victim_; }

 private:
  struct BlockLocation {
    std::uint64_t group;  // 1-based churn group, 0 = overflow
    std::uint64_t slot;
  };

  void append(std::uint64_t group, const BlockMeta& meta);
  void collect_ready_segments();

  VolumeConfig config_;
  std::vector<std::uint64_t> order_;
  Clock clock_ = 0;
  std::uint64_t user_blocks_ = 0;
  std::uint64_t gc_blocks_ = 0;
  std::uint64_t invalid_blocks_ = 0;
  std::uint64_t next_victim_ = 0;  // segments reclaimed so far
  std::unordered_map<std::uint64_t, Segment> groups_;
  std::vector<Segment> overflow_;
  std::unordered_map<Lba, BlockLocation> lba_index_;
  std::vector<GcEvent> gc_log_;
};

}  // namespace lssim
