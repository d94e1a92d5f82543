#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

// Core domain types for a trace-driven simulator of garbage collection in
// log-structured block storage. All times, ages, lifespans and thresholds
// are counted in user-written 4 KiB blocks: the clock ticks once per user
// write and never for GC rewrites.

namespace lssim {

using Lba = std::uint64_t;
using Clock = std::uint64_t;

inline constexpr std::uint64_t kBlockSize = 4096;

// Lifespan sentinels for annotated writes.
inline constexpr std::uint64_t kNeverInvalidated =
    std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kFirstWrite =
    std::numeric_limits<std::uint64_t>::max();

// Thrown for invalid run configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for malformed or missing input data (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Returns t + 1; fails fast instead of wrapping.
inline Clock advance_clock(Clock t) {
  if (t == std::numeric_limits<Clock>::max()) {
    throw std::overflow_error("clock counter overflow");
  }
  return t + 1;
}

struct BlockMeta {
  Lba lba = 0;
  // Clock value of the user write that created this logical version.
  // GC rewrites copy it unchanged.
  Clock last_user_write_time = 0;
  bool valid = true;
};

struct Segment {
  std::uint64_t id = 0;
  std::uint32_t class_id = 0;
  Clock creation_time = 0;          // clock at first append
  std::optional<Clock> seal_time;   // set once the segment fills
  std::uint32_t capacity_blocks = 0;
  std::uint32_t valid_count = 0;
  std::vector<BlockMeta> blocks;

  bool sealed() const { return seal_time.has_value(); }
  bool full() const { return blocks.size() >= capacity_blocks; }

  std::uint32_t invalid_count() const {
    return static_cast<std::uint32_t>(blocks.size()) - valid_count;
  }

  // Fraction of invalid slots out of capacity. Meaningful for sealed
  // segments, where |blocks| == capacity_blocks.
  double garbage_proportion() const {
    return static_cast<double>(capacity_blocks - valid_count) /
           static_cast<double>(capacity_blocks);
  }
};

struct VolumeConfig {
  std::uint64_t block_size = kBlockSize;
  std::uint64_t segment_size = 512ull << 20;  // bytes
  double gp_threshold = 0.15;
  std::uint64_t gc_retrieval_bytes = 0;  // 0 means one segment per GC op
  std::uint32_t num_classes = 6;

  std::uint32_t segment_blocks() const {
    return static_cast<std::uint32_t>(segment_size / block_size);
  }

  std::uint64_t retrieval_bytes() const {
    return gc_retrieval_bytes == 0 ? segment_size : gc_retrieval_bytes;
  }

  // Maximum storage space implied by a write working set: WSS / (1 - GPT).
  // Reported for context only; GC triggering is driven by the GP threshold.
  std::uint64_t capacity_bytes(std::uint64_t wss_bytes) const {
    return static_cast<std::uint64_t>(static_cast<double>(wss_bytes) /
                                      (1.0 - gp_threshold));
  }

  void validate() const;
};

struct GcVictimInfo {
  std::uint64_t segment_id = 0;
  double gp = 0.0;  // victim garbage proportion at selection time
  std::uint64_t rewritten = 0;
  std::uint64_t reclaimed = 0;
};

struct GcEvent {
  Clock at_time = 0;
  std::vector<GcVictimInfo> victims;
  std::uint64_t rewritten_blocks = 0;
  std::uint64_t reclaimed_blocks = 0;
};

// One user write with its measured lifespans, produced by a full-trace
// annotation pass.
//   lifespan:      next write index of the same LBA minus this write index,
//                  or kNeverInvalidated.
//   prev_lifespan: this write index minus the previous write index of the
//                  same LBA, or kFirstWrite.
struct AnnotatedWrite {
  Lba lba = 0;
  Clock write_index = 0;
  std::uint64_t lifespan = kNeverInvalidated;
  std::uint64_t prev_lifespan = kFirstWrite;
};

}  // namespace lssim
