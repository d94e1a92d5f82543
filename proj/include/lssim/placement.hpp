#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lssim/recency_index.hpp"
#include "lssim/types.hpp"

// Data-placement schemes. A scheme assigns every written block to a class;
// the engine keeps one open segment per class. Class ids are scheme-defined
// small integers (SepBIT uses 1..6 with 1-2 for user writes and 3-6 for GC
// rewrites; DAC uses temperature levels 0..k-1).

namespace lssim {

enum class SchemeKind {
  kNoSep,
  kSepGc,
  kSepBit,
  kSepBitUw,  // user-write separation only
  kSepBitGw,  // GC-write separation only
  kDac,
  kFk,
  kIdeal,
};

std::optional<SchemeKind> parse_scheme(std::string_view name);
std::string_view scheme_name(SchemeKind kind);

// Lifespan of the block invalidated by the current user write; empty for a
// first write of the LBA.
using InvalidatedLifespan = std::optional<std::uint64_t>;

class PlacementScheme {
 public:
  virtual ~PlacementScheme() = default;

  virtual std::uint32_t on_user_write(Lba lba, InvalidatedLifespan v) = 0;
  virtual std::uint32_t on_gc_write(const BlockMeta& block,
                                    std::uint32_t origin_class, Clock now) = 0;
  virtual void notify_reclaim(const Segment& victim, Clock now) {
    (void)victim;
    (void)now;
  }
};

class NoSepPlacement final : public PlacementScheme {
 public:
  std::uint32_t on_user_write(Lba, InvalidatedLifespan) override { return 0; }
  std::uint32_t on_gc_write(const BlockMeta&, std::uint32_t, Clock) override {
    return 0;
  }
};

class SepGcPlacement final : public PlacementScheme {
 public:
  std::uint32_t on_user_write(Lba, InvalidatedLifespan) override { return 0; }
  std::uint32_t on_gc_write(const BlockMeta&, std::uint32_t, Clock) override {
    return 1;
  }
};

// Mean lifespan over fixed-size windows of observations; +infinity until the
// first window completes.
class WindowedAverage {
 public:
  explicit WindowedAverage(std::uint32_t window) : window_(window) {}

  // Returns true when the window filled and the value was refreshed.
  bool observe(std::uint64_t lifespan) {
    total_ += lifespan;
    if (++count_ < window_) return false;
    value_ = static_cast<double>(total_) / static_cast<double>(window_);
    count_ = 0;
    total_ = 0;
    return true;
  }

  double value() const { return value_; }

 private:
  std::uint32_t window_;
  std::uint32_t count_ = 0;
  std::uint64_t total_ = 0;
  double value_ = std::numeric_limits<double>::infinity();
};

enum class SepBitIndexMode {
  kFifoQueue,  // bounded FIFO recency index
  kExactMap,   // exact per-LBA last-write-time knowledge
};

struct SepBitOptions {
  SepBitIndexMode index_mode = SepBitIndexMode::kFifoQueue;
  // Class-1 reclaims per refresh of the average segment lifespan.
  std::uint32_t window = 16;
  // Age thresholds for GC-rewritten blocks, as multiples of the average
  // Class-1 segment lifespan. The defaults place ages in [0,4l), [4l,16l)
  // and [16l,inf).
  std::vector<double> age_multipliers{4.0, 16.0};
  // Scales every separation threshold (0.5 and 2.0 in the half/double
  // sensitivity variants).
  double threshold_scale = 1.0;
  // Adaptive GC thresholds l3 and l3+l4 from the average lifespans of
  // reclaimed Class-3 and Class-4 segments.
  bool adaptive_gc_thresholds = false;
};

// Age multipliers 16^(i/(c-1)) for c classes beyond the Class-1 fast path.
std::vector<double> sepbit_multipliers_method1(std::uint32_t remaining_classes);
// Age multipliers 4^i.
std::vector<double> sepbit_multipliers_method2(std::uint32_t remaining_classes);

// Places blocks by inferred invalidation time. User-written blocks that
// invalidate a short-lived block go to Class 1, the rest (including first
// writes, treated as infinitely long-lived) to Class 2. GC rewrites of
// Class-1 blocks go to Class 3; other GC rewrites are grouped by age into
// Classes 4 and up. The master threshold is the windowed average lifespan of
// reclaimed Class-1 segments.
class SepBitPlacement final : public PlacementScheme {
 public:
  enum class Layout {
    kFull,      // classes 1-2 user, 3-6 GC
    kUserOnly,  // classes 1-2 user, 3 for every GC rewrite
    kGcOnly,    // class 1 user, 2-4 GC by age
  };

  struct MemorySample {
    std::uint64_t unique_lbas = 0;
    std::uint64_t queue_length = 0;
  };

  explicit SepBitPlacement(Layout layout = Layout::kFull,
                           SepBitOptions options = {});

  std::uint32_t on_user_write(Lba lba, InvalidatedLifespan v) override;
  std::uint32_t on_gc_write(const BlockMeta& block, std::uint32_t origin_class,
                            Clock now) override;
  void notify_reclaim(const Segment& victim, Clock now) override;

  double ell() const { return ell_.value(); }
  Layout layout() const { return layout_; }
  const SepBitOptions& options() const { return options_; }
  const RecencyIndex& index() const { return index_; }
  const std::vector<MemorySample>& memory_samples() const { return samples_; }
  std::uint32_t num_classes() const;

 private:
  bool short_lived(Lba lba, InvalidatedLifespan v) const;
  std::uint32_t age_class(std::uint32_t base, Clock now,
                          Clock last_user_write) const;

  Layout layout_;
  SepBitOptions options_;
  WindowedAverage ell_;
  WindowedAverage ell3_;  // adaptive variant only
  WindowedAverage ell4_;
  RecencyIndex index_;
  std::vector<MemorySample> samples_;
};

// Temperature levels: a user write promotes the LBA by one level, a GC
// rewrite demotes it by one, clamped to [0, num_levels). A first write starts
// at level 0 and is promoted before placement.
class DacPlacement final : public PlacementScheme {
 public:
  explicit DacPlacement(std::uint32_t num_levels) : num_levels_(num_levels) {}

  std::uint32_t on_user_write(Lba lba, InvalidatedLifespan) override {
    auto [it, inserted] = level_.try_emplace(lba, 0);
    std::uint32_t& level = it->second;
    if (level + 1 < num_levels_) {
      ++level;
    }
    return level;
  }

  std::uint32_t on_gc_write(const BlockMeta& block, std::uint32_t,
                            Clock) override {
    auto [it, inserted] = level_.try_emplace(block.lba, 0);
    std::uint32_t& level = it->second;
    if (level > 0) {
      --level;
    }
    return level;
  }

 private:
  std::uint32_t num_levels_;
  std::unordered_map<Lba, std::uint32_t> level_;
};

// Class for a block whose invalidation lies bit_bytes ahead: ceil(t/s),
// capped at class k (which also holds blocks that are never invalidated).
std::uint32_t fk_assign(std::uint64_t bit_bytes, std::uint64_t segment_size,
                        std::uint32_t k);

// Oracle placement from pre-annotated invalidation clocks. invalidation_clock
// maps each user-write index to the clock at which that version is
// invalidated (kNeverInvalidated for final versions); GC rewrites use the
// residual until that clock.
class FkPlacement final : public PlacementScheme {
 public:
  FkPlacement(const std::vector<Clock>* invalidation_clock,
              std::uint64_t segment_size, std::uint64_t block_size,
              std::uint32_t num_classes);

  std::uint32_t on_user_write(Lba lba, InvalidatedLifespan v) override;
  std::uint32_t on_gc_write(const BlockMeta& block, std::uint32_t origin_class,
                            Clock now) override;

 private:
  std::uint32_t classify(std::uint64_t bit_blocks) const;

  const std::vector<Clock>* invalidation_clock_;
  std::uint64_t segment_size_;
  std::uint64_t block_size_;
  std::uint32_t num_classes_;
  Clock user_writes_seen_ = 0;
};

// 1-based open-segment index for the ideal construction: a block with
// invalidation order o lands in segment ceil(o/s).
inline std::uint64_t ideal_assign(std::uint64_t invalidation_order,
                                  std::uint64_t segment_blocks) {
  return (invalidation_order + segment_blocks - 1) / segment_blocks;
}

// Builds schemes that need no external annotation (everything except FK and
// the ideal mode).
std::unique_ptr<PlacementScheme> make_scheme(SchemeKind kind,
                                             const VolumeConfig& config,
                                             const SepBitOptions& sepbit);

}  // namespace lssim
