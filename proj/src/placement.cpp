#include "lssim/placement.hpp"

#include <cassert>
#include <cmath>

namespace lssim {

std::optional<SchemeKind> parse_scheme(std::string_view name) {
  if (name == "nosep") return SchemeKind::kNoSep;
  if (name == "sepgc") return SchemeKind::kSepGc;
  if (name == "sepbit") return SchemeKind::kSepBit;
  if (name == "uw") return SchemeKind::kSepBitUw;
  if (name == "gw") return SchemeKind::kSepBitGw;
  if (name == "dac") return SchemeKind::kDac;
  if (name == "fk") return SchemeKind::kFk;
  if (name == "ideal") return SchemeKind::kIdeal;
  return std::nullopt;
}

std::string_view scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kNoSep:
      return "nosep";
    case SchemeKind::kSepGc:
      return "sepgc";
    case SchemeKind::kSepBit:
      return "sepbit";
    case SchemeKind::kSepBitUw:
      return "uw";
    case SchemeKind::kSepBitGw:
      return "gw";
    case SchemeKind::kDac:
      return "dac";
    case SchemeKind::kFk:
      return "fk";
    case SchemeKind::kIdeal:
      return "ideal";
  }
  return "?";
}

std::vector<double> sepbit_multipliers_method1(
    std::uint32_t remaining_classes) {
  if (remaining_classes < 2) {
    throw ConfigError("at least two classes needed for age separation");
  }
  std::vector<double> out;
  for (std::uint32_t i = 1; i < remaining_classes; ++i) {
    out.push_back(std::pow(
        16.0, static_cast<double>(i) / (remaining_classes - 1)));
  }
  return out;
}

std::vector<double> sepbit_multipliers_method2(
    std::uint32_t remaining_classes) {
  if (remaining_classes < 2) {
    throw ConfigError("at least two classes needed for age separation");
  }
  std::vector<double> out;
  for (std::uint32_t i = 1; i < remaining_classes; ++i) {
    out.push_back(std::pow(4.0, static_cast<double>(i)));
  }
  return out;
}

SepBitPlacement::SepBitPlacement(Layout layout, SepBitOptions options)
    : layout_(layout),
      options_(std::move(options)),
      ell_(options_.window),
      ell3_(options_.window),
      ell4_(options_.window) {
  if (options_.window == 0) {
    throw ConfigError("sepbit window must be positive");
  }
  if (options_.threshold_scale <= 0.0) {
    throw ConfigError("sepbit threshold scale must be positive");
  }
  for (std::size_t i = 0; i < options_.age_multipliers.size(); ++i) {
    if (options_.age_multipliers[i] <= 0.0 ||
        (i > 0 &&
         options_.age_multipliers[i] <= options_.age_multipliers[i - 1])) {
      throw ConfigError("sepbit age multipliers must be positive and increasing");
    }
  }
}

std::uint32_t SepBitPlacement::num_classes() const {
  switch (layout_) {
    case Layout::kFull:
      return 3 + static_cast<std::uint32_t>(options_.age_multipliers.size()) +
             1;
    case Layout::kUserOnly:
      return 3;
    case Layout::kGcOnly:
      return 1 + static_cast<std::uint32_t>(options_.age_multipliers.size()) +
             1;
  }
  return 0;
}

bool SepBitPlacement::short_lived(Lba lba, InvalidatedLifespan v) const {
  const double cutoff = options_.threshold_scale * ell_.value();
  if (options_.index_mode == SepBitIndexMode::kExactMap) {
    return v.has_value() && static_cast<double>(*v) < cutoff;
  }
  // The FIFO index answers "within the last N inserts" inclusively; querying
  // with ceil(cutoff)-1 realizes the strict v < cutoff test at block
  // granularity, so both index modes decide identically whenever the queue
  // covers the cutoff window.
  if (std::isinf(cutoff)) {
    return index_.is_recent(lba, cutoff);
  }
  return index_.is_recent(lba, std::ceil(cutoff) - 1.0);
}

std::uint32_t SepBitPlacement::on_user_write(Lba lba, InvalidatedLifespan v) {
  std::uint32_t cls;
  if (layout_ == Layout::kGcOnly) {
    cls = 1;
  } else {
    cls = short_lived(lba, v) ? 1 : 2;
  }
  if (options_.index_mode == SepBitIndexMode::kFifoQueue) {
    index_.record_write(lba);
  }
  return cls;
}

std::uint32_t SepBitPlacement::age_class(std::uint32_t base, Clock now,
                                         Clock last_user_write) const {
  const double g = static_cast<double>(now - last_user_write);
  const double scale = options_.threshold_scale;
  if (options_.adaptive_gc_thresholds) {
    if (g < scale * ell3_.value()) return base;
    if (g < scale * (ell3_.value() + ell4_.value())) return base + 1;
    return base + 2;
  }
  std::uint32_t cls = base;
  for (const double mult : options_.age_multipliers) {
    if (g < scale * mult * ell_.value()) break;
    ++cls;
  }
  return cls;
}

std::uint32_t SepBitPlacement::on_gc_write(const BlockMeta& block,
                                           std::uint32_t origin_class,
                                           Clock now) {
  switch (layout_) {
    case Layout::kUserOnly:
      return 3;
    case Layout::kGcOnly:
      return age_class(2, now, block.last_user_write_time);
    case Layout::kFull:
      if (origin_class == 1) return 3;
      return age_class(4, now, block.last_user_write_time);
  }
  return 0;
}

void SepBitPlacement::notify_reclaim(const Segment& victim, Clock now) {
  const std::uint64_t lifespan = now - victim.creation_time;
  if (victim.class_id == 1) {
    if (ell_.observe(lifespan)) {
      if (options_.index_mode == SepBitIndexMode::kFifoQueue) {
        const double ell = ell_.value();
        if (!std::isinf(ell)) {
          index_.retarget(static_cast<std::uint64_t>(std::ceil(ell)));
        }
        samples_.push_back(
            MemorySample{index_.unique_lba_count(), index_.queue_length()});
      }
    }
  }
  if (options_.adaptive_gc_thresholds && layout_ == Layout::kFull) {
    if (victim.class_id == 3) ell3_.observe(lifespan);
    if (victim.class_id == 4) ell4_.observe(lifespan);
  }
}

std::uint32_t fk_assign(std::uint64_t bit_bytes, std::uint64_t segment_size,
                        std::uint32_t k) {
  assert(segment_size > 0 && k > 0);
  std::uint64_t idx = (bit_bytes + segment_size - 1) / segment_size;
  if (idx < 1) idx = 1;
  // The last class holds everything beyond the first k-1 segments' reach.
  if (idx > static_cast<std::uint64_t>(k) - 1) idx = k;
  return static_cast<std::uint32_t>(idx);
}

FkPlacement::FkPlacement(const std::vector<Clock>* invalidation_clock,
                         std::uint64_t segment_size, std::uint64_t block_size,
                         std::uint32_t num_classes)
    : invalidation_clock_(invalidation_clock),
      segment_size_(segment_size),
      block_size_(block_size),
      num_classes_(num_classes) {
  if (invalidation_clock_ == nullptr) {
    throw ConfigError("fk placement requires a pre-annotated write stream");
  }
}

std::uint32_t FkPlacement::classify(std::uint64_t bit_blocks) const {
  return fk_assign(bit_blocks * block_size_, segment_size_, num_classes_);
}

std::uint32_t FkPlacement::on_user_write(Lba, InvalidatedLifespan) {
  if (user_writes_seen_ >= invalidation_clock_->size()) {
    throw DataError("fk annotation shorter than the write stream");
  }
  const Clock inv = (*invalidation_clock_)[user_writes_seen_];
  const Clock t = user_writes_seen_;
  ++user_writes_seen_;
  if (inv == kNeverInvalidated) {
    return num_classes_;
  }
  return classify(inv - t);
}

std::uint32_t FkPlacement::on_gc_write(const BlockMeta& block, std::uint32_t,
                                       Clock now) {
  const Clock written = block.last_user_write_time;
  if (written >= invalidation_clock_->size()) {
    throw DataError("fk annotation shorter than the write stream");
  }
  const Clock inv = (*invalidation_clock_)[written];
  if (inv == kNeverInvalidated) {
    return num_classes_;
  }
  assert(inv >= now);
  return classify(inv - now);
}

std::unique_ptr<PlacementScheme> make_scheme(SchemeKind kind,
                                             const VolumeConfig& config,
                                             const SepBitOptions& sepbit) {
  switch (kind) {
    case SchemeKind::kNoSep:
      return std::make_unique<NoSepPlacement>();
    case SchemeKind::kSepGc:
      return std::make_unique<SepGcPlacement>();
    case SchemeKind::kSepBit:
      return std::make_unique<SepBitPlacement>(SepBitPlacement::Layout::kFull,
                                               sepbit);
    case SchemeKind::kSepBitUw:
      return std::make_unique<SepBitPlacement>(
          SepBitPlacement::Layout::kUserOnly, sepbit);
    case SchemeKind::kSepBitGw:
      return std::make_unique<SepBitPlacement>(
          SepBitPlacement::Layout::kGcOnly, sepbit);
    case SchemeKind::kDac:
      return std::make_unique<DacPlacement>(config.num_classes);
    case SchemeKind::kFk:
    case SchemeKind::kIdeal:
      throw ConfigError("scheme requires an annotated write stream");
  }
  throw ConfigError("unknown placement scheme");
}

}  // namespace lssim
