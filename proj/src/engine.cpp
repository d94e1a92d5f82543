#include "lssim/engine.hpp"

#include <cassert>

namespace lssim {

VolumeSim::VolumeSim(VolumeConfig config,
                     std::unique_ptr<PlacementScheme> placement,
                     SelectorKind selector)
    : config_(config), placement_(std::move(placement)), selector_(selector) {
  config_.validate();
  if (!placement_) {
    throw ConfigError("volume requires a placement scheme");
  }
}

void VolumeSim::user_write(Lba lba) {
  const InvalidatedLifespan v = invalidate_current(lba);
  const std::uint32_t cls = placement_->on_user_write(lba, v);
  append_block(cls, BlockMeta{lba, clock_, true});
  clock_ = advance_clock(clock_);
  ++user_blocks_;
  maybe_gc();
}

InvalidatedLifespan VolumeSim::invalidate_current(Lba lba) {
  const auto it = lba_index_.find(lba);
  if (it == lba_index_.end()) return std::nullopt;
  const BlockLocation loc = it->second;

  Segment* seg = nullptr;
  for (auto& [cls, open] : open_) {
    if (open.id == loc.segment_id) {
      seg = &open;
      break;
    }
  }
  if (seg == nullptr) {
    seg = &sealed_.at(loc.segment_id);
  }

  BlockMeta& meta = seg->blocks[loc.slot];
  assert(meta.valid && meta.lba == lba);
  meta.valid = false;
  --seg->valid_count;
  if (seg->sealed()) {
    ++sealed_invalid_;
  }
  return clock_ - meta.last_user_write_time;
}

Segment& VolumeSim::open_segment_for(std::uint32_t class_id) {
  auto it = open_.find(class_id);
  if (it == open_.end()) {
    Segment seg;
    seg.id = next_segment_id_++;
    seg.class_id = class_id;
    seg.creation_time = clock_;
    seg.capacity_blocks = config_.segment_blocks();
    seg.blocks.reserve(seg.capacity_blocks);
    it = open_.emplace(class_id, std::move(seg)).first;
  }
  return it->second;
}

void VolumeSim::append_block(std::uint32_t class_id, const BlockMeta& meta) {
  Segment& seg = open_segment_for(class_id);
  const auto slot = static_cast<std::uint32_t>(seg.blocks.size());
  seg.blocks.push_back(meta);
  seg.blocks.back().valid = true;
  ++seg.valid_count;
  lba_index_[meta.lba] = BlockLocation{seg.id, slot};
  if (seg.full()) {
    seal_open(class_id);
  }
}

void VolumeSim::seal_open(std::uint32_t class_id) {
  auto node = open_.extract(class_id);
  Segment& seg = node.mapped();
  assert(seg.full());
  seg.seal_time = clock_;
  sealed_blocks_ += seg.capacity_blocks;
  sealed_invalid_ += seg.invalid_count();
  sealed_.emplace(seg.id, std::move(seg));
}

double VolumeSim::garbage_proportion() const {
  if (sealed_blocks_ == 0) return 0.0;
  return static_cast<double>(sealed_invalid_) /
         static_cast<double>(sealed_blocks_);
}

std::uint64_t VolumeSim::maybe_gc() {
  std::uint64_t ops = 0;
  while (sealed_invalid_ > 0 &&
         garbage_proportion() >= config_.gp_threshold) {
    garbage_collect_once();
    ++ops;
  }
  return ops;
}

GcEvent VolumeSim::garbage_collect_once() {
  if (sealed_.empty()) {
    throw std::logic_error("GC requested with no sealed segments");
  }
  const std::uint64_t want = config_.retrieval_bytes();

  // Pull victims up front so rewrites sealing fresh segments cannot feed the
  // same operation.
  std::vector<Segment> victims;
  std::uint64_t pulled = 0;
  while (pulled < want && !sealed_.empty()) {
    const auto view = sealed_view();
    const std::uint64_t id = select_victim(selector_, view, clock_);
    auto node = sealed_.extract(id);
    Segment& seg = node.mapped();
    sealed_blocks_ -= seg.capacity_blocks;
    sealed_invalid_ -= seg.invalid_count();
    pulled +=
        static_cast<std::uint64_t>(seg.capacity_blocks) * config_.block_size;
    victims.push_back(std::move(seg));
  }
  if (victims.empty()) {
    throw std::logic_error("victim selection returned nothing");
  }

  GcEvent ev;
  ev.at_time = clock_;
  for (Segment& victim : victims) {
    placement_->notify_reclaim(victim, clock_);
    std::uint64_t rewritten = 0;
    for (const BlockMeta& block : victim.blocks) {
      if (!block.valid) continue;
      const std::uint32_t cls =
          placement_->on_gc_write(block, victim.class_id, clock_);
      append_block(cls, block);
      ++gc_blocks_;
      ++rewritten;
    }
    ev.victims.push_back(GcVictimInfo{victim.id, victim.garbage_proportion(),
                                      rewritten, victim.invalid_count()});
    ev.rewritten_blocks += rewritten;
    ev.reclaimed_blocks += victim.invalid_count();
  }
  gc_log_.push_back(ev);
  return ev;
}

double VolumeSim::write_amplification() const {
  if (user_blocks_ == 0) {
    throw DataError("write amplification undefined before any user write");
  }
  return static_cast<double>(user_blocks_ + gc_blocks_) /
         static_cast<double>(user_blocks_);
}

std::uint64_t VolumeSim::total_valid_blocks() const {
  std::uint64_t total = 0;
  for (const auto& [cls, seg] : open_) total += seg.valid_count;
  for (const auto& [id, seg] : sealed_) total += seg.valid_count;
  return total;
}

std::vector<const Segment*> VolumeSim::sealed_view() const {
  std::vector<const Segment*> view;
  view.reserve(sealed_.size());
  for (const auto& [id, seg] : sealed_) view.push_back(&seg);
  return view;
}

const Segment* VolumeSim::find_segment(std::uint64_t id) const {
  const auto it = sealed_.find(id);
  if (it != sealed_.end()) return &it->second;
  for (const auto& [cls, seg] : open_) {
    if (seg.id == id) return &seg;
  }
  return nullptr;
}

void VolumeSim::set_gp_threshold(double gpt) {
  if (!(gpt > 0.0 && gpt < 1.0)) {
    throw ConfigError("gp_threshold must lie in (0, 1)");
  }
  config_.gp_threshold = gpt;
}

IdealSim::IdealSim(VolumeConfig config,
                   std::vector<std::uint64_t> invalidation_order)
    : config_(config), order_(std::move(invalidation_order)) {
  config_.validate();
}

void IdealSim::append(std::uint64_t group, const BlockMeta& meta) {
  Segment* seg = nullptr;
  if (group == 0) {
    if (overflow_.empty() || overflow_.back().full()) {
      Segment fresh;
      fresh.id = (1ull << 62) + overflow_.size();
      fresh.class_id = 0;
      fresh.creation_time = clock_;
      fresh.capacity_blocks = config_.segment_blocks();
      overflow_.push_back(std::move(fresh));
    }
    seg = &overflow_.back();
  } else {
    auto it = groups_.find(group);
    if (it == groups_.end()) {
      Segment fresh;
      fresh.id = group;
      fresh.class_id = 1;
      fresh.creation_time = clock_;
      fresh.capacity_blocks = config_.segment_blocks();
      fresh.blocks.reserve(fresh.capacity_blocks);
      it = groups_.emplace(group, std::move(fresh)).first;
    }
    seg = &it->second;
  }
  if (seg->full()) {
    throw DataError("invalidation orders overflow their ideal segment");
  }
  const auto slot = static_cast<std::uint64_t>(seg->blocks.size());
  seg->blocks.push_back(meta);
  ++seg->valid_count;
  if (seg->full()) {
    seg->seal_time = clock_;
  }
  lba_index_[meta.lba] = BlockLocation{group, slot};
}

void IdealSim::user_write(Lba lba) {
  if (clock_ >= order_.size()) {
    throw DataError("write stream longer than its invalidation-order annotation");
  }

  const auto it = lba_index_.find(lba);
  if (it != lba_index_.end()) {
    const BlockLocation loc = it->second;
    if (loc.group == 0) {
      throw DataError("annotated-as-final block was invalidated");
    }
    Segment& seg = groups_.at(loc.group);
    assert(seg.blocks[loc.slot].valid);
    seg.blocks[loc.slot].valid = false;
    --seg.valid_count;
    ++invalid_blocks_;
  }

  const std::uint64_t order = order_[clock_];
  const std::uint64_t group =
      order == kNeverInvalidated
          ? 0
          : ideal_assign(order, config_.segment_blocks());
  append(group, BlockMeta{lba, clock_, true});
  clock_ = advance_clock(clock_);
  ++user_blocks_;
  collect_ready_segments();
}

void IdealSim::collect_ready_segments() {
  const std::uint64_t s = config_.segment_blocks();
  while (invalid_blocks_ >= s) {
    const std::uint64_t group = next_victim_ + 1;
    const auto it = groups_.find(group);
    if (it == groups_.end() || !it->second.sealed() ||
        it->second.valid_count != 0) {
      throw DataError("ideal GC found a segment that is not fully invalid");
    }
    GcEvent ev;
    ev.at_time = clock_;
    ev.victims.push_back(GcVictimInfo{it->second.id, 1.0, 0, s});
    ev.reclaimed_blocks = s;
    gc_log_.push_back(std::move(ev));
    groups_.erase(it);
    invalid_blocks_ -= s;
    ++next_victim_;
  }
}

void IdealSim::replay(std::span<const Lba> writes) {
  for (const Lba lba : writes) user_write(lba);
}

double IdealSim::write_amplification() const {
  if (user_blocks_ == 0) {
    throw DataError("write amplification undefined before any user write");
  }
  return static_cast<double>(user_blocks_ + gc_blocks_) /
         static_cast<double>(user_blocks_);
}

}  // namespace lssim
