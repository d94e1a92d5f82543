#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>

#include "lssim/types.hpp"

namespace lssim {

// Memory-efficient recency tracking: a FIFO queue of recently written LBAs
// plus a map from each live LBA to its latest global insertion position.
// Replaces a full LBA -> last-write-time map; positions are absolute
// insertion counters and are never recycled, so a recency query is O(1)
// arithmetic.
//
// Capacity follows the current lifespan estimate. While the queue is longer
// than the target it dequeues two entries per insert; at the target it
// dequeues one; below it none. A dequeued LBA leaves the position map only
// if its recorded position matches the dequeued entry, so a newer entry of
// the same LBA keeps the LBA live.
class RecencyIndex {
 public:
  static constexpr std::uint64_t kUnbounded =
      std::numeric_limits<std::uint64_t>::max();

  void record_write(Lba lba) {
    if (target_capacity_ != kUnbounded) {
      const std::uint64_t len = fifo_.size();
      if (len > target_capacity_) {
        dequeue_one();
        dequeue_one();
      } else if (len == target_capacity_) {
        dequeue_one();
      }
    }
    fifo_.push_back(Entry{lba, inserted_total_});
    positions_[lba] = inserted_total_;
    ++inserted_total_;
  }

  // True iff lba has a live entry whose insertion lies within the last
  // ell_blocks inserts (inclusive). Meant to be called at the moment of a
  // user write, before record_write for that write.
  bool is_recent(Lba lba, double ell_blocks) const {
    const auto it = positions_.find(lba);
    if (it == positions_.end()) return false;
    const std::uint64_t age = inserted_total_ - it->second;
    return static_cast<double>(age) <= ell_blocks;
  }

  // Number of distinct LBAs with a live queue entry.
  std::uint64_t unique_lba_count() const { return positions_.size(); }

  std::uint64_t queue_length() const { return fifo_.size(); }
  std::uint64_t inserted_total() const { return inserted_total_; }
  std::uint64_t target_capacity() const { return target_capacity_; }

  void retarget(std::uint64_t capacity_entries) {
    target_capacity_ = capacity_entries == 0 ? 1 : capacity_entries;
  }

 private:
  struct Entry {
    Lba lba;
    std::uint64_t position;
  };

  void dequeue_one() {
    if (fifo_.empty()) return;
    const Entry front = fifo_.front();
    fifo_.pop_front();
    const auto it = positions_.find(front.lba);
    if (it != positions_.end() && it->second == front.position) {
      positions_.erase(it);
    }
  }

  std::deque<Entry> fifo_;
  std::unordered_map<Lba, std::uint64_t> positions_;
  std::uint64_t inserted_total_ = 0;
  std::uint64_t target_capacity_ = kUnbounded;
};

}  // namespace lssim
