#include "lssim/selection.hpp"

#include <cassert>
#include <limits>

namespace lssim {

std::optional<SelectorKind> parse_selector(std::string_view name) {
  if (name == "greedy") return SelectorKind::kGreedy;
  if (name == "cost-benefit") return SelectorKind::kCostBenefit;
  return std::nullopt;
}

std::string_view selector_name(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::kGreedy:
      return "greedy";
    case SelectorKind::kCostBenefit:
      return "cost-benefit";
  }
  return "?";
}

double cost_benefit_score(const Segment& seg, Clock now) {
  assert(seg.sealed());
  const double gp = seg.garbage_proportion();
  if (gp >= 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double age = static_cast<double>(now - *seg.seal_time);
  return gp * age / (1.0 - gp);
}

namespace {

template <typename Score>
std::uint64_t argmax_by(std::span<const Segment* const> sealed, Score score) {
  if (sealed.empty()) {
    throw std::invalid_argument("victim selection over an empty sealed pool");
  }
  const Segment* best = nullptr;
  double best_score = -std::numeric_limits<double>::infinity();
  for (const Segment* seg : sealed) {
    const double s = score(*seg);
    if (best == nullptr || s > best_score ||
        (s == best_score && seg->id < best->id)) {
      best = seg;
      best_score = s;
    }
  }
  return best->id;
}

}  // namespace

std::uint64_t greedy_select(std::span<const Segment* const> sealed) {
  return argmax_by(sealed,
                   [](const Segment& s) { return s.garbage_proportion(); });
}

std::uint64_t cost_benefit_select(std::span<const Segment* const> sealed,
                                  Clock now) {
  return argmax_by(
      sealed, [now](const Segment& s) { return cost_benefit_score(s, now); });
}

std::uint64_t select_victim(SelectorKind kind,
                            std::span<const Segment* const> sealed,
                            Clock now) {
  switch (kind) {
    case SelectorKind::kGreedy:
      return greedy_select(sealed);
    case SelectorKind::kCostBenefit:
      return cost_benefit_select(sealed, now);
  }
  throw std::logic_error("unknown selector");
}

}  // namespace lssim
