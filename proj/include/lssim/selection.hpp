#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "lssim/types.hpp"

// GC victim selection over the sealed-segment pool. Both policies are pure
// functions of the pool; ties always break toward the smallest segment id so
// results do not depend on pool ordering.

namespace lssim {

enum class SelectorKind { kGreedy, kCostBenefit };

std::optional<SelectorKind> parse_selector(std::string_view name);
std::string_view selector_name(SelectorKind kind);

// GP * age / (1 - GP), age in clock units since sealing. A fully invalid
// segment scores +infinity.
double cost_benefit_score(const Segment& seg, Clock now);

// Highest per-segment GP wins. Throws on an empty pool.
std::uint64_t greedy_select(std::span<const Segment* const> sealed);

// Highest cost-benefit score wins. Throws on an empty pool.
std::uint64_t cost_benefit_select(std::span<const Segment* const> sealed,
                                  Clock now);

std::uint64_t select_victim(SelectorKind kind,
                            std::span<const Segment* const> sealed, Clock now);

}  // namespace lssim
