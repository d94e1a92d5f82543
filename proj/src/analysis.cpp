#include "lssim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace lssim {

ZipfModel ZipfModel::make(std::uint64_t n, double alpha) {
  if (n == 0) {
    throw ConfigError("zipf model needs at least one LBA");
  }
  if (alpha < 0.0) {
    throw ConfigError("zipf skewness must be non-negative");
  }
  ZipfModel model;
  model.n = n;
  model.alpha = alpha;
  model.p.resize(n);
  model.log1m_p.resize(n);

  long double norm = 0.0L;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const double w = std::exp(-alpha * std::log(static_cast<double>(i)));
    model.p[i - 1] = w;
    norm += w;
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    model.p[i] = static_cast<double>(model.p[i] / norm);
    model.log1m_p[i] = std::log1p(-model.p[i]);
  }
  return model;
}

namespace {

// (1 - p)^x via exp(x * log1p(-p)); direct powering loses precision for
// p ~ 4e-7 and x ~ 1e7.
inline double pow_one_minus(double log1m_p, double exponent) {
  return std::exp(exponent * log1m_p);
}

}  // namespace

double cond_prob_user(const ZipfModel& model, std::uint64_t u0_blocks,
                      std::uint64_t v0_blocks) {
  if (v0_blocks == 0) {
    throw std::invalid_argument("v0 = 0 conditions on an empty event");
  }
  const double u0 = static_cast<double>(u0_blocks);
  const double v0 = static_cast<double>(v0_blocks);
  long double num = 0.0L;
  long double den = 0.0L;
  for (std::uint64_t i = 0; i < model.n; ++i) {
    const double p = model.p[i];
    const double qu = pow_one_minus(model.log1m_p[i], u0);
    const double qv = pow_one_minus(model.log1m_p[i], v0);
    num += static_cast<long double>((1.0 - qu) * (1.0 - qv) * p);
    den += static_cast<long double>((1.0 - qv) * p);
  }
  return static_cast<double>(num / den);
}

double cond_prob_gc(const ZipfModel& model, std::uint64_t g0_blocks,
                    std::uint64_t r0_blocks) {
  const double g0 = static_cast<double>(g0_blocks);
  const double gr = static_cast<double>(g0_blocks + r0_blocks);
  long double num = 0.0L;
  long double den = 0.0L;
  for (std::uint64_t i = 0; i < model.n; ++i) {
    const double p = model.p[i];
    const double qg = pow_one_minus(model.log1m_p[i], g0);
    const double qgr = pow_one_minus(model.log1m_p[i], gr);
    num += static_cast<long double>(p * (qg - qgr));
    den += static_cast<long double>(p * qg);
  }
  if (den == 0.0L) {
    throw std::domain_error("no probability mass survives age g0");
  }
  return static_cast<double>(num / den);
}

double top_fraction_traffic(const ZipfModel& model, double frac) {
  if (!(frac > 0.0 && frac <= 1.0)) {
    throw std::invalid_argument("fraction must lie in (0, 1]");
  }
  const auto count = static_cast<std::uint64_t>(
      std::floor(frac * static_cast<double>(model.n) + 1e-9));
  if (count >= model.n) return 1.0;
  long double sum = 0.0L;
  for (std::uint64_t i = 0; i < count; ++i) sum += model.p[i];
  return static_cast<double>(sum);
}

double empirical_cond_prob_user(std::span<const AnnotatedWrite> records,
                                std::uint64_t u0, std::uint64_t v0) {
  std::uint64_t conditioned = 0;
  std::uint64_t hits = 0;
  for (const AnnotatedWrite& r : records) {
    if (r.prev_lifespan == kFirstWrite || r.prev_lifespan > v0) continue;
    ++conditioned;
    if (r.lifespan != kNeverInvalidated && r.lifespan <= u0) ++hits;
  }
  if (conditioned == 0) {
    throw std::domain_error("no write invalidates a block with v <= v0");
  }
  return static_cast<double>(hits) / static_cast<double>(conditioned);
}

double empirical_cond_prob_gc(std::span<const AnnotatedWrite> records,
                              std::uint64_t g0, std::uint64_t r0) {
  std::uint64_t conditioned = 0;
  std::uint64_t hits = 0;
  for (const AnnotatedWrite& r : records) {
    if (r.lifespan != kNeverInvalidated && r.lifespan < g0) continue;
    ++conditioned;
    if (r.lifespan != kNeverInvalidated && r.lifespan > g0 &&
        r.lifespan <= g0 + r0) {
      ++hits;
    }
  }
  if (conditioned == 0) {
    throw std::domain_error("no write lives to age g0");
  }
  return static_cast<double>(hits) / static_cast<double>(conditioned);
}

namespace {

struct LbaUsage {
  std::uint64_t writes = 0;
};

}  // namespace

ObservationReport observation_stats(std::span<const AnnotatedWrite> records,
                                    std::uint64_t wss_blocks) {
  if (records.empty()) {
    throw std::invalid_argument("observation stats need a non-empty trace");
  }
  const std::uint64_t trace_len = records.size();
  ObservationReport report;

  // Lifespan of a never-invalidated block runs to the end of the trace.
  const auto effective_lifespan = [&](const AnnotatedWrite& r) {
    return r.lifespan == kNeverInvalidated ? trace_len - r.write_index
                                           : r.lifespan;
  };

  std::array<std::uint64_t, 4> short_counts{};
  for (const AnnotatedWrite& r : records) {
    const std::uint64_t u = effective_lifespan(r);
    for (std::size_t b = 0; b < report.kShortLifespanFractions.size(); ++b) {
      if (static_cast<double>(u) <
          report.kShortLifespanFractions[b] *
              static_cast<double>(wss_blocks)) {
        ++short_counts[b];
      }
    }
  }
  for (std::size_t b = 0; b < short_counts.size(); ++b) {
    report.short_lifespan_fractions[b] =
        static_cast<double>(short_counts[b]) / static_cast<double>(trace_len);
  }

  std::unordered_map<Lba, LbaUsage> usage;
  for (const AnnotatedWrite& r : records) ++usage[r.lba].writes;

  // Rank LBAs by update frequency (writes after the first), ties toward the
  // smaller LBA for determinism.
  std::vector<std::pair<std::uint64_t, Lba>> ranked;  // (updates, lba)
  ranked.reserve(usage.size());
  for (const auto& [lba, u] : usage) ranked.emplace_back(u.writes - 1, lba);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::uint64_t wss_lbas = ranked.size();

  static constexpr std::array<std::pair<double, double>, 4> kRankBands{
      {{0.00, 0.01}, {0.01, 0.05}, {0.05, 0.10}, {0.10, 0.20}}};
  std::unordered_map<Lba, int> group_of;
  for (std::size_t g = 0; g < kRankBands.size(); ++g) {
    const auto lo = static_cast<std::uint64_t>(kRankBands[g].first *
                                               static_cast<double>(wss_lbas));
    const auto hi = static_cast<std::uint64_t>(kRankBands[g].second *
                                               static_cast<double>(wss_lbas));
    report.frequency_cv[g].rank_lo = kRankBands[g].first;
    report.frequency_cv[g].rank_hi = kRankBands[g].second;
    report.frequency_cv[g].lba_count = hi - lo;
    for (std::uint64_t i = lo; i < hi; ++i) {
      group_of[ranked[i].second] = static_cast<int>(g);
    }
  }

  // CV over the lifespans of invalidated versions per group.
  std::array<std::vector<double>, 4> lifespans;
  for (const AnnotatedWrite& r : records) {
    if (r.lifespan == kNeverInvalidated) continue;
    const auto it = group_of.find(r.lba);
    if (it == group_of.end()) continue;
    lifespans[it->second].push_back(static_cast<double>(r.lifespan));
  }
  for (std::size_t g = 0; g < lifespans.size(); ++g) {
    const auto& xs = lifespans[g];
    report.frequency_cv[g].sample_count = xs.size();
    if (xs.empty()) continue;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (mean == 0.0) continue;
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    report.frequency_cv[g].cv = std::sqrt(var) / mean;
  }

  // Rarely updated LBAs: at most four updates over the trace.
  std::uint64_t rare_lbas = 0;
  std::array<std::uint64_t, 5> rare_counts{};
  std::uint64_t rare_versions = 0;
  for (const auto& [lba, u] : usage) {
    if (u.writes - 1 <= 4) ++rare_lbas;
  }
  for (const AnnotatedWrite& r : records) {
    const auto it = usage.find(r.lba);
    if (it->second.writes - 1 > 4) continue;
    const double u = static_cast<double>(effective_lifespan(r));
    const double wss = static_cast<double>(wss_blocks);
    std::size_t bucket = 4;
    if (u < 0.5 * wss) {
      bucket = 0;
    } else if (u < 1.0 * wss) {
      bucket = 1;
    } else if (u < 1.5 * wss) {
      bucket = 2;
    } else if (u < 2.0 * wss) {
      bucket = 3;
    }
    ++rare_counts[bucket];
    ++rare_versions;
  }
  if (rare_lbas > 0) {
    report.rarely_updated_wss_fraction =
        static_cast<double>(rare_lbas) / static_cast<double>(wss_lbas);
    std::array<double, 5> fractions{};
    for (std::size_t b = 0; b < fractions.size(); ++b) {
      fractions[b] = static_cast<double>(rare_counts[b]) /
                     static_cast<double>(rare_versions);
    }
    report.rare_lifespan_fractions = fractions;
  }
  return report;
}

double median_of_sorted(std::span<const double> sorted) {
  const std::size_t k = sorted.size();
  if (k == 0) {
    throw std::invalid_argument("median of an empty sample");
  }
  if (k % 2 == 1) return sorted[k / 2];
  return 0.5 * (sorted[k / 2 - 1] + sorted[k / 2]);
}

GpDistribution collected_gp_distribution(std::span<const GcEvent> gc_log) {
  GpDistribution dist;
  for (const GcEvent& ev : gc_log) {
    for (const GcVictimInfo& v : ev.victims) dist.sorted_gps.push_back(v.gp);
  }
  if (dist.sorted_gps.empty()) {
    throw std::invalid_argument("GP distribution over an empty GC log");
  }
  std::sort(dist.sorted_gps.begin(), dist.sorted_gps.end());
  dist.median = median_of_sorted(dist.sorted_gps);
  return dist;
}

}  // namespace lssim
