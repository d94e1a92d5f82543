#include "lssim/workload.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace lssim {

std::optional<TraceFormat> parse_trace_format(std::string_view name) {
  if (name == "native-csv" || name == "native") return TraceFormat::kNativeCsv;
  if (name == "alibaba") return TraceFormat::kAlibaba;
  if (name == "tencent") return TraceFormat::kTencent;
  return std::nullopt;
}

std::string_view trace_format_name(TraceFormat format) {
  switch (format) {
    case TraceFormat::kNativeCsv:
      return "native-csv";
    case TraceFormat::kAlibaba:
      return "alibaba";
    case TraceFormat::kTencent:
      return "tencent";
  }
  return "?";
}

TraceColumns default_columns(TraceFormat format) {
  switch (format) {
    case TraceFormat::kNativeCsv:
      return TraceColumns{0, 1, 2, 3, 4};
    case TraceFormat::kAlibaba:
      // device_id,opcode,offset,length,timestamp
      return TraceColumns{4, 0, 1, 2, 3};
    case TraceFormat::kTencent:
      // timestamp,offset,size,ioType,volume_id
      return TraceColumns{0, 4, 3, 1, 2};
  }
  return {};
}

TraceColumns parse_columns_spec(std::string_view spec) {
  TraceColumns cols;
  int index = 0;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const std::size_t comma = spec.find(',', start);
    const std::string_view tok =
        spec.substr(start, comma == std::string_view::npos ? spec.size() - start
                                                           : comma - start);
    if (tok == "ts") {
      cols.timestamp = index;
    } else if (tok == "vol") {
      cols.volume = index;
    } else if (tok == "op") {
      cols.opcode = index;
    } else if (tok == "off") {
      cols.offset = index;
    } else if (tok == "len") {
      cols.length = index;
    } else if (tok != "skip") {
      throw ConfigError("unknown column token '" + std::string(tok) +
                        "' (expect ts,vol,op,off,len,skip)");
    }
    ++index;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (cols.offset < 0 || cols.length < 0) {
    throw ConfigError("column spec must name at least off and len");
  }
  return cols;
}

namespace {

std::string_view field_at(const std::vector<std::string_view>& fields, int idx,
                          std::uint64_t line_no) {
  if (idx < 0 || static_cast<std::size_t>(idx) >= fields.size()) {
    throw DataError("line " + std::to_string(line_no) + ": missing column " +
                    std::to_string(idx));
  }
  return fields[idx];
}

void split_csv(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::uint64_t parse_u64(std::string_view tok, std::uint64_t line_no,
                        const char* what) {
  std::uint64_t value = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || tok.empty()) {
    throw DataError("line " + std::to_string(line_no) + ": bad " +
                    std::string(what) + " field '" + std::string(tok) + "'");
  }
  return value;
}

bool looks_numeric(std::string_view tok) {
  return !tok.empty() && tok.front() >= '0' && tok.front() <= '9';
}

bool is_write_op(TraceFormat format, std::string_view op) {
  if (format == TraceFormat::kTencent) {
    return op == "1";
  }
  return !op.empty() && (op.front() == 'W' || op.front() == 'w');
}

}  // namespace

void for_each_block_write(
    std::istream& in, TraceFormat format,
    const std::function<void(const WriteRecord&)>& sink,
    std::optional<TraceColumns> columns) {
  const TraceColumns cols = columns.value_or(default_columns(format));
  std::string line;
  std::vector<std::string_view> fields;
  std::uint64_t line_no = 0;
  WriteRecord record;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    split_csv(line, fields);

    // The native layout permits a single header line.
    if (line_no == 1 && format == TraceFormat::kNativeCsv &&
        !looks_numeric(field_at(fields, cols.timestamp, line_no))) {
      continue;
    }

    if (cols.opcode >= 0 &&
        !is_write_op(format, field_at(fields, cols.opcode, line_no))) {
      continue;
    }

    std::uint64_t offset =
        parse_u64(field_at(fields, cols.offset, line_no), line_no, "offset");
    std::uint64_t length =
        parse_u64(field_at(fields, cols.length, line_no), line_no, "length");
    std::uint64_t ts =
        cols.timestamp >= 0
            ? parse_u64(field_at(fields, cols.timestamp, line_no), line_no,
                        "timestamp")
            : 0;
    if (format == TraceFormat::kTencent) {
      offset *= 512;   // sector-addressed
      length *= 512;
      ts *= 1000000;   // seconds to microseconds
    }
    if (length == 0) continue;

    record.timestamp_us = ts;
    if (cols.volume >= 0) {
      record.volume_id.assign(field_at(fields, cols.volume, line_no));
    } else {
      record.volume_id.assign("vol0");
    }

    // Round the request outward to full 4 KiB coverage, then emit one
    // record per covered block.
    const std::uint64_t first_block = offset / kBlockSize;
    const std::uint64_t last_block = (offset + length - 1) / kBlockSize;
    record.length = kBlockSize;
    for (std::uint64_t b = first_block; b <= last_block; ++b) {
      record.offset = b * kBlockSize;
      sink(record);
    }
  }
}

std::vector<WriteRecord> parse_trace(std::istream& in, TraceFormat format,
                                     std::optional<TraceColumns> columns) {
  std::vector<WriteRecord> out;
  for_each_block_write(
      in, format, [&](const WriteRecord& r) { out.push_back(r); }, columns);
  return out;
}

void serialize_native(std::ostream& out,
                      std::span<const WriteRecord> records) {
  for (const WriteRecord& r : records) {
    out << r.timestamp_us << ',' << r.volume_id << ",W," << r.offset << ','
        << r.length << '\n';
  }
}

std::vector<VolumeStats> collect_volume_stats(
    std::istream& in, TraceFormat format,
    std::optional<TraceColumns> columns) {
  std::vector<VolumeStats> stats;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::unordered_set<Lba>> seen;
  for_each_block_write(
      in, format,
      [&](const WriteRecord& r) {
        auto [it, inserted] = index.try_emplace(r.volume_id, stats.size());
        if (inserted) {
          stats.push_back(VolumeStats{r.volume_id, 0, 0});
          seen.emplace_back();
        }
        VolumeStats& vs = stats[it->second];
        ++vs.traffic_blocks;
        if (seen[it->second].insert(r.lba()).second) {
          ++vs.wss_blocks;
        }
      },
      columns);
  return stats;
}

bool volume_selected(const VolumeStats& stats, const FilterRule& rule) {
  if (stats.wss_bytes() <= rule.min_wss_bytes) return false;
  return static_cast<double>(stats.traffic_bytes()) >
         rule.traffic_multiple * static_cast<double>(stats.wss_bytes());
}

std::vector<std::string> filter_volumes(std::span<const VolumeStats> stats,
                                        const FilterRule& rule) {
  std::vector<std::string> selected;
  for (const VolumeStats& vs : stats) {
    if (volume_selected(vs, rule)) selected.push_back(vs.volume_id);
  }
  return selected;
}

std::vector<AnnotatedWrite> annotate_bits(std::span<const Lba> writes) {
  std::vector<AnnotatedWrite> out(writes.size());
  std::unordered_map<Lba, std::uint64_t> last_write;
  for (std::uint64_t i = 0; i < writes.size(); ++i) {
    out[i].lba = writes[i];
    out[i].write_index = i;
    auto [it, inserted] = last_write.try_emplace(writes[i], i);
    if (!inserted) {
      out[i].prev_lifespan = i - it->second;
      out[it->second].lifespan = i - it->second;
      it->second = i;
    }
  }
  return out;
}

std::vector<Clock> invalidation_clocks(std::span<const Lba> writes) {
  std::vector<Clock> inv(writes.size(), kNeverInvalidated);
  std::unordered_map<Lba, std::uint64_t> last_write;
  for (std::uint64_t i = 0; i < writes.size(); ++i) {
    auto [it, inserted] = last_write.try_emplace(writes[i], i);
    if (!inserted) {
      inv[it->second] = i;
      it->second = i;
    }
  }
  return inv;
}

std::vector<std::uint64_t> invalidation_orders(
    std::span<const Clock> invalidation_clock) {
  std::vector<std::pair<Clock, std::uint64_t>> by_clock;
  for (std::uint64_t i = 0; i < invalidation_clock.size(); ++i) {
    if (invalidation_clock[i] != kNeverInvalidated) {
      by_clock.emplace_back(invalidation_clock[i], i);
    }
  }
  std::sort(by_clock.begin(), by_clock.end());
  std::vector<std::uint64_t> orders(invalidation_clock.size(),
                                    kNeverInvalidated);
  std::uint64_t rank = 0;
  for (const auto& [clock, idx] : by_clock) {
    orders[idx] = ++rank;
  }
  return orders;
}

void write_annotations_csv(std::ostream& out,
                           std::span<const AnnotatedWrite> records) {
  out << "write_index,lba,lifespan,prev_lifespan\n";
  for (const AnnotatedWrite& r : records) {
    out << r.write_index << ',' << r.lba << ',';
    if (r.lifespan == kNeverInvalidated) {
      out << '-';
    } else {
      out << r.lifespan;
    }
    out << ',';
    if (r.prev_lifespan == kFirstWrite) {
      out << '-';
    } else {
      out << r.prev_lifespan;
    }
    out << '\n';
  }
}

std::vector<AnnotatedWrite> read_annotations_csv(std::istream& in) {
  std::vector<AnnotatedWrite> out;
  std::string line;
  std::vector<std::string_view> fields;
  std::uint64_t line_no = 0;
  const auto parse_or_sentinel = [](std::string_view tok, std::uint64_t line_no,
                                    const char* what) {
    if (tok == "-") return kNeverInvalidated;
    return parse_u64(tok, line_no, what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("write_index", 0) == 0) continue;
    split_csv(line, fields);
    if (fields.size() != 4) {
      throw DataError("line " + std::to_string(line_no) +
                      ": annotation rows need 4 fields");
    }
    AnnotatedWrite r;
    r.write_index = parse_u64(fields[0], line_no, "write_index");
    r.lba = parse_u64(fields[1], line_no, "lba");
    r.lifespan = parse_or_sentinel(fields[2], line_no, "lifespan");
    r.prev_lifespan = parse_or_sentinel(fields[3], line_no, "prev_lifespan");
    out.push_back(r);
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (wss_blocks == 0) throw ConfigError("synthetic WSS must be positive");
  if (alpha < 0.0) throw ConfigError("zipf skewness must be non-negative");
  if (!(hot_fraction > 0.0 && hot_fraction < 1.0)) {
    throw ConfigError("hot_fraction must lie in (0, 1)");
  }
  if (churn_period_blocks == 0) {
    throw ConfigError("churn period must be positive");
  }
}

SyntheticGenerator::SyntheticGenerator(const SyntheticSpec& spec,
                                       bool two_region)
    : spec_(spec),
      two_region_(two_region),
      draw_rng_(splitmix64(spec.seed ^ 0x7d3a9ull)),
      churn_rng_(splitmix64(spec.seed ^ 0x9a3c51ull)) {
  spec_.validate();
  const ZipfModel model = ZipfModel::make(spec_.wss_blocks, spec_.alpha);
  cumulative_.resize(model.n);
  long double acc = 0.0L;
  for (std::uint64_t i = 0; i < model.n; ++i) {
    acc += model.p[i];
    cumulative_[i] = static_cast<double>(acc);
  }
  cumulative_.back() = 1.0;

  std::vector<Lba> perm(model.n);
  std::iota(perm.begin(), perm.end(), Lba{0});
  Rng setup_rng(splitmix64(spec_.seed ^ 0x5e7a11ull));
  setup_rng.shuffle(perm);

  if (two_region_) {
    std::uint64_t hot = static_cast<std::uint64_t>(
        spec_.hot_fraction * static_cast<double>(model.n) + 0.5);
    hot = std::clamp<std::uint64_t>(hot, 1, model.n - 1);
    hot_lbas_.assign(perm.begin(), perm.begin() + hot);
    cold_lbas_.assign(perm.begin() + hot, perm.end());
  } else {
    cold_lbas_ = std::move(perm);
  }
}

std::uint64_t SyntheticGenerator::draw_rank() {
  const double u = draw_rng_.next_unit();
  const auto it =
      std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return static_cast<std::uint64_t>(it - cumulative_.begin());
}

void SyntheticGenerator::churn() { churn_rng_.shuffle(hot_lbas_); }

Lba SyntheticGenerator::next() {
  if (two_region_) {
    const std::uint64_t epoch = emitted_ / spec_.churn_period_blocks;
    while (epoch_ < epoch) {
      churn();
      ++epoch_;
    }
  }
  const std::uint64_t rank = draw_rank();
  ++emitted_;
  return rank < hot_lbas_.size() ? hot_lbas_[rank]
                                 : cold_lbas_[rank - hot_lbas_.size()];
}

std::vector<Lba> gen_zipf(const SyntheticSpec& spec) {
  SyntheticGenerator gen(spec, false);
  std::vector<Lba> out;
  out.reserve(spec.total_writes);
  for (std::uint64_t i = 0; i < spec.total_writes; ++i) out.push_back(gen.next());
  return out;
}

std::vector<Lba> gen_two_region(const SyntheticSpec& spec) {
  SyntheticGenerator gen(spec, true);
  std::vector<Lba> out;
  out.reserve(spec.total_writes);
  for (std::uint64_t i = 0; i < spec.total_writes; ++i) out.push_back(gen.next());
  return out;
}

}  // namespace lssim
