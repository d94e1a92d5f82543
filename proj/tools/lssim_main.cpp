// lssim: trace-driven simulator of garbage collection in log-structured
// block storage. Subcommands: replay, sweep, math, gen, annotate, filter,
// stats. Exit codes: 0 success, 2 configuration error, 3 data error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "lssim/analysis.hpp"
#include "lssim/engine.hpp"
#include "lssim/placement.hpp"
#include "lssim/report.hpp"
#include "lssim/selection.hpp"
#include "lssim/workload.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace lssim;

namespace {

constexpr std::uint64_t kBlocksPerMiB = (1ull << 20) / kBlockSize;

// ---------------- shared option bundles ----------------

struct SchemeOpts {
  std::string scheme = "nosep";
  std::string selector = "greedy";
  std::uint64_t segment_mib = 512;
  double gp_threshold = 0.15;
  std::uint64_t gc_retrieval_mib = 0;  // 0: one segment per operation
  std::uint32_t num_classes = 6;
  std::string sepbit_index = "fifo";
  std::vector<double> sepbit_thresholds{4.0, 16.0};
  std::string sepbit_method = "explicit";  // explicit | method1 | method2
  double sepbit_scale = 1.0;
  bool sepbit_gw_adaptive = false;

  void add_flags(CLI::App* cmd, bool lists_allowed = false) {
    (void)lists_allowed;
    cmd->add_option("--scheme", scheme,
                    "Placement scheme: nosep|sepgc|sepbit|uw|gw|dac|fk|ideal")
        ->capture_default_str()
        ->envname("LSSIM_SCHEME");
    cmd->add_option("--selector", selector,
                    "GC victim selection: greedy|cost-benefit")
        ->capture_default_str()
        ->envname("LSSIM_SELECTOR");
    cmd->add_option("--segment-mib", segment_mib, "Segment size in MiB")
        ->capture_default_str()
        ->envname("LSSIM_SEGMENT_MIB");
    cmd->add_option("--gp-threshold", gp_threshold,
                    "Garbage proportion that triggers GC")
        ->capture_default_str()
        ->envname("LSSIM_GP_THRESHOLD");
    cmd->add_option("--gc-retrieval-mib", gc_retrieval_mib,
                    "Data pulled per GC operation (0 = one segment)")
        ->capture_default_str();
    cmd->add_option("--classes", num_classes, "Number of placement classes")
        ->capture_default_str();
    cmd->add_option("--sepbit-index", sepbit_index,
                    "SepBIT recency index: fifo|exact")
        ->capture_default_str();
    cmd->add_option("--sepbit-thresholds", sepbit_thresholds,
                    "Age thresholds as multiples of the lifespan estimate")
        ->capture_default_str();
    cmd->add_option("--sepbit-method", sepbit_method,
                    "Threshold generator: explicit|method1|method2")
        ->capture_default_str();
    cmd->add_option("--sepbit-scale", sepbit_scale,
                    "Scales every separation threshold")
        ->capture_default_str();
    cmd->add_flag("--sepbit-gw-adaptive", sepbit_gw_adaptive,
                  "Derive GC age thresholds from class-3/4 lifespans");
  }

  VolumeConfig volume_config(std::uint64_t segment_mib_override = 0,
                             double gpt_override = -1.0) const {
    VolumeConfig cfg;
    const std::uint64_t mib =
        segment_mib_override != 0 ? segment_mib_override : segment_mib;
    cfg.segment_size = mib << 20;
    cfg.gp_threshold = gpt_override > 0 ? gpt_override : gp_threshold;
    cfg.gc_retrieval_bytes = gc_retrieval_mib << 20;
    cfg.num_classes = num_classes;
    cfg.validate();
    return cfg;
  }

  RunSpec run_spec(const std::string& scheme_name_in = "",
                   const std::string& selector_name_in = "",
                   std::uint64_t segment_mib_override = 0,
                   double gpt_override = -1.0) const {
    RunSpec spec;
    spec.volume = volume_config(segment_mib_override, gpt_override);
    const std::string& sch = scheme_name_in.empty() ? scheme : scheme_name_in;
    const std::string& sel =
        selector_name_in.empty() ? selector : selector_name_in;
    const auto parsed_scheme = parse_scheme(sch);
    if (!parsed_scheme) throw ConfigError("unknown scheme '" + sch + "'");
    spec.scheme = *parsed_scheme;
    const auto parsed_selector = parse_selector(sel);
    if (!parsed_selector) throw ConfigError("unknown selector '" + sel + "'");
    spec.selector = *parsed_selector;

    SepBitOptions& sb = spec.sepbit;
    if (sepbit_index == "fifo") {
      sb.index_mode = SepBitIndexMode::kFifoQueue;
    } else if (sepbit_index == "exact") {
      sb.index_mode = SepBitIndexMode::kExactMap;
    } else {
      throw ConfigError("unknown sepbit index '" + sepbit_index + "'");
    }
    if (sepbit_method == "explicit") {
      sb.age_multipliers = sepbit_thresholds;
    } else {
      const std::uint32_t user_classes =
          spec.scheme == SchemeKind::kSepBitGw ? 1 : 2;
      const std::uint32_t fast_path =
          spec.scheme == SchemeKind::kSepBitGw ? 0 : 1;
      if (num_classes <= user_classes + fast_path + 1) {
        throw ConfigError("too few classes for generated age thresholds");
      }
      const std::uint32_t remaining = num_classes - user_classes - fast_path;
      if (sepbit_method == "method1") {
        sb.age_multipliers = sepbit_multipliers_method1(remaining);
      } else if (sepbit_method == "method2") {
        sb.age_multipliers = sepbit_multipliers_method2(remaining);
      } else {
        throw ConfigError("unknown sepbit method '" + sepbit_method + "'");
      }
    }
    sb.threshold_scale = sepbit_scale;
    sb.adaptive_gc_thresholds = sepbit_gw_adaptive;
    return spec;
  }
};

struct WorkloadOpts {
  std::string trace_path;
  std::string format = "native-csv";
  std::string columns_spec;
  std::vector<std::string> volumes;  // empty: all
  bool apply_filter = false;
  double min_wss_gib = 10.0;
  double traffic_multiple = 2.0;
  std::string annotations_dir;

  std::string synthetic;  // zipf | two-region
  std::uint64_t wss_mib = 512;
  double alpha = 1.0;
  std::uint64_t writes = 0;  // 0: traffic_mult * wss
  double traffic_mult = 30.0;
  double hot_fraction = 0.2;
  std::uint64_t churn_mib = 512;
  std::uint64_t seed = 1;

  void add_flags(CLI::App* cmd, bool trace_only = false) {
    cmd->add_option("--trace", trace_path, "Trace file to replay")
        ->envname("LSSIM_TRACE");
    cmd->add_option("--format", format,
                    "Trace format: native-csv|alibaba|tencent")
        ->capture_default_str();
    cmd->add_option("--columns", columns_spec,
                    "Column order override, e.g. ts,vol,op,off,len");
    cmd->add_option("--volume", volumes, "Restrict to these volume ids");
    cmd->add_flag("--apply-filter", apply_filter,
                  "Keep only volumes passing the WSS/traffic filter");
    cmd->add_option("--min-wss-gib", min_wss_gib,
                    "Filter: minimum write working set (GiB)")
        ->capture_default_str();
    cmd->add_option("--traffic-multiple", traffic_multiple,
                    "Filter: required traffic as a multiple of WSS")
        ->capture_default_str();
    cmd->add_option("--annotations", annotations_dir,
                    "Directory of per-volume annotation sidecars");
    if (trace_only) return;
    cmd->add_option("--synthetic", synthetic,
                    "Generate the workload instead: zipf|two-region");
    cmd->add_option("--wss-mib", wss_mib, "Synthetic working set size (MiB)")
        ->capture_default_str();
    cmd->add_option("--alpha", alpha, "Zipf skewness")
        ->capture_default_str()
        ->envname("LSSIM_ALPHA");
    cmd->add_option("--writes", writes,
                    "Synthetic write count (0 = traffic-mult * WSS)")
        ->capture_default_str();
    cmd->add_option("--traffic-mult", traffic_mult,
                    "Synthetic traffic as a multiple of the WSS")
        ->capture_default_str();
    cmd->add_option("--hot-fraction", hot_fraction,
                    "Two-region: share of WSS in the hot region")
        ->capture_default_str();
    cmd->add_option("--churn-mib", churn_mib,
                    "Two-region: hot-region re-permutation period (MiB)")
        ->capture_default_str();
    cmd->add_option("--seed", seed, "Workload RNG seed")
        ->capture_default_str()
        ->envname("LSSIM_SEED");
  }

  bool is_synthetic() const { return !synthetic.empty(); }

  std::optional<TraceColumns> columns() const {
    if (columns_spec.empty()) return std::nullopt;
    return parse_columns_spec(columns_spec);
  }

  TraceFormat trace_format() const {
    const auto f = parse_trace_format(format);
    if (!f) throw ConfigError("unknown trace format '" + format + "'");
    return *f;
  }

  SyntheticSpec synthetic_spec(double alpha_override = -1.0) const {
    SyntheticSpec spec;
    spec.wss_blocks = wss_mib * kBlocksPerMiB;
    spec.alpha = alpha_override >= 0 ? alpha_override : alpha;
    spec.total_writes =
        writes != 0 ? writes
                    : static_cast<std::uint64_t>(
                          traffic_mult * static_cast<double>(spec.wss_blocks));
    spec.hot_fraction = hot_fraction;
    spec.churn_period_blocks = churn_mib * kBlocksPerMiB;
    spec.seed = seed;
    spec.validate();
    return spec;
  }

  std::vector<Lba> generate(double alpha_override = -1.0) const {
    const SyntheticSpec spec = synthetic_spec(alpha_override);
    if (synthetic == "zipf") return gen_zipf(spec);
    if (synthetic == "two-region") return gen_two_region(spec);
    throw ConfigError("unknown synthetic workload '" + synthetic + "'");
  }
};

// One volume's buffered write stream.
struct VolumeWrites {
  std::string volume_id;
  std::vector<Lba> writes;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw DataError("cannot open '" + path + "'");
  }
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out.good()) {
    throw DataError("cannot write '" + path + "'");
  }
  return out;
}

std::string sanitize_filename(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '-' ||
                    c == '_';
    if (!ok) c = '_';
  }
  return out;
}

// Buffers the block-write streams of the selected volumes.
std::vector<VolumeWrites> load_trace_volumes(const WorkloadOpts& wl) {
  const TraceFormat format = wl.trace_format();
  const auto columns = wl.columns();

  std::vector<std::string> keep = wl.volumes;
  if (wl.apply_filter) {
    auto in = open_input(wl.trace_path);
    const auto stats = collect_volume_stats(in, format, columns);
    FilterRule rule;
    rule.min_wss_bytes =
        static_cast<std::uint64_t>(wl.min_wss_gib * (1ull << 30));
    rule.traffic_multiple = wl.traffic_multiple;
    const auto selected = filter_volumes(stats, rule);
    if (keep.empty()) {
      keep = selected;
    } else {
      std::vector<std::string> both;
      for (const auto& v : keep) {
        if (std::find(selected.begin(), selected.end(), v) !=
            selected.end()) {
          both.push_back(v);
        }
      }
      keep = both;
    }
  }

  std::vector<VolumeWrites> out;
  std::unordered_map<std::string, std::size_t> index;
  auto in = open_input(wl.trace_path);
  for_each_block_write(
      in, format,
      [&](const WriteRecord& r) {
        if (!keep.empty() &&
            std::find(keep.begin(), keep.end(), r.volume_id) == keep.end()) {
          return;
        }
        auto [it, inserted] = index.try_emplace(r.volume_id, out.size());
        if (inserted) out.push_back(VolumeWrites{r.volume_id, {}});
        out[it->second].writes.push_back(r.lba());
      },
      columns);
  if (out.empty()) {
    throw DataError("no volumes selected from '" + wl.trace_path + "'");
  }
  return out;
}

std::optional<std::vector<Clock>> load_annotation_clocks(
    const WorkloadOpts& wl, const std::string& volume_id) {
  if (wl.annotations_dir.empty()) return std::nullopt;
  const fs::path path = fs::path(wl.annotations_dir) /
                        (sanitize_filename(volume_id) + ".ann.csv");
  auto in = open_input(path.string());
  const auto records = read_annotations_csv(in);
  std::vector<Clock> clocks(records.size(), kNeverInvalidated);
  for (const AnnotatedWrite& r : records) {
    if (r.write_index >= clocks.size()) {
      throw DataError("annotation index out of range in " + path.string());
    }
    if (r.lifespan != kNeverInvalidated) {
      clocks[r.write_index] = r.write_index + r.lifespan;
    }
  }
  return clocks;
}

void parallel_for(std::size_t jobs, std::size_t count,
                  const std::function<void(std::size_t)>& body) {
  if (jobs <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  const std::size_t n = std::min(jobs, count);
  for (std::size_t w = 0; w < n; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next.fetch_add(1); i < count;
           i = next.fetch_add(1)) {
        body(i);
      }
    }));
  }
  for (auto& f : workers) f.get();  // propagates the first exception
}

json memory_json(const MemoryMetrics& m) {
  json j;
  j["samples"] = m.sample_count;
  j["sufficient"] = m.sufficient;
  j["worst_unique_lbas"] = m.worst_unique;
  j["snapshot_unique_lbas"] = m.snapshot_unique;
  j["worst_reduction"] = m.worst_reduction;
  j["snapshot_reduction"] = m.snapshot_reduction;
  return j;
}

json result_json(const VolumeResult& r) {
  json j;
  j["volume_id"] = r.volume_id;
  j["user_blocks"] = r.user_blocks;
  j["gc_blocks"] = r.gc_blocks;
  j["wa"] = r.wa;
  j["gc_ops"] = r.gc_ops;
  j["distinct_lbas"] = r.distinct_lbas;
  j["capacity_bytes"] = r.capacity_bytes;
  if (r.median_victim_gp) {
    j["median_victim_gp"] = *r.median_victim_gp;
  } else {
    j["median_victim_gp"] = nullptr;
  }
  if (r.memory) j["memory"] = memory_json(*r.memory);
  return j;
}

// ---------------- replay ----------------

struct ReplayCmd {
  WorkloadOpts workload;
  SchemeOpts scheme;
  std::string out_prefix = "lssim_run";
  bool gc_log = false;
  std::size_t jobs = 1;
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand("replay",
                             "Replay a workload and report per-volume WA");
    cmd->configurable();
    workload.add_flags(cmd);
    scheme.add_flags(cmd);
    cmd->add_option("--out-prefix", out_prefix, "Output path prefix")
        ->capture_default_str()
        ->envname("LSSIM_OUT_PREFIX");
    cmd->add_flag("--gc-log", gc_log, "Emit per-volume GC event logs");
    cmd->add_option("--jobs", jobs, "Volumes processed in parallel")
        ->capture_default_str()
        ->envname("LSSIM_JOBS");
  }

  int run(CLI::App& app) {
    const RunSpec spec = scheme.run_spec();

    std::vector<VolumeWrites> volumes;
    std::optional<double> alpha_col;
    if (workload.is_synthetic()) {
      volumes.push_back(VolumeWrites{"synthetic", workload.generate()});
      alpha_col = workload.alpha;
    } else if (!workload.trace_path.empty()) {
      volumes = load_trace_volumes(workload);
    } else {
      throw ConfigError("replay needs --trace or --synthetic");
    }

    std::vector<VolumeResult> results(volumes.size());
    std::vector<std::vector<GcEvent>> logs(volumes.size());
    parallel_for(jobs, volumes.size(), [&](std::size_t i) {
      std::vector<GcEvent>* log = gc_log ? &logs[i] : nullptr;
      const auto clocks =
          load_annotation_clocks(workload, volumes[i].volume_id);
      results[i] = run_volume(volumes[i].volume_id, volumes[i].writes, spec,
                              log, clocks ? &*clocks : nullptr);
    });

    // Results CSV with one row per volume plus the aggregate.
    auto csv = open_output(out_prefix + "_results.csv");
    write_results_csv_header(csv);
    ResultRow row;
    row.scheme = scheme.scheme;
    row.selector = scheme.selector;
    row.segment_size_bytes = spec.volume.segment_size;
    row.gp_threshold = spec.volume.gp_threshold;
    row.alpha = alpha_col;
    for (const VolumeResult& r : results) {
      row.result = r;
      write_results_csv_row(csv, row);
    }
    VolumeResult aggregate;
    aggregate.volume_id = "ALL";
    for (const VolumeResult& r : results) {
      aggregate.user_blocks += r.user_blocks;
      aggregate.gc_blocks += r.gc_blocks;
      aggregate.gc_ops += r.gc_ops;
      aggregate.distinct_lbas += r.distinct_lbas;
      aggregate.capacity_bytes += r.capacity_bytes;
    }
    aggregate.wa = aggregate_wa(results);
    row.result = aggregate;
    write_results_csv_row(csv, row);
    csv.close();

    json doc;
    doc["schema_version"] = kResultSchemaVersion;
    doc["config"] = json::object();
    doc["config"]["scheme"] = scheme.scheme;
    doc["config"]["selector"] = scheme.selector;
    doc["config"]["segment_size_bytes"] = spec.volume.segment_size;
    doc["config"]["gp_threshold"] = spec.volume.gp_threshold;
    doc["config"]["gc_retrieval_bytes"] = spec.volume.retrieval_bytes();
    doc["config"]["num_classes"] = spec.volume.num_classes;
    if (workload.is_synthetic()) {
      doc["config"]["synthetic"] = workload.synthetic;
      doc["config"]["alpha"] = workload.alpha;
      doc["config"]["wss_blocks"] = workload.synthetic_spec().wss_blocks;
      doc["config"]["total_writes"] = workload.synthetic_spec().total_writes;
      doc["config"]["seed"] = workload.seed;
    } else {
      doc["config"]["trace"] = workload.trace_path;
      doc["config"]["format"] = workload.format;
    }
    doc["volumes"] = json::array();
    for (const VolumeResult& r : results) doc["volumes"].push_back(result_json(r));
    doc["aggregate_wa"] = aggregate.wa;
    auto js = open_output(out_prefix + "_results.json");
    js << doc.dump(2) << '\n';
    js.close();

    // Echo the full configuration; re-running with --config reproduces the
    // results byte for byte.
    auto cfg = open_output(out_prefix + "_config.toml");
    cfg << app.config_to_str(true, true);
    cfg.close();

    if (gc_log) {
      for (std::size_t i = 0; i < volumes.size(); ++i) {
        auto out = open_output(out_prefix + "_gclog_" +
                               sanitize_filename(volumes[i].volume_id) +
                               ".csv");
        write_gc_log_csv(out, logs[i]);
      }
    }

    std::cout << "aggregate_wa " << fmt_double(aggregate.wa) << " over "
              << results.size() << " volume(s)\n";
    return 0;
  }
};

// ---------------- sweep ----------------

struct SweepCmd {
  WorkloadOpts workload;
  SchemeOpts scheme;
  std::vector<std::string> schemes{"nosep", "sepgc", "sepbit"};
  std::vector<std::string> selectors{"greedy"};
  std::vector<std::uint64_t> segment_mibs;
  std::vector<double> gp_thresholds;
  std::vector<double> alphas;
  std::string out = "sweep.csv";
  std::size_t jobs = 1;
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand(
        "sweep", "Replay a grid of configurations into one table");
    cmd->configurable();
    workload.add_flags(cmd);
    scheme.add_flags(cmd);
    cmd->add_option("--schemes", schemes, "Scheme axis")
        ->capture_default_str();
    cmd->add_option("--selectors", selectors, "Selector axis")
        ->capture_default_str();
    cmd->add_option("--segment-mibs", segment_mibs,
                    "Segment size axis (MiB); empty = --segment-mib");
    cmd->add_option("--gp-thresholds", gp_thresholds,
                    "GP threshold axis; empty = --gp-threshold");
    cmd->add_option("--alphas", alphas,
                    "Skewness axis (synthetic workloads only)");
    cmd->add_option("--out", out, "Output CSV")->capture_default_str();
    cmd->add_option("--jobs", jobs, "Cells processed in parallel")
        ->capture_default_str();
  }

  struct Cell {
    std::string scheme;
    std::string selector;
    std::uint64_t segment_mib;
    double gpt;
    std::optional<double> alpha;
  };

  int run(CLI::App&) {
    if (!workload.is_synthetic() && !alphas.empty()) {
      throw ConfigError("--alphas applies to synthetic workloads only");
    }
    if (!workload.is_synthetic() && workload.trace_path.empty()) {
      throw ConfigError("sweep needs --trace or --synthetic");
    }

    const std::vector<std::uint64_t> seg_axis =
        segment_mibs.empty() ? std::vector<std::uint64_t>{scheme.segment_mib}
                             : segment_mibs;
    const std::vector<double> gpt_axis =
        gp_thresholds.empty() ? std::vector<double>{scheme.gp_threshold}
                              : gp_thresholds;
    std::vector<std::optional<double>> alpha_axis;
    if (workload.is_synthetic()) {
      if (alphas.empty()) {
        alpha_axis.push_back(workload.alpha);
      } else {
        for (const double a : alphas) alpha_axis.push_back(a);
      }
    } else {
      alpha_axis.push_back(std::nullopt);
    }

    std::vector<Cell> cells;
    for (const auto& sch : schemes) {
      for (const auto& sel : selectors) {
        for (const auto seg : seg_axis) {
          for (const auto gpt : gpt_axis) {
            for (const auto& a : alpha_axis) {
              cells.push_back(Cell{sch, sel, seg, gpt, a});
            }
          }
        }
      }
    }

    std::vector<VolumeWrites> trace_volumes;
    if (!workload.is_synthetic()) {
      trace_volumes = load_trace_volumes(workload);
    }

    auto csv = open_output(out);
    write_results_csv_header(csv);
    csv.flush();

    // Cells run in deterministic order; rows are flushed cell by cell so a
    // failing cell leaves everything completed before it on disk.
    std::vector<std::vector<ResultRow>> cell_rows(cells.size());
    std::vector<char> done(cells.size(), 0);
    std::size_t flushed = 0;
    const auto flush_done = [&] {
      while (flushed < cells.size() && done[flushed]) {
        for (const ResultRow& row : cell_rows[flushed]) {
          write_results_csv_row(csv, row);
        }
        csv.flush();
        ++flushed;
      }
    };

    const std::size_t batch = std::max<std::size_t>(jobs, 1);
    for (std::size_t base = 0; base < cells.size(); base += batch) {
      const std::size_t end = std::min(cells.size(), base + batch);
      try {
        parallel_for(jobs, end - base, [&](std::size_t off) {
          const std::size_t i = base + off;
          const Cell& cell = cells[i];
          const RunSpec spec = scheme.run_spec(cell.scheme, cell.selector,
                                               cell.segment_mib, cell.gpt);
          std::vector<VolumeResult> results;
          if (workload.is_synthetic()) {
            const std::vector<Lba> writes = workload.generate(*cell.alpha);
            results.push_back(run_volume("synthetic", writes, spec));
          } else {
            for (const VolumeWrites& vw : trace_volumes) {
              results.push_back(run_volume(vw.volume_id, vw.writes, spec));
            }
          }
          VolumeResult aggregate;
          aggregate.volume_id = "ALL";
          for (const VolumeResult& r : results) {
            aggregate.user_blocks += r.user_blocks;
            aggregate.gc_blocks += r.gc_blocks;
            aggregate.distinct_lbas += r.distinct_lbas;
            aggregate.capacity_bytes += r.capacity_bytes;
          }
          aggregate.wa = aggregate_wa(results);
          results.push_back(aggregate);
          for (const VolumeResult& r : results) {
            ResultRow row;
            row.scheme = cell.scheme;
            row.selector = cell.selector;
            row.segment_size_bytes = cell.segment_mib << 20;
            row.gp_threshold = cell.gpt;
            row.alpha = cell.alpha;
            row.result = r;
            cell_rows[i].push_back(row);
          }
          done[i] = 1;
        });
      } catch (...) {
        flush_done();
        throw;
      }
      flush_done();
    }
    std::cout << "sweep wrote " << cells.size() << " cell(s) to " << out
              << '\n';
    return 0;
  }
};

// ---------------- math ----------------

struct MathCmd {
  std::string mode = "user";
  std::uint64_t n = 10ull << 18;
  std::vector<double> alphas{1.0};
  std::vector<double> u0_gib{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> v0_gib{0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> g0_gib{2.0, 4.0, 8.0, 16.0, 32.0};
  std::vector<double> r0_gib{2.0, 4.0, 8.0};
  std::vector<double> fractions{0.2};
  std::string out;
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand(
        "math", "Closed-form probability grids for zipf workloads");
    cmd->configurable();
    cmd->add_option("--mode", mode, "user|gc|traffic")->capture_default_str();
    cmd->add_option("--n", n, "Number of unique LBAs")->capture_default_str();
    cmd->add_option("--alphas", alphas, "Skewness grid")->capture_default_str();
    cmd->add_option("--u0-gib", u0_gib, "Lifespan thresholds (GiB)")
        ->capture_default_str();
    cmd->add_option("--v0-gib", v0_gib, "Invalidated-lifespan thresholds (GiB)")
        ->capture_default_str();
    cmd->add_option("--g0-gib", g0_gib, "Age thresholds (GiB)")
        ->capture_default_str();
    cmd->add_option("--r0-gib", r0_gib, "Residual-lifespan thresholds (GiB)")
        ->capture_default_str();
    cmd->add_option("--fractions", fractions, "Top-LBA fractions")
        ->capture_default_str();
    cmd->add_option("--out", out, "Output CSV (default stdout)");
  }

  static std::uint64_t gib_blocks(double gib) {
    return static_cast<std::uint64_t>(gib *
                                      static_cast<double>(kBlocksPerGiB));
  }

  int run(CLI::App&) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
      file = open_output(out);
      os = &file;
    }
    if (mode == "user") {
      *os << "alpha,u0_gib,v0_gib,probability\n";
      for (const double a : alphas) {
        const ZipfModel model = ZipfModel::make(n, a);
        for (const double u0 : u0_gib) {
          for (const double v0 : v0_gib) {
            *os << fmt_double(a) << ',' << fmt_double(u0) << ','
                << fmt_double(v0) << ','
                << fmt_double(cond_prob_user(model, gib_blocks(u0),
                                             gib_blocks(v0)))
                << '\n';
          }
        }
      }
    } else if (mode == "gc") {
      *os << "alpha,g0_gib,r0_gib,probability\n";
      for (const double a : alphas) {
        const ZipfModel model = ZipfModel::make(n, a);
        for (const double g0 : g0_gib) {
          for (const double r0 : r0_gib) {
            *os << fmt_double(a) << ',' << fmt_double(g0) << ','
                << fmt_double(r0) << ','
                << fmt_double(
                       cond_prob_gc(model, gib_blocks(g0), gib_blocks(r0)))
                << '\n';
          }
        }
      }
    } else if (mode == "traffic") {
      *os << "alpha,fraction,traffic_share\n";
      for (const double a : alphas) {
        const ZipfModel model = ZipfModel::make(n, a);
        for (const double frac : fractions) {
          *os << fmt_double(a) << ',' << fmt_double(frac) << ','
              << fmt_double(top_fraction_traffic(model, frac)) << '\n';
        }
      }
    } else {
      throw ConfigError("unknown math mode '" + mode + "'");
    }
    return 0;
  }
};

// ---------------- gen ----------------

struct GenCmd {
  WorkloadOpts workload;
  std::string volume_id = "vol0";
  std::string out = "trace.csv";
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand("gen", "Generate a synthetic trace (native CSV)");
    cmd->configurable();
    workload.add_flags(cmd);
    cmd->add_option("--volume-id", volume_id, "Volume id for the trace")
        ->capture_default_str();
    cmd->add_option("--out", out, "Output trace path")->capture_default_str();
  }

  int run(CLI::App&) {
    if (!workload.is_synthetic()) {
      throw ConfigError("gen needs --synthetic zipf|two-region");
    }
    const std::vector<Lba> writes = workload.generate();
    auto os = open_output(out);
    std::vector<WriteRecord> records(1);
    for (std::uint64_t i = 0; i < writes.size(); ++i) {
      records[0].timestamp_us = i;
      records[0].volume_id = volume_id;
      records[0].offset = writes[i] * kBlockSize;
      records[0].length = kBlockSize;
      serialize_native(os, records);
    }
    std::cout << "wrote " << writes.size() << " block writes to " << out
              << '\n';
    return 0;
  }
};

// ---------------- annotate ----------------

struct AnnotateCmd {
  WorkloadOpts workload;
  std::string out_dir = ".";
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand(
        "annotate", "Write per-volume lifespan annotation sidecars");
    cmd->configurable();
    workload.add_flags(cmd, /*trace_only=*/true);
    cmd->add_option("--out-dir", out_dir, "Sidecar directory")
        ->capture_default_str();
  }

  int run(CLI::App&) {
    if (workload.trace_path.empty()) {
      throw ConfigError("annotate needs --trace");
    }
    const auto volumes = load_trace_volumes(workload);
    fs::create_directories(out_dir);
    for (const VolumeWrites& vw : volumes) {
      const auto ann = annotate_bits(vw.writes);
      const fs::path path =
          fs::path(out_dir) / (sanitize_filename(vw.volume_id) + ".ann.csv");
      auto os = open_output(path.string());
      write_annotations_csv(os, ann);
    }
    std::cout << "annotated " << volumes.size() << " volume(s) into "
              << out_dir << '\n';
    return 0;
  }
};

// ---------------- filter ----------------

struct FilterCmd {
  WorkloadOpts workload;
  std::string out;
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand("filter",
                             "Per-volume WSS/traffic stats and selection");
    cmd->configurable();
    workload.add_flags(cmd, /*trace_only=*/true);
    cmd->add_option("--out", out, "Output CSV (default stdout)");
  }

  int run(CLI::App&) {
    if (workload.trace_path.empty()) {
      throw ConfigError("filter needs --trace");
    }
    auto in = open_input(workload.trace_path);
    const auto stats =
        collect_volume_stats(in, workload.trace_format(), workload.columns());
    FilterRule rule;
    rule.min_wss_bytes =
        static_cast<std::uint64_t>(workload.min_wss_gib * (1ull << 30));
    rule.traffic_multiple = workload.traffic_multiple;

    std::ofstream file;
    std::ostream* os = &std::cout;
    if (!out.empty()) {
      file = open_output(out);
      os = &file;
    }
    *os << "volume_id,wss_blocks,traffic_blocks,selected\n";
    for (const VolumeStats& vs : stats) {
      *os << vs.volume_id << ',' << vs.wss_blocks << ',' << vs.traffic_blocks
          << ',' << (volume_selected(vs, rule) ? 1 : 0) << '\n';
    }
    return 0;
  }
};

// ---------------- stats ----------------

struct StatsCmd {
  WorkloadOpts workload;
  std::string out_prefix = "lssim_stats";
  std::vector<double> u0_frac{0.05, 0.1, 0.2, 0.4};
  std::vector<double> v0_frac{0.05, 0.1, 0.2, 0.4};
  std::vector<double> g0_frac{0.8, 1.6, 3.2, 6.4};
  std::vector<double> r0_frac{0.4, 0.8, 1.6};
  CLI::App* cmd = nullptr;

  void setup(CLI::App& app) {
    cmd = app.add_subcommand(
        "stats", "Trace lifespan observations and empirical probabilities");
    cmd->configurable();
    workload.add_flags(cmd, /*trace_only=*/true);
    cmd->add_option("--out-prefix", out_prefix, "Output path prefix")
        ->capture_default_str();
    cmd->add_option("--u0-frac", u0_frac, "u0 grid (fractions of WSS)")
        ->capture_default_str();
    cmd->add_option("--v0-frac", v0_frac, "v0 grid (fractions of WSS)")
        ->capture_default_str();
    cmd->add_option("--g0-frac", g0_frac, "g0 grid (fractions of WSS)")
        ->capture_default_str();
    cmd->add_option("--r0-frac", r0_frac, "r0 grid (fractions of WSS)")
        ->capture_default_str();
  }

  int run(CLI::App&) {
    if (workload.trace_path.empty()) {
      throw ConfigError("stats needs --trace");
    }
    const auto volumes = load_trace_volumes(workload);

    auto obs = open_output(out_prefix + "_observations.csv");
    obs << "# update frequency counts writes after the first to an LBA\n";
    obs << "volume_id,metric,key,value\n";
    auto user = open_output(out_prefix + "_cond_user.csv");
    user << "volume_id,u0_frac,v0_frac,u0_blocks,v0_blocks,probability\n";
    auto gc = open_output(out_prefix + "_cond_gc.csv");
    gc << "volume_id,g0_frac,r0_frac,g0_blocks,r0_blocks,probability\n";

    for (const VolumeWrites& vw : volumes) {
      const auto ann = annotate_bits(vw.writes);
      std::uint64_t wss = 0;
      for (const AnnotatedWrite& r : ann) {
        if (r.prev_lifespan == kFirstWrite) ++wss;
      }
      const ObservationReport report = observation_stats(ann, wss);
      for (std::size_t b = 0; b < report.short_lifespan_fractions.size();
           ++b) {
        obs << vw.volume_id << ",short_lifespan_fraction,"
            << fmt_double(report.kShortLifespanFractions[b]) << ','
            << fmt_double(report.short_lifespan_fractions[b]) << '\n';
      }
      for (const auto& group : report.frequency_cv) {
        obs << vw.volume_id << ",update_frequency_cv,"
            << fmt_double(group.rank_lo) << '-' << fmt_double(group.rank_hi)
            << ',';
        if (group.cv) obs << fmt_double(*group.cv);
        obs << '\n';
      }
      if (report.rarely_updated_wss_fraction) {
        obs << vw.volume_id << ",rarely_updated_wss_fraction,,"
            << fmt_double(*report.rarely_updated_wss_fraction) << '\n';
      }
      if (report.rare_lifespan_fractions) {
        static constexpr std::array<const char*, 5> kBucket{
            "lt0.5", "0.5-1", "1-1.5", "1.5-2", "ge2"};
        for (std::size_t b = 0; b < kBucket.size(); ++b) {
          obs << vw.volume_id << ",rare_lifespan_fraction," << kBucket[b]
              << ',' << fmt_double((*report.rare_lifespan_fractions)[b])
              << '\n';
        }
      }

      const auto frac_blocks = [&](double f) {
        return static_cast<std::uint64_t>(f * static_cast<double>(wss));
      };
      for (const double uf : u0_frac) {
        for (const double vf : v0_frac) {
          user << vw.volume_id << ',' << fmt_double(uf) << ','
               << fmt_double(vf) << ',' << frac_blocks(uf) << ','
               << frac_blocks(vf) << ',';
          try {
            user << fmt_double(
                empirical_cond_prob_user(ann, frac_blocks(uf),
                                         frac_blocks(vf)));
          } catch (const std::domain_error&) {
            // empty conditioning set: leave the cell blank
          }
          user << '\n';
        }
      }
      for (const double gf : g0_frac) {
        for (const double rf : r0_frac) {
          gc << vw.volume_id << ',' << fmt_double(gf) << ',' << fmt_double(rf)
             << ',' << frac_blocks(gf) << ',' << frac_blocks(rf) << ',';
          try {
            gc << fmt_double(
                empirical_cond_prob_gc(ann, frac_blocks(gf),
                                       frac_blocks(rf)));
          } catch (const std::domain_error&) {
          }
          gc << '\n';
        }
      }
    }
    std::cout << "stats written with prefix " << out_prefix << '\n';
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"log-structured storage GC simulator"};
  app.set_config("--config", "", "Read options from a TOML/INI file");

  ReplayCmd replay;
  SweepCmd sweep;
  MathCmd math;
  GenCmd gen;
  AnnotateCmd annotate;
  FilterCmd filter;
  StatsCmd stats;

  replay.setup(app);
  sweep.setup(app);
  math.setup(app);
  gen.setup(app);
  annotate.setup(app);
  filter.setup(app);
  stats.setup(app);
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (replay.cmd->parsed()) return replay.run(app);
    if (sweep.cmd->parsed()) return sweep.run(app);
    if (math.cmd->parsed()) return math.run(app);
    if (gen.cmd->parsed()) return gen.run(app);
    if (annotate.cmd->parsed()) return annotate.run(app);
    if (filter.cmd->parsed()) return filter.run(app);
    if (stats.cmd->parsed()) return stats.run(app);
    std::cerr << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
