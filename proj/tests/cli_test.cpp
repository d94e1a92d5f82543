#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "lssim/report.hpp"
#include "lssim/workload.hpp"

using namespace lssim;
namespace fs = std::filesystem;

#ifndef LSSIM_BIN
#define LSSIM_BIN "lssim"
#endif

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(LSSIM_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status == -1) return -1;
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// wa column of the aggregate row in a results CSV.
double aggregate_wa_of(const fs::path& csv) {
  std::ifstream in(csv);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  const auto header = split(line, ',');
  std::size_t wa_col = 0;
  std::size_t vol_col = 0;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "wa") wa_col = i;
    if (header[i] == "volume_id") vol_col = i;
  }
  while (std::getline(in, line)) {
    const auto fields = split(line, ',');
    if (fields.at(vol_col) == "ALL") return std::stod(fields.at(wa_col));
  }
  FAIL("no aggregate row");
  return 0.0;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::current_path() / "cli_test_tmp";
    fs::remove_all(path);
    fs::create_directories(path);
  }
};

std::string shellq(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("replay of a never-updated trace reports WA exactly 1") {
  TempDir tmp;
  const fs::path trace = tmp.path / "fresh.csv";
  {
    std::ofstream out(trace);
    for (int i = 0; i < 600; ++i) {
      out << i << ",volA,W," << static_cast<std::uint64_t>(i) * 4096
          << ",4096\n";
    }
  }
  const fs::path prefix = tmp.path / "fresh";
  REQUIRE(run_cli("replay --trace " + shellq(trace) +
                  " --format native-csv --scheme nosep --segment-mib 1"
                  " --out-prefix " + shellq(prefix)) == 0);
  CHECK(aggregate_wa_of(prefix.string() + "_results.csv") == 1.0);
}

TEST_CASE("exit codes distinguish config and data errors") {
  TempDir tmp;
  const fs::path prefix = tmp.path / "x";
  CHECK(run_cli("replay --synthetic zipf --wss-mib 1 --writes 10"
                " --scheme not-a-scheme --out-prefix " + shellq(prefix)) == 2);
  CHECK(run_cli("replay --synthetic zipf --wss-mib 1 --writes 10"
                " --gp-threshold 1.5 --out-prefix " + shellq(prefix)) == 2);
  CHECK(run_cli("replay --trace /nonexistent.csv --format native-csv"
                " --out-prefix " + shellq(prefix)) == 3);
  CHECK(run_cli("badsubcommand") == 2);
}

TEST_CASE("replay emits a config whose re-run is byte-identical") {
  TempDir tmp;
  const fs::path prefix = tmp.path / "run";
  const std::string base =
      "replay --synthetic two-region --wss-mib 4 --alpha 1.0"
      " --traffic-mult 10 --seed 7 --scheme sepbit --selector greedy"
      " --segment-mib 1 --out-prefix " + shellq(prefix);
  REQUIRE(run_cli(base) == 0);
  const std::string first_csv = slurp(prefix.string() + "_results.csv");
  const std::string first_json = slurp(prefix.string() + "_results.json");

  // Re-run from the emitted config alone.
  REQUIRE(run_cli("--config " + shellq(prefix.string() + "_config.toml")) ==
          0);
  CHECK(slurp(prefix.string() + "_results.csv") == first_csv);
  CHECK(slurp(prefix.string() + "_results.json") == first_json);
}

TEST_CASE("sweep emits one row per cell and volume, deterministically") {
  TempDir tmp;
  const fs::path out = tmp.path / "sweep.csv";
  const std::string cmd =
      "sweep --synthetic zipf --wss-mib 2 --traffic-mult 8 --seed 3"
      " --schemes nosep sepgc --selectors greedy"
      " --gp-thresholds 0.10 0.15 0.20 0.25 --segment-mibs 1"
      " --out " + shellq(out);
  REQUIRE(run_cli(cmd) == 0);
  const std::string first = slurp(out);
  // 2 schemes x 4 thresholds = 8 cells, each with one volume + aggregate.
  CHECK(split(first, '\n').size() == 1 + 16 + 1);  // header + rows + trailing
  REQUIRE(run_cli(cmd) == 0);
  CHECK(slurp(out) == first);
}

TEST_CASE("smaller segments lower NoSep WA on a fixed skewed workload") {
  TempDir tmp;
  const fs::path out = tmp.path / "seg_sweep.csv";
  // Fixed 4 MiB of data retrieved per GC operation across segment sizes.
  REQUIRE(run_cli("sweep --synthetic zipf --wss-mib 16 --alpha 1.0"
                  " --traffic-mult 20 --seed 8 --schemes nosep"
                  " --selectors greedy --segment-mibs 1 2 4"
                  " --gc-retrieval-mib 4 --out " + shellq(out)) == 0);
  std::ifstream in(out);
  std::string line;
  std::getline(in, line);  // header
  std::map<std::uint64_t, double> wa_by_segment;
  while (std::getline(in, line)) {
    const auto fields = split(line, ',');
    if (fields.at(1) != "ALL") continue;
    wa_by_segment[std::stoull(fields.at(4))] = std::stod(fields.at(9));
  }
  REQUIRE(wa_by_segment.size() == 3);
  CHECK(wa_by_segment.at(1ull << 20) <= wa_by_segment.at(2ull << 20));
  CHECK(wa_by_segment.at(2ull << 20) <= wa_by_segment.at(4ull << 20));
}

TEST_CASE("a failing sweep cell leaves earlier cells on disk") {
  TempDir tmp;
  const fs::path out = tmp.path / "partial.csv";
  CHECK(run_cli("sweep --synthetic zipf --wss-mib 1 --traffic-mult 4 --seed 2"
                " --schemes nosep bogus --selectors greedy --segment-mibs 1"
                " --out " + shellq(out)) == 2);
  const auto lines = split(slurp(out), '\n');
  // header + nosep cell (volume + aggregate) survive the bogus cell.
  REQUIRE(lines.size() >= 3);
  CHECK(lines[1].find("nosep") != std::string::npos);
}

TEST_CASE("volume-parallel replay matches the sequential results") {
  TempDir tmp;
  const fs::path trace = tmp.path / "multi.csv";
  {
    std::ofstream out(trace);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 6000; ++i) {
      const char vol = static_cast<char>('a' + i % 3);
      out << i << ",vol" << vol << ",W," << (rng() % 512) * 4096
          << ",4096\n";
    }
  }
  const fs::path seq = tmp.path / "seq";
  const fs::path par = tmp.path / "par";
  const std::string common = "replay --trace " + shellq(trace) +
                             " --format native-csv --scheme sepbit"
                             " --segment-mib 1 --out-prefix ";
  REQUIRE(run_cli(common + shellq(seq) + " --jobs 1") == 0);
  REQUIRE(run_cli(common + shellq(par) + " --jobs 3") == 0);
  CHECK(slurp(seq.string() + "_results.csv") ==
        slurp(par.string() + "_results.csv"));
}

TEST_CASE("aggregate WA sits between the per-volume extremes") {
  std::vector<VolumeResult> results(3);
  results[0].user_blocks = 100;
  results[0].gc_blocks = 0;  // WA 1.0
  results[1].user_blocks = 50;
  results[1].gc_blocks = 100;  // WA 3.0
  results[2].user_blocks = 200;
  results[2].gc_blocks = 100;  // WA 1.5
  const double agg = aggregate_wa(results);
  CHECK(agg > 1.0);
  CHECK(agg < 3.0);
  CHECK(agg == doctest::Approx((100.0 + 150.0 + 300.0) / 350.0));
}

TEST_CASE("gc log csv uses the documented schema") {
  GcEvent ev;
  ev.at_time = 42;
  ev.victims.push_back(GcVictimInfo{7, 0.625, 3, 5});
  std::ostringstream out;
  write_gc_log_csv(out, std::vector<GcEvent>{ev});
  CHECK(out.str() ==
        "at_time,victim_id,victim_gp,rewritten,reclaimed\n"
        "42,7,0.625,3,5\n");
}

TEST_CASE("math traffic grid reproduces the skew table entry") {
  TempDir tmp;
  const fs::path out = tmp.path / "traffic.csv";
  REQUIRE(run_cli("math --mode traffic --alphas 1.0 --fractions 0.2 --out " +
                  shellq(out)) == 0);
  const auto lines = split(slurp(out), '\n');
  REQUIRE(lines.size() >= 2);
  const auto fields = split(lines[1], ',');
  CHECK(std::abs(std::stod(fields.at(2)) - 0.895) < 0.003);
}

TEST_CASE("gen, annotate and filter round-trip through files") {
  TempDir tmp;
  const fs::path trace = tmp.path / "gen.csv";
  REQUIRE(run_cli("gen --synthetic zipf --wss-mib 1 --writes 2000 --seed 9"
                  " --volume-id v7 --out " + shellq(trace)) == 0);

  const fs::path ann_dir = tmp.path / "ann";
  REQUIRE(run_cli("annotate --trace " + shellq(trace) +
                  " --format native-csv --out-dir " + shellq(ann_dir)) == 0);
  REQUIRE(fs::exists(ann_dir / "v7.ann.csv"));
  {
    std::ifstream in(ann_dir / "v7.ann.csv");
    const auto records = read_annotations_csv(in);
    CHECK(records.size() == 2000);
  }

  const fs::path stats = tmp.path / "filter.csv";
  REQUIRE(run_cli("filter --trace " + shellq(trace) +
                  " --format native-csv --min-wss-gib 0.0001"
                  " --traffic-multiple 2 --out " + shellq(stats)) == 0);
  const auto lines = split(slurp(stats), '\n');
  REQUIRE(lines.size() >= 2);
  CHECK(split(lines[1], ',').at(0) == "v7");

  // Replay with FK against the persisted annotations.
  const fs::path prefix = tmp.path / "fk";
  REQUIRE(run_cli("replay --trace " + shellq(trace) +
                  " --format native-csv --scheme fk --segment-mib 1"
                  " --annotations " + shellq(ann_dir) +
                  " --out-prefix " + shellq(prefix)) == 0);
  CHECK(aggregate_wa_of(prefix.string() + "_results.csv") >= 1.0);
}

TEST_CASE("replaying a public-format fixture works end to end") {
  TempDir tmp;
  const fs::path trace = fs::path(LSSIM_TEST_DATA_DIR) / "alibaba_100.csv";
  const fs::path prefix = tmp.path / "ali";
  REQUIRE(run_cli("replay --trace " + shellq(trace) +
                  " --format alibaba --scheme dac --selector cost-benefit"
                  " --segment-mib 1 --out-prefix " + shellq(prefix)) == 0);
  CHECK(aggregate_wa_of(prefix.string() + "_results.csv") >= 1.0);
}

TEST_CASE("stats subcommand emits observation and probability tables") {
  TempDir tmp;
  const fs::path trace = tmp.path / "t.csv";
  REQUIRE(run_cli("gen --synthetic zipf --wss-mib 1 --writes 5000 --seed 4"
                  " --out " + shellq(trace)) == 0);
  const fs::path prefix = tmp.path / "stats";
  REQUIRE(run_cli("stats --trace " + shellq(trace) +
                  " --format native-csv --out-prefix " + shellq(prefix)) ==
          0);
  CHECK(fs::exists(prefix.string() + "_observations.csv"));
  CHECK(fs::exists(prefix.string() + "_cond_user.csv"));
  CHECK(fs::exists(prefix.string() + "_cond_gc.csv"));
  const std::string obs = slurp(prefix.string() + "_observations.csv");
  CHECK(obs.find("short_lifespan_fraction") != std::string::npos);
}

TEST_CASE("memory report arithmetic") {
  const std::vector<std::uint64_t> samples{100, 200, 300};
  CHECK(worst_case_unique(samples) == 300);

  // The first tenth of the samples is excluded.
  std::vector<std::uint64_t> many(20, 50);
  many[0] = 999;  // within the excluded prefix
  many[1] = 999;
  CHECK(worst_case_unique(many) == 50);

  std::vector<SepBitPlacement::MemorySample> ms;
  for (int i = 0; i < 12; ++i) {
    ms.push_back(SepBitPlacement::MemorySample{100, 150});
  }
  const MemoryMetrics m = memory_report(ms, 80, 1000);
  CHECK(m.sufficient);
  CHECK(m.worst_unique == 100);
  CHECK(m.snapshot_unique == 80);
  CHECK(m.worst_reduction == doctest::Approx(0.9));
  CHECK(m.snapshot_reduction == doctest::Approx(0.92));

  const MemoryMetrics few = memory_report(
      std::vector<SepBitPlacement::MemorySample>(3), 10, 100);
  CHECK_FALSE(few.sufficient);
}

TEST_CASE("uniform workloads leave little recency-index savings") {
  RunSpec spec;
  spec.volume.segment_size = 256 * kBlockSize;
  spec.volume.gp_threshold = 0.15;
  spec.scheme = SchemeKind::kSepBit;
  spec.selector = SelectorKind::kGreedy;

  SyntheticSpec uniform;
  uniform.wss_blocks = 1 << 13;
  uniform.alpha = 0.0;
  uniform.total_writes = 30 * uniform.wss_blocks;
  uniform.seed = 12;
  const VolumeResult flat =
      run_volume("flat", gen_zipf(uniform), spec);

  SyntheticSpec skewed = uniform;
  skewed.alpha = 1.0;
  const VolumeResult skew =
      run_volume("skew", gen_zipf(skewed), spec);

  REQUIRE(flat.memory.has_value());
  REQUIRE(skew.memory.has_value());
  REQUIRE(flat.memory->sufficient);
  REQUIRE(skew.memory->sufficient);
  // Uniform traffic keeps far more of the working set inside the queue
  // than skewed traffic does.
  CHECK(flat.memory->snapshot_reduction <
        skew.memory->snapshot_reduction - 0.1);
  CHECK(flat.memory->snapshot_reduction < 0.8);
  CHECK(skew.memory->snapshot_reduction > 0.9);
}
