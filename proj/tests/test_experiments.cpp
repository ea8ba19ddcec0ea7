#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bitsim/experiments.hpp"

using namespace bitsim;

namespace {

ScenarioConfig quick_cfg() {
  ScenarioConfig cfg;
  cfg.mode = Mode::Forwarding;
  cfg.leech = LeechPos::Center;
  cfg.latency_ms = 100;
  cfg.strategy = SpreadingStrategy::trickle(50, 1);
  cfg.eavesdroppers = 1;
  cfg.file_size = 512;
  cfg.runs = 4;
  cfg.seed = 7;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run_scenario produces one result per run") {
  auto cfg = quick_cfg();
  auto results = run_scenario(cfg);
  REQUIRE(results.size() == 4);
  for (std::size_t i = 0; i < results.size(); ++i) {
    CHECK(results[i].run_id == i);
    CHECK(results[i].completed);
    CHECK(results[i].ttf_ms > 0);
    CHECK(results[i].truth == "n5");
  }
  cfg.runs = 0;
  CHECK(run_scenario(cfg).empty());
}

TEST_CASE("identical seeds reproduce identical results") {
  auto cfg = quick_cfg();
  auto a = run_scenario(cfg);
  auto b = run_scenario(cfg, 4);  // parallel execution must not matter
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].ttf_ms == b[i].ttf_ms);
    CHECK(a[i].predicted == b[i].predicted);
    CHECK(a[i].messages_total == b[i].messages_total);
  }
}

TEST_CASE("baseline mode ignores the configured trickle delay") {
  auto cfg = quick_cfg();
  cfg.mode = Mode::Baseline;
  cfg.eavesdroppers = 0;
  cfg.strategy = SpreadingStrategy::trickle(300, 1);
  auto slow = run_scenario(cfg);
  cfg.strategy = SpreadingStrategy::trickle(0, 1);
  auto fast = run_scenario(cfg);
  REQUIRE(slow.size() == fast.size());
  for (std::size_t i = 0; i < slow.size(); ++i) {
    CHECK(slow[i].ttf_ms == fast[i].ttf_ms);
  }
  CHECK(cfg.normalized().strategy.kind == SpreadingStrategy::Kind::Immediate);
}

TEST_CASE("run-count defaults by eavesdropper count") {
  CHECK(default_runs_for(1) == 50);
  CHECK(default_runs_for(4) == 40);
  CHECK(default_runs_for(7) == 30);
}

TEST_CASE("sweep builds the full grid with derived cell seeds") {
  SweepGrid grid;
  grid.latencies = {50, 100};
  grid.trickle_delays = {0, 100};
  grid.eavesdroppers = {1};
  grid.file_sizes = {512};
  grid.runs = 2;
  grid.base_seed = 3;
  auto cells = sweep(grid);
  REQUIRE(cells.size() == 4);
  std::set<std::uint64_t> seeds;
  for (const auto& c : cells) {
    CHECK(c.results.size() == 2);
    seeds.insert(c.cell_seed);
  }
  CHECK(seeds.size() == 4);  // distinct coordinates, distinct seeds
}

TEST_CASE("write_results is byte-stable") {
  SweepGrid grid;
  grid.latencies = {100};
  grid.trickle_delays = {50};
  grid.eavesdroppers = {1};
  grid.file_sizes = {512};
  grid.runs = 3;
  auto cells = sweep(grid);

  auto dir = std::filesystem::temp_directory_path() / "bitsim_test_results";
  write_results(cells, dir);
  auto runs1 = slurp(dir / "runs.csv");
  auto summary1 = slurp(dir / "summary.csv");
  auto config1 = slurp(dir / "config.json");
  write_results(cells, dir);
  CHECK(slurp(dir / "runs.csv") == runs1);
  CHECK(slurp(dir / "summary.csv") == summary1);
  CHECK(slurp(dir / "config.json") == config1);

  // Header plus one row per run.
  CHECK(std::count(runs1.begin(), runs1.end(), '\n') == 4);
  CHECK(runs1.rfind("mode,leech,latency_ms", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("summary accuracy stays within [0, 1]") {
  auto cfg = quick_cfg();
  auto results = run_scenario(cfg);
  auto row = summarize(cfg, results);
  CHECK(row.accuracy >= 0.0);
  CHECK(row.accuracy <= 1.0);
  CHECK(row.completed + row.failed == results.size());
  CHECK(row.mean_ttf_ms > 0);
}

TEST_CASE("csv fields with separators get quoted") {
  CHECK(detail::csv_field("plain") == "plain");
  CHECK(detail::csv_field("a,b") == "\"a,b\"");
  CHECK(detail::csv_field("q\"q") == "\"q\"\"q\"");
}
