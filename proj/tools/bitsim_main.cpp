// bitsim: run Bitswap forwarding/trickling simulations, parameter
// sweeps, topology checks, and trace exports.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bitsim/experiments.hpp"
#include "bitsim/simnet.hpp"
#include "bitsim/topology.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::size_t parse_size(const std::string& text) {
  std::size_t pos = 0;
  while (pos < text.size() && (std::isdigit(text[pos]) || text[pos] == '.')) {
    ++pos;
  }
  const double value = std::stod(text.substr(0, pos));
  std::string suffix = text.substr(pos);
  double factor = 1;
  if (suffix == "" || suffix == "B") {
    factor = 1;
  } else if (suffix == "KiB" || suffix == "K" || suffix == "k") {
    factor = 1024;
  } else if (suffix == "MiB" || suffix == "M" || suffix == "m") {
    factor = 1024.0 * 1024;
  } else {
    throw CLI::ValidationError("size", "unknown size suffix: " + suffix);
  }
  return static_cast<std::size_t>(value * factor);
}

std::string default_parallel() {
  unsigned n = std::thread::hardware_concurrency();
  return std::to_string(n == 0 ? 1 : n);
}

std::filesystem::path resolve_out(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("BITSIM_OUT")) return env;
  return "results";
}

void print_summary_line(const bitsim::SweepCell& cell) {
  const auto row = bitsim::summarize(cell.cfg, cell.results);
  std::printf(
      "mode=%s leech=%s latency=%gms delay=%gms eavesdroppers=%zu "
      "file=%zuB runs=%zu failed=%zu mean_ttf=%.1fms accuracy=%s\n",
      bitsim::mode_name(row.cfg.mode), bitsim::leech_pos_name(row.cfg.leech),
      row.cfg.latency_ms,
      row.cfg.strategy.kind == bitsim::SpreadingStrategy::Kind::Trickle
          ? row.cfg.strategy.trickle_delay_ms
          : 0.0,
      row.cfg.eavesdroppers, row.cfg.file_size, cell.results.size(),
      row.failed, row.mean_ttf_ms,
      row.accuracy >= 0 ? std::to_string(row.accuracy).c_str() : "n/a");
}

struct CommonFlags {
  std::string mode = "forwarding";
  std::string leech = "center";
  double latency = 100;
  std::string strategy = "trickle";
  double trickle_delay = 100;
  unsigned trickle_batch = 1;
  double diffusion_mean = 100;
  std::size_t eavesdroppers = 1;
  std::string file_size = "150KiB";
  std::string block_size = "256KiB";
  int dht_lookup_rtts = 1;
  std::uint64_t seed = 42;
  double processing_delay = 1;
  double max_time = 60000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "baseline or forwarding")
        ->check(CLI::IsMember({"baseline", "forwarding"}))
        ->capture_default_str();
    cmd->add_option("--leech", leech, "leech position: center (n5) or edge (n0)")
        ->check(CLI::IsMember({"center", "edge"}))
        ->capture_default_str();
    cmd->add_option("--latency", latency, "link latency in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--strategy", strategy,
                    "spreading strategy: immediate, trickle, diffusion")
        ->check(CLI::IsMember({"immediate", "trickle", "diffusion"}))
        ->capture_default_str();
    cmd->add_option("--trickle-delay", trickle_delay,
                    "trickle round delay in ms")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--trickle-batch", trickle_batch,
                    "targets per trickle round")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--diffusion-mean", diffusion_mean,
                    "mean diffusion delay in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--eavesdroppers", eavesdroppers,
                    "number of eavesdropper nodes")
        ->capture_default_str();
    cmd->add_option("--file-size", file_size,
                    "test file size (suffixes: B, KiB, MiB)")
        ->capture_default_str();
    cmd->add_option("--block-size", block_size, "chunking block size")
        ->capture_default_str();
    cmd->add_option("--dht-lookup-rtts", dht_lookup_rtts,
                    "modeled provider lookup cost in round trips (baseline)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--seed", seed, "base RNG seed")->capture_default_str();
    cmd->add_option("--processing-delay", processing_delay,
                    "per-hop message handling cost in ms")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--max-time", max_time,
                    "simulated time budget per run in ms")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  bitsim::ScenarioConfig to_config() const {
    bitsim::ScenarioConfig cfg;
    cfg.mode = mode == "baseline" ? bitsim::Mode::Baseline
                                  : bitsim::Mode::Forwarding;
    cfg.leech = leech == "center" ? bitsim::LeechPos::Center
                                  : bitsim::LeechPos::Edge;
    cfg.latency_ms = latency;
    if (strategy == "immediate") {
      cfg.strategy = bitsim::SpreadingStrategy::immediate();
    } else if (strategy == "diffusion") {
      cfg.strategy = bitsim::SpreadingStrategy::diffusion(diffusion_mean);
    } else {
      cfg.strategy =
          bitsim::SpreadingStrategy::trickle(trickle_delay, trickle_batch);
    }
    cfg.eavesdroppers = eavesdroppers;
    cfg.file_size = parse_size(file_size);
    cfg.block_size = parse_size(block_size);
    cfg.dht_lookup_rtts = dht_lookup_rtts;
    cfg.seed = seed;
    cfg.processing_delay_ms = processing_delay;
    cfg.max_time_ms = max_time;
    return cfg;
  }

  // Baseline never spreads; a nonzero trickle delay there is a mistake.
  void validate_combination() const {
    if (mode == "baseline" && strategy == "trickle" && trickle_delay > 0) {
      throw CLI::ValidationError(
          "--mode", "baseline mode does not trickle; drop --trickle-delay");
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bitswap forwarding and source-obfuscation simulator"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "run one scenario");
  CommonFlags run_flags;
  run_flags.attach(run_cmd);
  int runs = 50;
  int parallel = std::stoi(default_parallel());
  std::string out_dir;
  run_cmd->add_option("--runs", runs, "number of runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--parallel", parallel, "max concurrent runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd
      ->add_option("--out", out_dir,
                   "output directory (default $BITSIM_OUT or ./results)")
      ->capture_default_str();

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep grid");
  std::string sweep_mode = "forwarding";
  std::vector<std::string> sweep_leeches = {"center"};
  std::vector<double> sweep_latencies = {50, 100, 150};
  std::vector<double> sweep_delays = {0, 50, 100, 150, 200, 250, 300};
  std::vector<std::size_t> sweep_eaves = {1};
  std::vector<std::string> sweep_files = {"150KiB"};
  int sweep_runs = 0;
  std::uint64_t sweep_seed = 42;
  int sweep_parallel = std::stoi(default_parallel());
  std::string sweep_out;
  sweep_cmd->add_option("--mode", sweep_mode, "baseline or forwarding")
      ->check(CLI::IsMember({"baseline", "forwarding"}))
      ->capture_default_str();
  sweep_cmd->add_option("--leeches", sweep_leeches, "leech positions")
      ->capture_default_str();
  sweep_cmd->add_option("--latencies", sweep_latencies, "latencies in ms")
      ->capture_default_str();
  sweep_cmd->add_option("--delays", sweep_delays, "trickle delays in ms")
      ->capture_default_str();
  sweep_cmd->add_option("--eavesdroppers", sweep_eaves, "eavesdropper counts")
      ->capture_default_str();
  sweep_cmd->add_option("--file-sizes", sweep_files, "file sizes")
      ->capture_default_str();
  sweep_cmd
      ->add_option("--runs", sweep_runs,
                   "runs per cell (0 = auto by eavesdropper count: 50/40/30)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sweep_cmd->add_option("--seed", sweep_seed, "base seed")
      ->capture_default_str();
  sweep_cmd->add_option("--parallel", sweep_parallel, "max concurrent runs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd
      ->add_option("--out", sweep_out,
                   "output directory (default $BITSIM_OUT or ./results)")
      ->capture_default_str();

  // topo
  auto* topo_cmd = app.add_subcommand("topo", "inspect the topology");
  bool topo_check = false;
  std::size_t topo_eaves = 0;
  std::string topo_export;
  topo_cmd->add_flag("--check", topo_check, "validate and print counts");
  topo_cmd->add_option("--eavesdroppers", topo_eaves, "attach k eavesdroppers")
      ->capture_default_str();
  topo_cmd->add_option("--export", topo_export,
                       "write edge list to this path");

  // trace
  auto* trace_cmd =
      app.add_subcommand("trace", "run one simulation and dump its trace");
  CommonFlags trace_flags;
  trace_flags.attach(trace_cmd);
  std::string trace_out;
  int trace_run_index = 0;
  trace_cmd->add_option("--out", trace_out,
                        "trace output path (default stdout)");
  trace_cmd->add_option("--run-index", trace_run_index, "run index to replay")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*run_cmd) {
      run_flags.validate_combination();
      bitsim::SweepCell cell;
      cell.cfg = run_flags.to_config();
      cell.cfg.runs = runs;
      cell.cell_seed = cell.cfg.seed;
      cell.results = bitsim::run_scenario(cell.cfg, parallel);
      std::vector<bitsim::SweepCell> cells{std::move(cell)};
      bitsim::write_results(cells, resolve_out(out_dir));
      print_summary_line(cells.front());
      return kExitOk;
    }
    if (*sweep_cmd) {
      bitsim::SweepGrid grid;
      grid.mode = sweep_mode == "baseline" ? bitsim::Mode::Baseline
                                           : bitsim::Mode::Forwarding;
      grid.leeches.clear();
      for (const auto& l : sweep_leeches) {
        grid.leeches.push_back(l == "edge" ? bitsim::LeechPos::Edge
                                           : bitsim::LeechPos::Center);
      }
      grid.latencies.assign(sweep_latencies.begin(), sweep_latencies.end());
      grid.trickle_delays.assign(sweep_delays.begin(), sweep_delays.end());
      grid.eavesdroppers = sweep_eaves;
      grid.file_sizes.clear();
      for (const auto& f : sweep_files) grid.file_sizes.push_back(parse_size(f));
      grid.runs = sweep_runs;
      grid.base_seed = sweep_seed;
      auto cells = bitsim::sweep(grid, sweep_parallel);
      bitsim::write_results(cells, resolve_out(sweep_out));
      for (const auto& cell : cells) print_summary_line(cell);
      return kExitOk;
    }
    if (*topo_cmd) {
      auto topo =
          bitsim::attach_eavesdroppers(bitsim::figure1_topology(), topo_eaves);
      if (topo_check) {
        std::printf("%zu nodes / %zu edges\n", topo.nodes.size(),
                    topo.edges.size());
      }
      if (!topo_export.empty()) {
        std::ofstream f(topo_export, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + topo_export);
        f << topo.to_edge_list();
      }
      return kExitOk;
    }
    if (*trace_cmd) {
      trace_flags.validate_combination();
      auto cfg = trace_flags.to_config().normalized();
      auto topo = bitsim::attach_eavesdroppers(bitsim::figure1_topology(),
                                               cfg.eavesdroppers);
      topo.latency_ms = cfg.latency_ms;
      const auto leech =
          topo.find(cfg.leech == bitsim::LeechPos::Center ? "n5" : "n0");
      topo.nodes[leech].role = bitsim::Role::Leech;
      const std::uint64_t run_seed =
          bitsim::mix_seed(cfg.seed, trace_run_index);
      const auto blocks = bitsim::chunk_content(
          bitsim::detail::random_bytes(cfg.file_size,
                                       bitsim::mix_seed(run_seed, 0x66696c65)),
          cfg.block_size);
      bitsim::NodeConfig node_cfg;
      node_cfg.strategy = cfg.strategy;
      node_cfg.forwarding = cfg.mode == bitsim::Mode::Forwarding;
      node_cfg.small_block_threshold = cfg.small_block_threshold;
      bitsim::BaselineModel baseline{cfg.dht_lookup_rtts};
      auto trace = bitsim::run_simulation(
          topo, node_cfg, blocks, leech, run_seed, cfg.max_time_ms,
          cfg.mode == bitsim::Mode::Baseline ? &baseline : nullptr);
      const std::string jsonl = bitsim::trace_to_jsonl(topo, trace);
      if (trace_out.empty()) {
        std::fwrite(jsonl.data(), 1, jsonl.size(), stdout);
      } else {
        std::ofstream f(trace_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + trace_out);
        f << jsonl;
      }
      return kExitOk;
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
