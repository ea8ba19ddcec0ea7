#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitsim/adversary.hpp"
#include "bitsim/cid.hpp"
#include "bitsim/node.hpp"
#include "bitsim/rng.hpp"
#include "bitsim/simnet.hpp"
#include "bitsim/topology.hpp"

namespace bitsim {

enum class Mode { Baseline, Forwarding };
enum class LeechPos { Center, Edge };

inline const char* mode_name(Mode m) {
  return m == Mode::Baseline ? "baseline" : "forwarding";
}

inline const char* leech_pos_name(LeechPos p) {
  return p == LeechPos::Center ? "center" : "edge";
}

struct ScenarioConfig {
  Mode mode = Mode::Forwarding;
  LeechPos leech = LeechPos::Center;
  TimeMs latency_ms = 100;
  SpreadingStrategy strategy = SpreadingStrategy::trickle(100, 1);
  std::size_t eavesdroppers = 1;
  std::size_t file_size = 150 * 1024;
  int runs = 50;
  std::uint64_t seed = 42;
  int dht_lookup_rtts = 1;  // baseline only
  std::size_t block_size = 256 * 1024;
  std::size_t small_block_threshold = 1024;
  std::optional<int> hop_limit;
  // Constant per-hop handling cost; keeps relayed copies strictly behind
  // the original on shorter paths instead of producing exact-time ties.
  TimeMs processing_delay_ms = 1;
  TimeMs max_time_ms = 60000;

  // Baseline mode forces plain Bitswap: no forwarding, no spreading.
  ScenarioConfig normalized() const {
    ScenarioConfig c = *this;
    if (c.mode == Mode::Baseline) {
      c.strategy = SpreadingStrategy::immediate();
    }
    return c;
  }
};

struct RunResult {
  std::uint64_t run_id = 0;
  bool completed = false;
  TimeMs ttf_ms = 0;
  std::string predicted;  // empty = abstained or no eavesdropper
  std::string truth;
  bool correct = false;
  std::size_t messages_total = 0;
  std::size_t want_haves_total = 0;
  bool relay_drained = false;
  bool file_ok = false;
};

struct SweepCell {
  ScenarioConfig cfg;
  std::uint64_t cell_seed = 0;
  std::vector<RunResult> results;
};

struct SummaryRow {
  ScenarioConfig cfg;
  std::size_t completed = 0;
  std::size_t failed = 0;
  double mean_ttf_ms = 0;
  double stddev_ttf_ms = 0;
  double accuracy = -1;  // -1 when no eavesdroppers configured
};

namespace detail {

inline std::string random_bytes(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::string s(n, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<char>(rng.next_u64() & 0xff);
  }
  return s;
}

inline void parallel_for(int n, int threads, auto&& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  const int workers = std::min(threads, n);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

// One simulation run, fully determined by (cfg, run_index).
inline RunResult execute_run(const ScenarioConfig& raw_cfg, int run_index) {
  const ScenarioConfig cfg = raw_cfg.normalized();
  const std::uint64_t run_seed = mix_seed(cfg.seed, run_index);

  Topology topo =
      attach_eavesdroppers(figure1_topology(), cfg.eavesdroppers);
  topo.latency_ms = cfg.latency_ms;
  const PeerId leech =
      topo.find(cfg.leech == LeechPos::Center ? "n5" : "n0");
  topo.nodes[leech].role = Role::Leech;

  const auto blocks = chunk_content(
      detail::random_bytes(cfg.file_size, mix_seed(run_seed, 0x66696c65)),
      cfg.block_size);

  NodeConfig node_cfg;
  node_cfg.strategy = cfg.strategy;
  node_cfg.forwarding = cfg.mode == Mode::Forwarding;
  node_cfg.hop_limit = cfg.hop_limit;
  node_cfg.small_block_threshold = cfg.small_block_threshold;
  node_cfg.processing_delay_ms = cfg.processing_delay_ms;

  BaselineModel baseline{cfg.dht_lookup_rtts};
  const Trace trace = run_simulation(
      topo, node_cfg, blocks, leech, run_seed, cfg.max_time_ms,
      cfg.mode == Mode::Baseline ? &baseline : nullptr);

  RunResult r;
  r.run_id = static_cast<std::uint64_t>(run_index);
  r.completed = trace.completed;
  r.ttf_ms = trace.ttf_ms;
  r.truth = topo.nodes[leech].name;
  r.messages_total = trace.messages_total;
  r.want_haves_total = trace.want_haves_total;
  r.relay_drained = trace.relay_drained;
  r.file_ok = trace.leech_file_ok;
  if (cfg.eavesdroppers > 0) {
    auto predicted = first_timestamp_estimate(
        trace.observations, blocks.front().cid, mix_seed(run_seed, 0x746965));
    if (predicted) {
      r.predicted = topo.nodes[*predicted].name;
      r.correct = *predicted == leech;
    }
  }
  return r;
}

inline std::vector<RunResult> run_scenario(const ScenarioConfig& cfg,
                                           int parallel = 1) {
  std::vector<RunResult> results(static_cast<std::size_t>(cfg.runs));
  detail::parallel_for(cfg.runs, parallel, [&](int i) {
    results[static_cast<std::size_t>(i)] = execute_run(cfg, i);
  });
  return results;
}

inline SummaryRow summarize(const ScenarioConfig& cfg,
                            const std::vector<RunResult>& results) {
  SummaryRow row;
  row.cfg = cfg.normalized();
  double sum = 0, sum_sq = 0;
  std::size_t correct = 0;
  for (const auto& r : results) {
    if (r.completed) {
      ++row.completed;
      sum += r.ttf_ms;
      sum_sq += r.ttf_ms * r.ttf_ms;
    } else {
      ++row.failed;
    }
    if (r.correct) ++correct;
  }
  if (row.completed > 0) {
    const double n = static_cast<double>(row.completed);
    row.mean_ttf_ms = sum / n;
    const double var = std::max(0.0, sum_sq / n - row.mean_ttf_ms *
                                                      row.mean_ttf_ms);
    row.stddev_ttf_ms = std::sqrt(var);
  }
  if (cfg.eavesdroppers > 0 && !results.empty()) {
    // Failed or abstained runs count against the adversary's accuracy.
    row.accuracy =
        static_cast<double>(correct) / static_cast<double>(results.size());
  }
  return row;
}

// Default per-eavesdropper run counts used by the reference experiments.
inline int default_runs_for(std::size_t eavesdroppers) {
  if (eavesdroppers >= 7) return 30;
  if (eavesdroppers >= 4) return 40;
  return 50;
}

struct SweepGrid {
  Mode mode = Mode::Forwarding;
  std::vector<LeechPos> leeches = {LeechPos::Center};
  std::vector<TimeMs> latencies = {50, 100, 150};
  std::vector<TimeMs> trickle_delays = {0, 50, 100, 150, 200, 250, 300};
  std::vector<std::size_t> eavesdroppers = {1};
  std::vector<std::size_t> file_sizes = {150 * 1024};
  int runs = 0;  // 0 picks the default per eavesdropper count
  std::uint64_t base_seed = 42;
  std::uint32_t trickle_batch = 1;
  int dht_lookup_rtts = 1;
};

// Runs every grid cell; cell seeds derive from (base_seed, coordinates)
// so any cell can be reproduced in isolation.
inline std::vector<SweepCell> sweep(const SweepGrid& grid, int parallel = 1) {
  if (grid.leeches.empty() || grid.latencies.empty() ||
      grid.trickle_delays.empty() || grid.eavesdroppers.empty() ||
      grid.file_sizes.empty()) {
    throw std::invalid_argument("sweep: empty grid axis");
  }
  std::vector<SweepCell> cells;
  for (std::size_t li = 0; li < grid.leeches.size(); ++li) {
    for (std::size_t la = 0; la < grid.latencies.size(); ++la) {
      for (std::size_t d = 0; d < grid.trickle_delays.size(); ++d) {
        for (std::size_t e = 0; e < grid.eavesdroppers.size(); ++e) {
          for (std::size_t f = 0; f < grid.file_sizes.size(); ++f) {
            SweepCell cell;
            cell.cfg.mode = grid.mode;
            cell.cfg.leech = grid.leeches[li];
            cell.cfg.latency_ms = grid.latencies[la];
            cell.cfg.strategy = SpreadingStrategy::trickle(
                grid.trickle_delays[d], grid.trickle_batch);
            cell.cfg.eavesdroppers = grid.eavesdroppers[e];
            cell.cfg.file_size = grid.file_sizes[f];
            cell.cfg.dht_lookup_rtts = grid.dht_lookup_rtts;
            cell.cfg.runs = grid.runs > 0
                                ? grid.runs
                                : default_runs_for(grid.eavesdroppers[e]);
            std::uint64_t s = grid.base_seed;
            for (std::uint64_t coord : {li, la, d, e, f}) {
              s = mix_seed(s, coord + 1);
            }
            cell.cell_seed = s;
            cell.cfg.seed = s;
            cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  for (auto& cell : cells) {
    cell.results = run_scenario(cell.cfg, parallel);
  }
  return cells;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string fmt_ms(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string fmt_frac(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string cell_prefix(const ScenarioConfig& cfg) {
  std::string row;
  row += mode_name(cfg.mode);
  row += ',';
  row += leech_pos_name(cfg.leech);
  row += ',';
  row += fmt_ms(cfg.latency_ms);
  row += ',';
  row += fmt_ms(cfg.strategy.kind == SpreadingStrategy::Kind::Trickle
                    ? cfg.strategy.trickle_delay_ms
                    : 0.0);
  row += ',';
  row += std::to_string(cfg.strategy.trickle_batch);
  row += ',';
  row += std::to_string(cfg.eavesdroppers);
  row += ',';
  row += std::to_string(cfg.file_size);
  return row;
}

inline void write_file(const std::filesystem::path& path,
                       const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

inline nlohmann::ordered_json config_to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["mode"] = mode_name(cfg.mode);
  j["leech"] = leech_pos_name(cfg.leech);
  j["latency_ms"] = cfg.latency_ms;
  switch (cfg.strategy.kind) {
    case SpreadingStrategy::Kind::Immediate:
      j["strategy"] = {{"kind", "immediate"}};
      break;
    case SpreadingStrategy::Kind::Trickle:
      j["strategy"] = {{"kind", "trickle"},
                       {"delay_ms", cfg.strategy.trickle_delay_ms},
                       {"batch", cfg.strategy.trickle_batch}};
      break;
    case SpreadingStrategy::Kind::Diffusion:
      j["strategy"] = {{"kind", "diffusion"},
                       {"mean_delay_ms", cfg.strategy.diffusion_mean_ms}};
      break;
  }
  j["eavesdroppers"] = cfg.eavesdroppers;
  j["file_size"] = cfg.file_size;
  j["block_size"] = cfg.block_size;
  j["small_block_threshold"] = cfg.small_block_threshold;
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  j["dht_lookup_rtts"] = cfg.dht_lookup_rtts;
  if (cfg.hop_limit) j["hop_limit"] = *cfg.hop_limit;
  j["processing_delay_ms"] = cfg.processing_delay_ms;
  j["max_time_ms"] = cfg.max_time_ms;
  return j;
}

inline const char* kRunsCsvHeader =
    "mode,leech,latency_ms,trickle_delay_ms,trickle_batch,eavesdroppers,"
    "file_size_bytes,run_id,completed,ttf_ms,predicted,truth,correct,"
    "messages_total,want_haves_total";

inline const char* kSummaryCsvHeader =
    "mode,leech,latency_ms,trickle_delay_ms,trickle_batch,eavesdroppers,"
    "file_size_bytes,runs,completed,failed,mean_ttf_ms,stddev_ttf_ms,"
    "accuracy";

inline std::string runs_csv(const std::vector<SweepCell>& cells) {
  std::string out = kRunsCsvHeader;
  out += '\n';
  for (const auto& cell : cells) {
    const auto prefix = detail::cell_prefix(cell.cfg.normalized());
    for (const auto& r : cell.results) {
      out += prefix;
      out += ',';
      out += std::to_string(r.run_id);
      out += ',';
      out += r.completed ? "1" : "0";
      out += ',';
      out += r.completed ? detail::fmt_ms(r.ttf_ms) : std::string();
      out += ',';
      out += detail::csv_field(r.predicted);
      out += ',';
      out += detail::csv_field(r.truth);
      out += ',';
      out += r.correct ? "1" : "0";
      out += ',';
      out += std::to_string(r.messages_total);
      out += ',';
      out += std::to_string(r.want_haves_total);
      out += '\n';
    }
  }
  return out;
}

inline std::string summary_csv(const std::vector<SweepCell>& cells) {
  std::string out = kSummaryCsvHeader;
  out += '\n';
  for (const auto& cell : cells) {
    const SummaryRow row = summarize(cell.cfg, cell.results);
    out += detail::cell_prefix(row.cfg);
    out += ',';
    out += std::to_string(cell.results.size());
    out += ',';
    out += std::to_string(row.completed);
    out += ',';
    out += std::to_string(row.failed);
    out += ',';
    out += row.completed ? detail::fmt_ms(row.mean_ttf_ms) : std::string();
    out += ',';
    out += row.completed ? detail::fmt_ms(row.stddev_ttf_ms) : std::string();
    out += ',';
    out += row.accuracy >= 0 ? detail::fmt_frac(row.accuracy) : std::string();
    out += '\n';
  }
  return out;
}

// Writes runs.csv, summary.csv, and config.json; byte-stable for
// identical inputs.
inline void write_results(const std::vector<SweepCell>& cells,
                          const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create " + dir.string() + ": " +
                             ec.message());
  }
  detail::write_file(dir / "runs.csv", runs_csv(cells));
  detail::write_file(dir / "summary.csv", summary_csv(cells));
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    nlohmann::ordered_json c;
    c["config"] = config_to_json(cell.cfg.normalized());
    c["cell_seed"] = cell.cell_seed;
    j.push_back(std::move(c));
  }
  detail::write_file(dir / "config.json", j.dump(2) + "\n");
}

// Predictions as CSV rows (run_id, predicted, truth, correct).
inline std::string predictions_csv(const std::vector<Prediction>& preds,
                                   const Topology& topo) {
  std::string out = "run_id,predicted,truth,correct\n";
  for (const auto& p : preds) {
    out += std::to_string(p.run_id);
    out += ',';
    out += p.predicted ? topo.nodes[*p.predicted].name : std::string();
    out += ',';
    out += topo.nodes[p.truth].name;
    out += ',';
    out += p.correct ? "1" : "0";
    out += '\n';
  }
  return out;
}

}  // namespace bitsim
