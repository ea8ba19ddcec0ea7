#pragma once

#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitsim/cid.hpp"
#include "bitsim/message.hpp"
#include "bitsim/node.hpp"
#include "bitsim/rng.hpp"
#include "bitsim/topology.hpp"

namespace bitsim {

enum class MsgKind { WantHave, WantBlock, Cancel, Have, DontHave, BlockData };

inline const char* msg_kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::WantHave: return "want_have";
    case MsgKind::WantBlock: return "want_block";
    case MsgKind::Cancel: return "cancel";
    case MsgKind::Have: return "have";
    case MsgKind::DontHave: return "dont_have";
    case MsgKind::BlockData: return "block";
  }
  return "?";
}

// One message component logged by a passive observer.
struct Observation {
  PeerId observer = 0;
  PeerId sender = 0;
  Cid cid;
  MsgKind kind = MsgKind::WantHave;
  TimeMs time = 0;
};

struct TraceEvent {
  TimeMs time = 0;
  PeerId from = 0;
  PeerId to = 0;
  BitswapMessage message;
};

struct Trace {
  std::vector<TraceEvent> events;
  std::vector<Observation> observations;
  bool completed = false;
  TimeMs ttf_ms = 0;  // last block receipt minus first want emission
  bool leech_file_ok = false;  // leech holds byte-exact copies of all blocks
  bool relay_drained = false;
  bool truncated = false;
  std::size_t messages_total = 0;
  std::size_t want_haves_total = 0;
  std::map<PeerId, std::size_t> final_relay_interest_counts;
};

// Modeled provider lookup for the plain-Bitswap baseline: when every
// honest neighbor answered DONT-HAVE, the leech pays dht_lookup_rtts
// round trips, then gains a direct virtual link to the seed.
struct BaselineModel {
  int dht_lookup_rtts = 1;
};

namespace detail {

struct SimEvent {
  TimeMs time = 0;
  std::uint64_t seq = 0;
  enum class Kind { Deliver, Sweep, LookupDone } kind = Kind::Deliver;
  PeerId from = 0;
  PeerId to = 0;
  BitswapMessage message;
};

struct EventOrder {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;  // enqueue order breaks ties
  }
};

}  // namespace detail

// Deterministic discrete-event run: the leech fetches all blocks of the
// file, eavesdroppers log deliveries and never respond.
inline Trace run_simulation(const Topology& topo, const NodeConfig& node_cfg,
                            const std::vector<Block>& file_blocks,
                            PeerId leech, std::uint64_t seed,
                            TimeMs max_time = 60000,
                            const BaselineModel* baseline = nullptr) {
  using detail::SimEvent;
  if (file_blocks.empty()) throw std::invalid_argument("empty file");

  PeerId seed_node = topo.nodes.size();
  for (PeerId p = 0; p < topo.nodes.size(); ++p) {
    if (topo.nodes[p].role == Role::Seed) seed_node = p;
  }
  if (seed_node == topo.nodes.size()) {
    throw std::invalid_argument("topology has no seed");
  }

  std::map<PeerId, NodeState> nodes;
  for (PeerId p = 0; p < topo.nodes.size(); ++p) {
    if (!topo.is_honest(p)) continue;
    nodes.emplace(p, NodeState(p, topo.neighbors_of(p), node_cfg,
                               mix_seed(seed, p)));
  }
  for (const auto& b : file_blocks) nodes.at(seed_node).store_block(b);

  std::vector<Cid> wanted;
  for (const auto& b : file_blocks) wanted.push_back(b.cid);
  const Cid root_cid = wanted.front();

  Trace trace;
  std::priority_queue<SimEvent, std::vector<SimEvent>, detail::EventOrder>
      queue;
  std::uint64_t next_seq = 0;
  std::map<std::pair<PeerId, PeerId>, TimeMs> last_delivery;
  bool virtual_link = false;

  auto enqueue_sends = [&](PeerId from, const std::vector<TimedSend>& sends,
                           TimeMs now) {
    for (const auto& s : sends) {
      if (s.at < now) throw std::logic_error("send scheduled in the past");
      if (!topo.has_edge(from, s.to) &&
          !(virtual_link && ((from == leech && s.to == seed_node) ||
                             (from == seed_node && s.to == leech)))) {
        throw std::logic_error("send over non-edge");
      }
      SimEvent ev;
      ev.time = s.at + node_cfg.processing_delay_ms + topo.latency_ms;
      ev.seq = next_seq++;
      ev.kind = SimEvent::Kind::Deliver;
      ev.from = from;
      ev.to = s.to;
      ev.message = s.message;
      queue.push(std::move(ev));
    }
  };

  auto schedule_sweep = [&](TimeMs at) {
    SimEvent ev;
    ev.time = at;
    ev.seq = next_seq++;
    ev.kind = SimEvent::Kind::Sweep;
    queue.push(std::move(ev));
  };

  // Baseline lookup state.
  std::set<PeerId> dont_have_from;
  bool provider_signal = false;
  bool lookup_pending = false;
  std::size_t honest_neighbor_count = 0;
  if (baseline) {
    for (PeerId p : topo.neighbors_of(leech)) {
      if (topo.is_honest(p)) ++honest_neighbor_count;
    }
  }

  enqueue_sends(leech, nodes.at(leech).want_content(wanted, 0), 0);
  schedule_sweep(node_cfg.sweep_interval_ms);

  while (!queue.empty()) {
    SimEvent ev = queue.top();
    queue.pop();
    if (ev.time > max_time) {
      trace.truncated = true;
      break;
    }
    switch (ev.kind) {
      case SimEvent::Kind::Deliver: {
        auto link = std::make_pair(ev.from, ev.to);
        auto it = last_delivery.find(link);
        if (it != last_delivery.end() && ev.time < it->second) {
          throw std::logic_error("per-link FIFO violated");
        }
        last_delivery[link] = ev.time;

        trace.events.push_back({ev.time, ev.from, ev.to, ev.message});
        ++trace.messages_total;
        for (const auto& e : ev.message.entries) {
          if (!e.cancel && e.want_type == WantType::Have) {
            ++trace.want_haves_total;
          }
        }

        if (!topo.is_honest(ev.to)) {
          // Passive observer: log timestamps, never respond.
          for (const auto& e : ev.message.entries) {
            MsgKind k = e.cancel ? MsgKind::Cancel
                        : e.want_type == WantType::Have ? MsgKind::WantHave
                                                        : MsgKind::WantBlock;
            trace.observations.push_back({ev.to, ev.from, e.cid, k, ev.time});
          }
          for (const auto& b : ev.message.blocks) {
            trace.observations.push_back(
                {ev.to, ev.from, b.cid, MsgKind::BlockData, ev.time});
          }
          for (const auto& [cid, p] : ev.message.presences) {
            trace.observations.push_back(
                {ev.to, ev.from, cid,
                 p == Presence::Have ? MsgKind::Have : MsgKind::DontHave,
                 ev.time});
          }
          break;
        }

        if (baseline && ev.to == leech) {
          for (const auto& [cid, p] : ev.message.presences) {
            if (p == Presence::DontHave && cid == root_cid) {
              dont_have_from.insert(ev.from);
            }
            if (p == Presence::Have) provider_signal = true;
          }
          if (!ev.message.blocks.empty()) provider_signal = true;
        }

        auto& node = nodes.at(ev.to);
        enqueue_sends(ev.to, node.handle_message(ev.from, ev.message, ev.time),
                      ev.time);

        if (!trace.completed && nodes.at(leech).leech_complete()) {
          trace.completed = true;
          trace.ttf_ms = ev.time;
        }

        if (baseline && !lookup_pending && !provider_signal &&
            !trace.completed &&
            dont_have_from.size() == honest_neighbor_count) {
          lookup_pending = true;
          SimEvent done;
          done.time =
              ev.time + baseline->dht_lookup_rtts * 2 * topo.latency_ms;
          done.seq = next_seq++;
          done.kind = SimEvent::Kind::LookupDone;
          queue.push(std::move(done));
        }
        break;
      }
      case SimEvent::Kind::Sweep: {
        bool emitted = false;
        for (auto& [p, node] : nodes) {
          auto sends = node.session_sweep(ev.time);
          if (!sends.empty()) emitted = true;
          enqueue_sends(p, sends, ev.time);
        }
        if (emitted || !queue.empty()) {
          schedule_sweep(ev.time + node_cfg.sweep_interval_ms);
        }
        break;
      }
      case SimEvent::Kind::LookupDone: {
        if (trace.completed) break;
        virtual_link = true;
        std::vector<Cid> missing;
        for (Cid c : wanted) {
          if (!nodes.at(leech).has_block(c)) missing.push_back(c);
        }
        auto& ln = nodes.at(leech);
        ln.add_neighbor(seed_node);
        nodes.at(seed_node).add_neighbor(leech);
        enqueue_sends(leech, ln.want_direct(missing, seed_node, ev.time),
                      ev.time);
        break;
      }
    }
  }

  if (trace.completed) {
    trace.leech_file_ok = true;
    const auto& store = nodes.at(leech).blockstore();
    for (const auto& b : file_blocks) {
      auto it = store.find(b.cid);
      if (it == store.end() || *it->second.data != *b.data) {
        trace.leech_file_ok = false;
      }
    }
  }

  trace.relay_drained = true;
  for (const auto& [p, node] : nodes) {
    std::size_t n = node.relay_session().interests.size();
    trace.final_relay_interest_counts[p] = n;
    if (n != 0) trace.relay_drained = false;
  }
  return trace;
}

// JSON-lines trace export: one line per message component.
inline std::string trace_to_jsonl(const Topology& topo, const Trace& trace) {
  std::string out;
  auto emit = [&](TimeMs t, PeerId from, PeerId to, const char* kind,
                  const std::string& cid_prefix) {
    nlohmann::ordered_json j;
    j["time_ms"] = t;
    j["from"] = topo.nodes[from].name;
    j["to"] = topo.nodes[to].name;
    j["kind"] = kind;
    j["cid"] = cid_prefix;
    out += j.dump();
    out += '\n';
  };
  for (const auto& e : trace.events) {
    for (const auto& entry : e.message.entries) {
      MsgKind k = entry.cancel ? MsgKind::Cancel
                  : entry.want_type == WantType::Have ? MsgKind::WantHave
                                                      : MsgKind::WantBlock;
      emit(e.time, e.from, e.to, msg_kind_name(k), entry.cid.prefix());
    }
    for (const auto& b : e.message.blocks) {
      emit(e.time, e.from, e.to, msg_kind_name(MsgKind::BlockData),
           b.cid.prefix());
    }
    for (const auto& [cid, p] : e.message.presences) {
      emit(e.time, e.from, e.to,
           msg_kind_name(p == Presence::Have ? MsgKind::Have
                                             : MsgKind::DontHave),
           cid.prefix());
    }
  }
  return out;
}

}  // namespace bitsim
