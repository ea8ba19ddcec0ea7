#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "bitsim/cid.hpp"
#include "bitsim/message.hpp"
#include "bitsim/rng.hpp"
#include "bitsim/spread.hpp"

namespace bitsim {

// Tracks a node's own fetches.
struct ClientSession {
  std::uint32_t session_id = 0;
  std::set<Cid> wanted;
  std::set<Cid> received;  // always a subset of wanted
  bool is_relay = false;

  bool complete() const { return received.size() == wanted.size(); }
};

// Tracks CIDs requested on behalf of other peers. A (cid, peer) pair
// leaves `interests` exactly when that peer gets the block from us or
// cancels. `forwarded` enforces a single WANT-HAVE spread per cid.
struct RelaySession {
  std::map<Cid, std::set<PeerId>> interests;
  std::set<Cid> forwarded;

  bool empty() const { return interests.empty(); }
};

struct SentWant {
  WantType type = WantType::Have;
  TimeMs at = 0;  // scheduled send time, used to keep CANCELs behind wants
};

// Per-peer record of wants already dispatched; identical outstanding
// wants are suppressed.
struct PeerWantLedger {
  std::map<PeerId, std::map<Cid, SentWant>> sent;

  bool outstanding(PeerId peer, Cid cid, WantType type) const {
    auto it = sent.find(peer);
    if (it == sent.end()) return false;
    auto jt = it->second.find(cid);
    return jt != it->second.end() && jt->second.type == type;
  }

  bool any_outstanding_block_want(Cid cid) const {
    for (const auto& [peer, wants] : sent) {
      auto it = wants.find(cid);
      if (it != wants.end() && it->second.type == WantType::Block) return true;
    }
    return false;
  }

  void record(PeerId peer, Cid cid, WantType type, TimeMs at) {
    sent[peer][cid] = SentWant{type, at};
  }

  void erase(PeerId peer, Cid cid) {
    auto it = sent.find(peer);
    if (it == sent.end()) return;
    it->second.erase(cid);
    if (it->second.empty()) sent.erase(it);
  }
};

struct NodeConfig {
  SpreadingStrategy strategy;
  bool forwarding = false;
  std::optional<int> hop_limit;  // disabled by default
  std::size_t small_block_threshold = 1024;
  TimeMs sweep_interval_ms = 500;
  // Constant per-hop handling cost added by the transport to every send
  // a node makes. Relayed copies accumulate it once per hop, so a
  // relayed message can never arrive at exactly the same instant as the
  // original on a shorter path.
  TimeMs processing_delay_ms = 0;
};

// The Bitswap state machine with relay forwarding and pluggable
// spreading. Pure logic: every operation takes `now` and returns the
// sends it wants made; the caller owns time and transport.
class NodeState {
 public:
  NodeState() = default;
  NodeState(PeerId id, std::vector<PeerId> neighbors, NodeConfig config,
            std::uint64_t rng_seed)
      : id_(id),
        neighbors_(std::move(neighbors)),
        config_(std::move(config)),
        rng_(rng_seed) {}

  PeerId id() const { return id_; }
  const std::vector<PeerId>& neighbors() const { return neighbors_; }
  const NodeConfig& config() const { return config_; }
  const RelaySession& relay_session() const { return relay_; }
  const PeerWantLedger& ledger() const { return ledger_; }
  const std::map<Cid, Block>& blockstore() const { return blockstore_; }
  const std::vector<ClientSession>& client_sessions() const {
    return sessions_;
  }

  bool has_block(Cid cid) const { return blockstore_.count(cid) != 0; }

  void add_neighbor(PeerId p) {
    if (p == id_) throw std::invalid_argument("self neighbor");
    if (std::find(neighbors_.begin(), neighbors_.end(), p) ==
        neighbors_.end()) {
      neighbors_.push_back(p);
    }
  }

  void store_block(const Block& b) {
    if (cid_of(*b.data) != b.cid) {
      throw std::logic_error("block data does not match cid");
    }
    blockstore_.emplace(b.cid, b);
  }

  // Starts a fetch: opens a client session and spreads WANT-HAVEs for
  // the missing cids to every neighbor. Already-held cids are skipped.
  std::vector<TimedSend> want_content(const std::vector<Cid>& cids,
                                      TimeMs now) {
    if (cids.empty()) {
      throw std::invalid_argument("want_content: no cids");
    }
    ClientSession session;
    session.session_id = next_session_id_++;
    std::vector<Cid> missing;
    for (Cid c : cids) {
      if (!session.wanted.insert(c).second) continue;
      if (has_block(c)) {
        session.received.insert(c);
      } else {
        missing.push_back(c);
      }
    }
    sessions_.push_back(std::move(session));
    if (missing.empty()) return {};
    return spread_want_haves(missing, neighbors_, initial_ttl(), now);
  }

  // Late direct want toward a specific peer (baseline provider-lookup
  // wiring adds a virtual link and fetches over it).
  std::vector<TimedSend> want_direct(const std::vector<Cid>& cids, PeerId peer,
                                     TimeMs now) {
    std::vector<TimedSend> out;
    BitswapMessage msg;
    for (Cid c : cids) {
      if (has_block(c) || ledger_.outstanding(peer, c, WantType::Have)) {
        continue;
      }
      msg.entries.push_back(WantlistEntry{c, WantType::Have, false, true, 1});
      ledger_.record(peer, c, WantType::Have, now);
    }
    if (!msg.empty()) out.push_back({now, peer, std::move(msg)});
    return out;
  }

  std::vector<TimedSend> handle_message(PeerId from, const BitswapMessage& msg,
                                        TimeMs now) {
    if (std::find(neighbors_.begin(), neighbors_.end(), from) ==
        neighbors_.end()) {
      throw std::logic_error("message from non-neighbor");
    }
    std::vector<TimedSend> out;
    for (const auto& e : msg.entries) {
      std::vector<TimedSend> part;
      if (e.cancel) {
        part = handle_cancel(from, e.cid, now);
      } else if (e.want_type == WantType::Have) {
        part = handle_want_have(from, e, msg.ttl, now);
      } else {
        part = handle_want_block(from, e, now);
      }
      append(out, std::move(part));
    }
    for (const auto& b : msg.blocks) {
      append(out, handle_block(from, b, now));
    }
    for (const auto& [cid, presence] : msg.presences) {
      if (presence == Presence::Have) {
        append(out, handle_have(from, cid, now));
      }
      // DONT-HAVE needs no protocol reaction here; the baseline
      // provider-lookup model observes it at the simulator level.
    }
    return out;
  }

  // WANT-HAVE: answer from the blockstore when possible (small blocks
  // directly with the block), otherwise record the interest and, with
  // forwarding on, spread the want once per cid.
  std::vector<TimedSend> handle_want_have(PeerId from, const WantlistEntry& e,
                                          std::optional<int> ttl, TimeMs now) {
    std::vector<TimedSend> out;
    auto held = blockstore_.find(e.cid);
    if (held != blockstore_.end()) {
      BitswapMessage reply;
      if (held->second.size() < config_.small_block_threshold) {
        reply.blocks.push_back(held->second);
      } else {
        reply.presences.emplace_back(e.cid, Presence::Have);
      }
      out.push_back({now, from, std::move(reply)});
      return out;
    }
    if (e.send_dont_have) {
      BitswapMessage reply;
      reply.presences.emplace_back(e.cid, Presence::DontHave);
      out.push_back({now, from, std::move(reply)});
    }
    if (!config_.forwarding) return out;

    // Crossed wants: our own WANT-HAVE to this peer is already in
    // flight for the same cid. Recording the interest would create a
    // mutual-interest cycle that no block or CANCEL can ever drain, so
    // the crossing want is treated as a duplicate of our own request.
    if (ledger_.outstanding(from, e.cid, WantType::Have)) return out;

    relay_.interests[e.cid].insert(from);
    if (relay_.forwarded.count(e.cid)) return out;
    std::optional<int> next_ttl;
    if (config_.hop_limit) {
      int remaining = ttl.value_or(*config_.hop_limit);
      if (remaining <= 0) return out;  // exhausted, do not relay
      next_ttl = remaining - 1;
    }
    relay_.forwarded.insert(e.cid);
    std::vector<PeerId> targets;
    const auto& interested = relay_.interests[e.cid];
    for (PeerId p : neighbors_) {
      if (p == from) continue;
      if (interested.count(p)) continue;  // never echo a want back
      if (ledger_.outstanding(p, e.cid, WantType::Have)) continue;
      targets.push_back(p);
    }
    append(out, spread_want_haves({e.cid}, targets, next_ttl, now));
    return out;
  }

  std::vector<TimedSend> handle_want_block(PeerId from, const WantlistEntry& e,
                                           TimeMs now) {
    std::vector<TimedSend> out;
    auto held = blockstore_.find(e.cid);
    BitswapMessage reply;
    if (held != blockstore_.end()) {
      reply.blocks.push_back(held->second);
    } else if (e.send_dont_have) {
      reply.presences.emplace_back(e.cid, Presence::DontHave);
    }
    if (!reply.empty()) out.push_back({now, from, std::move(reply)});
    return out;
  }

  // Stores the block, forwards it to every interested peer, completes
  // sessions, and spreads CANCELs for the now-fulfilled wants.
  std::vector<TimedSend> handle_block(PeerId from, const Block& block,
                                      TimeMs now) {
    (void)from;
    std::vector<TimedSend> out;
    const bool was_new = !has_block(block.cid);
    if (was_new) store_block(block);
    for (auto& s : sessions_) {
      if (s.wanted.count(block.cid)) s.received.insert(block.cid);
    }
    auto it = relay_.interests.find(block.cid);
    if (it != relay_.interests.end()) {
      for (PeerId p : it->second) {
        BitswapMessage fwd;
        fwd.blocks.push_back(block);
        out.push_back({now, p, std::move(fwd)});
      }
      relay_.interests.erase(it);
    }
    if (was_new) append(out, emit_cancels_for(block.cid, now));
    return out;
  }

  // HAVE: request the block from the first responder; a single
  // outstanding WANT-BLOCK per cid, no retries.
  std::vector<TimedSend> handle_have(PeerId from, Cid cid, TimeMs now) {
    if (has_block(cid)) return {};
    if (!wants_cid(cid)) return {};
    if (ledger_.any_outstanding_block_want(cid)) return {};
    BitswapMessage msg;
    msg.entries.push_back(WantlistEntry{cid, WantType::Block, false, true, 1});
    ledger_.record(from, cid, WantType::Block, now);
    return {{now, from, std::move(msg)}};
  }

  std::vector<TimedSend> handle_cancel(PeerId from, Cid cid, TimeMs now) {
    auto it = relay_.interests.find(cid);
    if (it == relay_.interests.end() || !it->second.erase(from)) {
      return {};  // no recorded interest: idempotent no-op
    }
    if (!it->second.empty()) return {};
    relay_.interests.erase(it);
    if (wants_cid(cid)) return {};
    return emit_cancels_for(cid, now);
  }

  // Periodic check: cancels any outstanding sent want whose cid is no
  // longer actively wanted. Idempotent when nothing is pending.
  std::vector<TimedSend> session_sweep(TimeMs now) {
    std::set<Cid> stale;
    for (const auto& [peer, wants] : ledger_.sent) {
      for (const auto& [cid, want] : wants) {
        if (!actively_wanted(cid)) stale.insert(cid);
      }
    }
    std::vector<TimedSend> out;
    for (Cid c : stale) {
      append(out, emit_cancels_for(c, now));
    }
    return out;
  }

  bool actively_wanted(Cid cid) const {
    if (has_block(cid)) return false;
    return wants_cid(cid);
  }

  bool leech_complete() const {
    for (const auto& s : sessions_) {
      if (!s.is_relay && !s.complete()) return false;
    }
    return !sessions_.empty();
  }

 private:
  bool wants_cid(Cid cid) const {
    for (const auto& s : sessions_) {
      if (s.wanted.count(cid) && !s.received.count(cid)) return true;
    }
    auto it = relay_.interests.find(cid);
    return it != relay_.interests.end() && !it->second.empty();
  }

  std::optional<int> initial_ttl() const { return config_.hop_limit; }

  std::vector<TimedSend> spread_want_haves(const std::vector<Cid>& cids,
                                           const std::vector<PeerId>& targets,
                                           std::optional<int> ttl,
                                           TimeMs now) {
    auto sends = schedule_spread(
        rng_, config_.strategy, targets,
        [&](PeerId) {
          BitswapMessage msg;
          for (Cid c : cids) {
            msg.entries.push_back(
                WantlistEntry{c, WantType::Have, false, true, 1});
          }
          msg.ttl = ttl;
          return msg;
        },
        now);
    for (const auto& s : sends) {
      for (Cid c : cids) {
        ledger_.record(s.to, c, WantType::Have, s.at);
      }
    }
    return sends;
  }

  // CANCELs go to every peer with an outstanding sent want for the cid,
  // spread like wants. A cancel is never scheduled ahead of the want it
  // retracts, so per-link FIFO keeps want/cancel order at the receiver.
  std::vector<TimedSend> emit_cancels_for(Cid cid, TimeMs now) {
    std::vector<PeerId> targets;
    std::map<PeerId, TimeMs> want_at;
    for (const auto& [peer, wants] : ledger_.sent) {
      auto it = wants.find(cid);
      if (it != wants.end()) {
        targets.push_back(peer);
        want_at[peer] = it->second.at;
      }
    }
    if (targets.empty()) return {};
    auto sends = schedule_spread(
        rng_, config_.strategy, std::move(targets),
        [&](PeerId) {
          BitswapMessage msg;
          msg.entries.push_back(
              WantlistEntry{cid, WantType::Have, true, false, 1});
          return msg;
        },
        now);
    for (auto& s : sends) {
      s.at = std::max(s.at, want_at[s.to]);
      ledger_.erase(s.to, cid);
    }
    return sends;
  }

  static void append(std::vector<TimedSend>& dst, std::vector<TimedSend> src) {
    for (auto& s : src) dst.push_back(std::move(s));
  }

  PeerId id_ = 0;
  std::vector<PeerId> neighbors_;
  std::map<Cid, Block> blockstore_;
  std::vector<ClientSession> sessions_;
  RelaySession relay_;
  PeerWantLedger ledger_;
  NodeConfig config_;
  Rng rng_;
  std::uint32_t next_session_id_ = 1;
};

}  // namespace bitsim
