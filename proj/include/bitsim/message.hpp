#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bitsim/cid.hpp"

namespace bitsim {

using PeerId = std::uint32_t;
using TimeMs = double;

enum class WantType { Have, Block };
enum class Presence { Have, DontHave };

struct WantlistEntry {
  Cid cid;
  WantType want_type = WantType::Have;
  bool cancel = false;
  bool send_dont_have = true;
  int priority = 1;  // carried for wire fidelity, unused for ordering
};

struct BitswapMessage {
  std::vector<WantlistEntry> entries;
  std::vector<Block> blocks;
  std::vector<std::pair<Cid, Presence>> presences;
  std::optional<int> ttl;  // hop limit, absent when disabled

  bool empty() const {
    return entries.empty() && blocks.empty() && presences.empty();
  }
};

// Outbound action produced by the protocol state machine; the simulator
// turns these into delivery events.
struct TimedSend {
  TimeMs at = 0;
  PeerId to = 0;
  BitswapMessage message;
};

// Canonical JSON rendering (sorted keys) for trace dumps.
inline nlohmann::ordered_json message_to_json(const BitswapMessage& m) {
  nlohmann::ordered_json j;
  auto entries = nlohmann::ordered_json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"cancel", e.cancel},
                       {"cid", e.cid.to_hex()},
                       {"priority", e.priority},
                       {"send_dont_have", e.send_dont_have},
                       {"want_type", e.want_type == WantType::Have
                                         ? "have"
                                         : "block"}});
  }
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& b : m.blocks) {
    blocks.push_back({{"cid", b.cid.to_hex()}, {"size", b.size()}});
  }
  auto presences = nlohmann::ordered_json::array();
  for (const auto& [cid, p] : m.presences) {
    presences.push_back(
        {{"cid", cid.to_hex()},
         {"presence", p == Presence::Have ? "have" : "dont_have"}});
  }
  j["blocks"] = std::move(blocks);
  j["entries"] = std::move(entries);
  j["presences"] = std::move(presences);
  if (m.ttl) j["ttl"] = *m.ttl;
  return j;
}

}  // namespace bitsim
