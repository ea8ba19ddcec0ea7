#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "bitsim/node.hpp"

using namespace bitsim;

namespace {

NodeConfig forwarding_cfg(SpreadingStrategy s = SpreadingStrategy::immediate()) {
  NodeConfig c;
  c.strategy = s;
  c.forwarding = true;
  return c;
}

NodeConfig baseline_cfg() {
  NodeConfig c;
  c.forwarding = false;
  return c;
}

WantlistEntry want_have(Cid cid) {
  return WantlistEntry{cid, WantType::Have, false, true, 1};
}

std::size_t count_want_haves(const std::vector<TimedSend>& sends) {
  std::size_t n = 0;
  for (const auto& s : sends) {
    for (const auto& e : s.message.entries) {
      if (!e.cancel && e.want_type == WantType::Have) ++n;
    }
  }
  return n;
}

}  // namespace

TEST_CASE("want_content spreads to every neighbor") {
  NodeState node(9, {1, 2, 3}, forwarding_cfg(), 7);
  auto sends = node.want_content({cid_of("c1")}, 100);
  REQUIRE(sends.size() == 3);
  std::set<PeerId> tos;
  for (const auto& s : sends) {
    CHECK(s.at == 100);
    tos.insert(s.to);
  }
  CHECK(tos == std::set<PeerId>{1, 2, 3});
  CHECK(node.ledger().outstanding(1, cid_of("c1"), WantType::Have));
}

TEST_CASE("want_content skips already-held cids") {
  NodeState node(9, {1, 2, 3}, forwarding_cfg(), 7);
  node.store_block(make_block("data"));
  auto sends = node.want_content({cid_of("data")}, 0);
  CHECK(sends.empty());
  REQUIRE(node.client_sessions().size() == 1);
  CHECK(node.client_sessions()[0].complete());
}

TEST_CASE("want_content trickles across neighbors and eavesdropper links") {
  NodeState node(9, {1, 2, 3, 4}, forwarding_cfg(SpreadingStrategy::trickle(100, 1)),
                 7);
  auto sends = node.want_content({cid_of("c1")}, 0);
  REQUIRE(sends.size() == 4);
  std::vector<TimeMs> ats;
  for (const auto& s : sends) ats.push_back(s.at);
  std::sort(ats.begin(), ats.end());
  CHECK(ats == std::vector<TimeMs>{0, 100, 200, 300});
}

TEST_CASE("want_have for a held small block answers with the block") {
  NodeState node(0, {1}, baseline_cfg(), 1);
  node.store_block(make_block("tiny"));
  auto sends = node.handle_want_have(1, want_have(cid_of("tiny")), {}, 50);
  REQUIRE(sends.size() == 1);
  REQUIRE(sends[0].message.blocks.size() == 1);
  CHECK(sends[0].to == 1);
  CHECK(sends[0].at == 50);
}

TEST_CASE("want_have for a held large block answers with HAVE") {
  NodeConfig cfg = baseline_cfg();
  cfg.small_block_threshold = 4;
  NodeState node(0, {1}, cfg, 1);
  node.store_block(make_block("not small"));
  auto sends = node.handle_want_have(1, want_have(cid_of("not small")), {}, 0);
  REQUIRE(sends.size() == 1);
  REQUIRE(sends[0].message.presences.size() == 1);
  CHECK(sends[0].message.presences[0].second == Presence::Have);
}

TEST_CASE("forwarder relays an unknown want once") {
  NodeState node(0, {1, 2, 3, 4}, forwarding_cfg(), 3);
  const Cid c = cid_of("wanted");

  auto first = node.handle_want_have(2, want_have(c), {}, 0);
  // DONT-HAVE to the requester plus a spread to the 3 other neighbors.
  REQUIRE(first.size() == 4);
  CHECK(first[0].to == 2);
  REQUIRE(first[0].message.presences.size() == 1);
  CHECK(first[0].message.presences[0].second == Presence::DontHave);
  std::set<PeerId> spread_tos;
  for (std::size_t i = 1; i < first.size(); ++i) {
    spread_tos.insert(first[i].to);
  }
  CHECK(spread_tos == std::set<PeerId>{1, 3, 4});
  CHECK(node.relay_session().interests.at(c).count(2) == 1);

  // A second requester we already spread to is a crossed want: answered
  // with DONT-HAVE but not recorded, and never re-spread.
  auto second = node.handle_want_have(3, want_have(c), {}, 10);
  REQUIRE(second.size() == 1);
  CHECK(second[0].message.presences[0].second == Presence::DontHave);
  CHECK(node.relay_session().interests.at(c).count(3) == 0);
  CHECK(count_want_haves(second) == 0);

  // Repeat from an already-interested peer adds nothing.
  auto third = node.handle_want_have(2, want_have(c), {}, 20);
  CHECK(count_want_haves(third) == 0);
  CHECK(node.relay_session().interests.at(c).size() == 1);
}

TEST_CASE("later non-crossing requesters accumulate as interests") {
  // Hop-limited wants with an exhausted budget record interest without
  // spreading, so no want of ours crosses the second requester's.
  NodeConfig cfg = forwarding_cfg();
  cfg.hop_limit = 2;
  NodeState node(0, {1, 2, 3, 4}, cfg, 3);
  const Cid c = cid_of("wanted");
  node.handle_want_have(1, want_have(c), 0, 0);
  node.handle_want_have(2, want_have(c), 0, 5);
  CHECK(node.relay_session().interests.at(c) == std::set<PeerId>{1, 2});
}

TEST_CASE("a node never echoes a want back to an interested peer") {
  NodeState node(0, {1, 2, 3}, forwarding_cfg(), 3);
  const Cid c = cid_of("wanted");
  auto sends = node.handle_want_have(1, want_have(c), {}, 0);
  for (const auto& s : sends) {
    for (const auto& e : s.message.entries) {
      if (!e.cancel && e.want_type == WantType::Have) {
        CHECK(s.to != 1);
      }
    }
  }
}

TEST_CASE("baseline node answers DONT-HAVE and never relays") {
  NodeState node(0, {1, 2, 3}, baseline_cfg(), 3);
  auto sends = node.handle_want_have(1, want_have(cid_of("x")), {}, 0);
  REQUIRE(sends.size() == 1);
  CHECK(sends[0].message.presences[0].second == Presence::DontHave);
  CHECK(count_want_haves(sends) == 0);
  CHECK(node.relay_session().empty());
}

TEST_CASE("received block is forwarded to all interested peers") {
  NodeConfig cfg = forwarding_cfg();
  cfg.hop_limit = 1;
  NodeState node(9, {0, 3, 5}, cfg, 3);
  const Block b = make_block("payload");
  node.handle_want_have(0, want_have(b.cid), 0, 0);
  node.handle_want_have(3, want_have(b.cid), 0, 1);

  auto sends = node.handle_block(5, b, 10);
  std::set<PeerId> block_tos;
  for (const auto& s : sends) {
    if (!s.message.blocks.empty()) block_tos.insert(s.to);
  }
  CHECK(block_tos == std::set<PeerId>{0, 3});
  CHECK(node.relay_session().interests.count(b.cid) == 0);
  CHECK(node.has_block(b.cid));
}

TEST_CASE("unsolicited block is stored without any sends") {
  NodeState node(0, {1}, forwarding_cfg(), 3);
  auto sends = node.handle_block(1, make_block("stray"), 5);
  CHECK(sends.empty());
  CHECK(node.has_block(cid_of("stray")));
}

TEST_CASE("duplicate block is idempotent") {
  NodeState node(0, {1, 2}, forwarding_cfg(), 3);
  const Block b = make_block("dup");
  node.handle_want_have(2, want_have(b.cid), {}, 0);
  auto first = node.handle_block(1, b, 10);
  CHECK(!first.empty());
  auto second = node.handle_block(1, b, 20);
  CHECK(second.empty());
}

TEST_CASE("final block completes the session and cancels outstanding wants") {
  NodeState node(9, {1, 2, 3}, forwarding_cfg(), 3);
  const Block b = make_block("the file");
  node.want_content({b.cid}, 0);  // wants recorded toward 1, 2, 3

  auto sends = node.handle_block(2, b, 400);
  std::size_t cancels = 0;
  for (const auto& s : sends) {
    for (const auto& e : s.message.entries) {
      if (e.cancel && e.cid == b.cid) ++cancels;
    }
  }
  CHECK(cancels == 3);
  CHECK(node.leech_complete());
  // Ledger drained: a sweep finds nothing left to cancel.
  CHECK(node.session_sweep(500).empty());
}

TEST_CASE("HAVE triggers a single WANT-BLOCK to the first responder") {
  NodeState node(9, {1, 2, 3}, forwarding_cfg(), 3);
  const Cid c = cid_of("blk");
  node.want_content({c}, 0);

  auto first = node.handle_have(2, c, 100);
  REQUIRE(first.size() == 1);
  CHECK(first[0].to == 2);
  REQUIRE(first[0].message.entries.size() == 1);
  CHECK(first[0].message.entries[0].want_type == WantType::Block);

  auto second = node.handle_have(3, c, 110);
  CHECK(second.empty());
}

TEST_CASE("HAVE for an unwanted cid is ignored") {
  NodeState node(0, {1}, forwarding_cfg(), 3);
  CHECK(node.handle_have(1, cid_of("unwanted"), 0).empty());
}

TEST_CASE("cancel removes interest and forwards upstream when drained") {
  NodeState node(0, {1, 2, 3, 4}, forwarding_cfg(), 3);
  const Cid c = cid_of("relayed");
  node.handle_want_have(1, want_have(c), {}, 0);  // spreads to 2, 3, 4

  WantlistEntry cancel{c, WantType::Have, true, false, 1};
  auto sends = node.handle_cancel(1, c, 50);
  CHECK(node.relay_session().interests.count(c) == 0);
  std::set<PeerId> cancel_tos;
  for (const auto& s : sends) {
    for (const auto& e : s.message.entries) {
      if (e.cancel) cancel_tos.insert(s.to);
    }
  }
  CHECK(cancel_tos == std::set<PeerId>{2, 3, 4});
  (void)cancel;
}

TEST_CASE("cancel for unknown cid is a no-op") {
  NodeState node(0, {1}, forwarding_cfg(), 3);
  CHECK(node.handle_cancel(1, cid_of("never seen"), 0).empty());
}

TEST_CASE("cancel keeps remaining interests and holds upstream cancels") {
  NodeConfig cfg = forwarding_cfg();
  cfg.hop_limit = 2;
  NodeState node(0, {1, 2, 3, 4}, cfg, 3);
  const Cid c = cid_of("shared");
  node.handle_want_have(1, want_have(c), 0, 0);   // interest only
  node.handle_want_have(2, want_have(c), {}, 1);  // interest + spread

  auto sends = node.handle_cancel(1, c, 10);
  CHECK(sends.empty());
  CHECK(node.relay_session().interests.at(c) == std::set<PeerId>{2});
}

TEST_CASE("sweep is idempotent and empty when nothing is pending") {
  NodeState node(0, {1, 2}, forwarding_cfg(), 3);
  CHECK(node.session_sweep(500).empty());
  CHECK(node.session_sweep(1000).empty());
}

TEST_CASE("hop limit stops relaying when exhausted") {
  NodeConfig cfg = forwarding_cfg();
  cfg.hop_limit = 1;
  NodeState node(0, {1, 2, 3}, cfg, 3);
  const Cid c = cid_of("ttl");

  // Remaining budget 0: interest recorded, no relay.
  auto sends = node.handle_want_have(1, want_have(c), 0, 0);
  CHECK(count_want_haves(sends) == 0);
  CHECK(node.relay_session().interests.at(c).count(1) == 1);

  // Fresh budget: relays with a decremented ttl.
  NodeState node2(0, {1, 2, 3}, cfg, 3);
  auto sends2 = node2.handle_want_have(1, want_have(c), 1, 0);
  CHECK(count_want_haves(sends2) == 2);
  for (const auto& s : sends2) {
    if (!s.message.entries.empty() && !s.message.entries[0].cancel) {
      if (s.message.entries[0].want_type == WantType::Have && s.to != 1) {
        REQUIRE(s.message.ttl.has_value());
        CHECK(*s.message.ttl == 0);
      }
    }
  }
}

TEST_CASE("message from a non-neighbor is a protocol error") {
  NodeState node(0, {1}, forwarding_cfg(), 3);
  BitswapMessage msg;
  msg.entries.push_back(want_have(cid_of("x")));
  CHECK_THROWS_AS(node.handle_message(42, msg, 0), std::logic_error);
}
