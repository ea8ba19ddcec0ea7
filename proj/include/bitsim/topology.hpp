#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bitsim/message.hpp"

namespace bitsim {

enum class Role { Seed, Leech, Forwarder, Eavesdropper };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Seed: return "seed";
    case Role::Leech: return "leech";
    case Role::Forwarder: return "forwarder";
    case Role::Eavesdropper: return "eavesdropper";
  }
  return "?";
}

// Undirected graph with uniform per-scenario link latency.
struct Topology {
  struct Node {
    std::string name;
    Role role;
  };

  std::vector<Node> nodes;
  std::set<std::pair<PeerId, PeerId>> edges;  // stored with first < second
  TimeMs latency_ms = 100;

  PeerId add_node(std::string name, Role role) {
    nodes.push_back({std::move(name), role});
    return static_cast<PeerId>(nodes.size() - 1);
  }

  void add_edge(PeerId a, PeerId b) {
    if (a == b) throw std::invalid_argument("self-loop");
    if (a > b) std::swap(a, b);
    edges.insert({a, b});
  }

  bool has_edge(PeerId a, PeerId b) const {
    if (a > b) std::swap(a, b);
    return edges.count({a, b}) != 0;
  }

  bool is_honest(PeerId p) const {
    return nodes[p].role != Role::Eavesdropper;
  }

  std::vector<PeerId> neighbors_of(PeerId p) const {
    std::vector<PeerId> out;
    for (const auto& [a, b] : edges) {
      if (a == p) out.push_back(b);
      if (b == p) out.push_back(a);
    }
    return out;
  }

  std::size_t honest_count() const {
    std::size_t n = 0;
    for (const auto& node : nodes) {
      if (node.role != Role::Eavesdropper) ++n;
    }
    return n;
  }

  PeerId find(const std::string& name) const {
    for (PeerId i = 0; i < nodes.size(); ++i) {
      if (nodes[i].name == name) return i;
    }
    throw std::out_of_range("no node named " + name);
  }

  // Edge-list text format, one "a b" line per edge, for visualization.
  std::string to_edge_list() const {
    std::string out;
    for (const auto& [a, b] : edges) {
      out += nodes[a].name;
      out += ' ';
      out += nodes[b].name;
      out += '\n';
    }
    return out;
  }
};

// The fixed 11-node evaluation topology: one seed `s`, nodes n0..n9.
// Leech position is assigned per scenario via node role.
inline Topology figure1_topology() {
  Topology t;
  for (int i = 0; i <= 9; ++i) {
    t.add_node("n" + std::to_string(i), Role::Forwarder);
  }
  t.add_node("s", Role::Seed);
  const std::pair<int, int> edges[] = {
      {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {1, 4}, {2, 3},
      {2, 5}, {3, 6}, {4, 5}, {4, 6}, {4, 7}, {5, 6}, {5, 8},
      {6, 9}, {7, 8}, {7, 9}, {8, 9},
  };
  for (auto [a, b] : edges) {
    t.add_edge(static_cast<PeerId>(a), static_cast<PeerId>(b));
  }
  const PeerId s = t.find("s");
  t.add_edge(t.find("n7"), s);
  t.add_edge(t.find("n8"), s);
  t.add_edge(t.find("n9"), s);
  return t;
}

// Adds k passive observers, each linked to every honest node.
inline Topology attach_eavesdroppers(Topology topo, std::size_t k) {
  std::vector<PeerId> honest;
  std::size_t existing = 0;
  for (PeerId p = 0; p < topo.nodes.size(); ++p) {
    if (topo.is_honest(p)) {
      honest.push_back(p);
    } else {
      ++existing;
    }
  }
  for (std::size_t i = 0; i < k; ++i) {
    PeerId e = topo.add_node("e" + std::to_string(existing + i),
                             Role::Eavesdropper);
    for (PeerId h : honest) {
      topo.add_edge(h, e);
    }
  }
  return topo;
}

}  // namespace bitsim
