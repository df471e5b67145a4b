// Copyright 2026 The Conat Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "conat/error.hpp"

namespace conat {

/// One shared EPR pair.
struct Edge {
  std::string a;
  std::string b;
  std::optional<double> r;  // falls back to Topology::r

  bool operator==(const Edge&) const = default;
};

/// Parties, a designated sender, and the EPR pairs shared between them.
struct Topology {
  std::vector<std::string> parties;
  std::string sender;
  std::vector<Edge> edges;
  double r = 1.0;

  double edge_r(std::size_t e) const { return edges.at(e).r.value_or(r); }
  bool has_party(const std::string& name) const {
    return std::find(parties.begin(), parties.end(), name) != parties.end();
  }

  bool operator==(const Topology&) const = default;
};

struct TopologyReport {
  bool valid = false;
  bool sender_known = false;
  bool connected = false;
  bool is_tree = false;
  /// Hop distance from the sender, aligned with Topology::parties; -1 if unreachable.
  std::vector<int> path_length;
  /// Connected components (party names, in party order within each).
  std::vector<std::vector<std::string>> components;
  std::vector<std::string> errors;
};

inline TopologyReport validate_topology(const Topology& topo) {
  TopologyReport report;
  const std::size_t n = topo.parties.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!index.emplace(topo.parties[i], i).second) report.errors.push_back("duplicate party '" + topo.parties[i] + "'");
  }
  if (n == 0) report.errors.push_back("no parties");
  report.sender_known = index.count(topo.sender) > 0;
  if (!report.sender_known) report.errors.push_back("sender '" + topo.sender + "' is not a party");

  std::vector<std::vector<std::size_t>> adjacency(n);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  bool edges_ok = true;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    const auto& edge = topo.edges[e];
    auto ia = index.find(edge.a);
    auto ib = index.find(edge.b);
    if (ia == index.end() || ib == index.end()) {
      report.errors.push_back("edge " + edge.a + "-" + edge.b + " names an unknown party");
      edges_ok = false;
      continue;
    }
    if (ia->second == ib->second) {
      report.errors.push_back("self-loop at '" + edge.a + "'");
      edges_ok = false;
      continue;
    }
    auto key = std::minmax(ia->second, ib->second);
    if (!seen.insert(key).second) {
      report.errors.push_back("duplicate edge " + edge.a + "-" + edge.b);
      edges_ok = false;
      continue;
    }
    if (topo.edge_r(e) < 0.0) {
      report.errors.push_back("edge " + edge.a + "-" + edge.b + " has negative squeezing");
      edges_ok = false;
    }
    adjacency[ia->second].push_back(ib->second);
    adjacency[ib->second].push_back(ia->second);
  }

  std::vector<int> component(n, -1);
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    const int id = static_cast<int>(report.components.size());
    report.components.emplace_back();
    std::queue<std::size_t> queue;
    queue.push(start);
    component[start] = id;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop();
      for (std::size_t v : adjacency[u]) {
        if (component[v] < 0) {
          component[v] = id;
          queue.push(v);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (component[i] == id) report.components.back().push_back(topo.parties[i]);
    }
  }
  report.connected = n > 0 && report.components.size() == 1;
  report.is_tree = report.connected && edges_ok && topo.edges.size() + 1 == n;

  report.path_length.assign(n, -1);
  if (report.sender_known) {
    std::queue<std::size_t> queue;
    const std::size_t s = index.at(topo.sender);
    report.path_length[s] = 0;
    queue.push(s);
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop();
      for (std::size_t v : adjacency[u]) {
        if (report.path_length[v] < 0) {
          report.path_length[v] = report.path_length[u] + 1;
          queue.push(v);
        }
      }
    }
  }

  if (!report.connected && n > 0) {
    for (const auto& comp : report.components) {
      if (!report.sender_known || std::find(comp.begin(), comp.end(), topo.sender) == comp.end()) {
        std::string names;
        for (const auto& name : comp) names += (names.empty() ? "" : ",") + name;
        report.errors.push_back("component {" + names + "} is disconnected from the sender");
      }
    }
  }
  if (report.connected && edges_ok && topo.edges.size() + 1 != n) {
    report.errors.push_back("graph has " + std::to_string(topo.edges.size()) + " EPR pairs for " +
                            std::to_string(n) + " parties; a tree needs exactly " + std::to_string(n - 1) +
                            " (the extra pairs close a cycle)");
  }
  report.valid = report.errors.empty() && report.is_tree && report.sender_known;
  return report;
}

/// Parses {"parties": [...], "sender": "...", "edges": [["A","B"], ["B","C", 0.7]], "r": number}.
/// A third element of an edge overrides r for that pair.
inline Topology topology_from_json(const nlohmann::json& doc) {
  Topology topo;
  try {
    for (const auto& p : doc.at("parties")) topo.parties.push_back(p.get<std::string>());
    topo.sender = doc.at("sender").get<std::string>();
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() < 2 || e.size() > 3) {
        throw Error(ErrorCode::Topology, "each edge must be [a, b] or [a, b, r]");
      }
      Edge edge{e.at(0).get<std::string>(), e.at(1).get<std::string>(), std::nullopt};
      if (e.size() == 3) edge.r = e.at(2).get<double>();
      topo.edges.push_back(std::move(edge));
    }
    if (doc.contains("r")) topo.r = doc.at("r").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Topology, std::string("malformed topology document: ") + ex.what());
  }
  return topo;
}

inline nlohmann::json topology_to_json(const Topology& topo) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : topo.edges) {
    nlohmann::json entry = nlohmann::json::array({e.a, e.b});
    if (e.r) entry.push_back(*e.r);
    edges.push_back(std::move(entry));
  }
  return {{"parties", topo.parties}, {"sender", topo.sender}, {"edges", edges}, {"r", topo.r}};
}

inline Topology load_topology(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Topology, "cannot open topology file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::Topology, "cannot parse '" + path + "': " + ex.what());
  }
  return topology_from_json(doc);
}

/// Chain P0 - P1 - ... with the sender at one end.
inline Topology chain_topology(const std::vector<std::string>& parties, double r = 1.0) {
  Topology topo{parties, parties.at(0), {}, r};
  for (std::size_t i = 1; i < parties.size(); ++i) topo.edges.push_back({parties[i - 1], parties[i], std::nullopt});
  return topo;
}

/// Star with the sender (first party) at the hub.
inline Topology star_topology(const std::vector<std::string>& parties, double r = 1.0) {
  Topology topo{parties, parties.at(0), {}, r};
  for (std::size_t i = 1; i < parties.size(); ++i) topo.edges.push_back({parties[0], parties[i], std::nullopt});
  return topo;
}

}  // namespace conat
