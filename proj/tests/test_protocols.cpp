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

#include <cmath>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "conat/protocols.hpp"
#include "conat/verify.hpp"
#include "oracles.hpp"

namespace conat {
namespace {

const auto X = Quadrature::X;
const auto P = Quadrature::P;

// Compares squeezing-weighted coefficients of a register mode with a table row.
void expect_effective(const QuadratureRegister& reg, ModeId k, Quadrature q, const oracle::Coefficients& expected,
                      const std::string& what) {
  std::set<BasisLabel> labels;
  for (const auto& [label, c] : reg.form(k, q).terms()) labels.insert(label);
  for (const auto& [label, c] : expected) labels.insert(label);
  for (const auto& label : labels) {
    const double want = expected.count(label) ? expected.at(label) : 0.0;
    EXPECT_NEAR(reg.effective_coefficient(k, q, label), want, 1e-12) << what << " " << to_string(label);
  }
}

LinearForm sum_of(const QuadratureRegister& reg, const std::vector<ModeId>& modes, Quadrature q) {
  LinearForm f;
  for (ModeId m : modes) f += reg.form(m, q);
  return f;
}

TEST(GhzTest, FourModeCoefficientsMatchTable) {
  for (double r : {0.0, 0.5, 1.0, 2.0}) {
    const QuadratureRegister reg = prepare_ghz(4, r);
    const auto table = oracle::ghz4(r);
    const char* rows[] = {"A1", "A2", "B", "C"};
    for (ModeId k = 0; k < 4; ++k) {
      for (Quadrature q : {X, P}) expect_effective(reg, k, q, table.at({rows[k], q}), rows[k]);
    }
  }
}

TEST(GhzTest, CorrelationsScaleWithModeCount) {
  for (int n = 2; n <= 8; ++n) {
    for (double r : {0.0, 0.7, 1.5}) {
      const QuadratureRegister reg = prepare_ghz(n, r);
      std::vector<ModeId> modes(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) modes[static_cast<std::size_t>(k)] = static_cast<ModeId>(k);
      EXPECT_NEAR(variance_of(reg, sum_of(reg, modes, P)), n * std::exp(-2 * r), 1e-12);
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          EXPECT_NEAR(variance_of(reg, reg.x(static_cast<ModeId>(i)) - reg.x(static_cast<ModeId>(j))),
                      2 * std::exp(-2 * r), 1e-12);
        }
      }
      EXPECT_TRUE(symplectic_check(reg).ok);
    }
  }
}

TEST(GhzTest, MqVariantSwapsRoles) {
  for (int n = 2; n <= 6; ++n) {
    const double r = 0.9;
    const QuadratureRegister reg = prepare_ghz_mq_variant(n, r);
    std::vector<ModeId> modes;
    for (int k = 0; k < n; ++k) modes.push_back(static_cast<ModeId>(k));
    EXPECT_NEAR(variance_of(reg, sum_of(reg, modes, X)), n * std::exp(-2 * r), 1e-12);
    EXPECT_NEAR(variance_of(reg, reg.p(0) - reg.p(1)), 2 * std::exp(-2 * r), 1e-12);
    EXPECT_TRUE(symplectic_check(reg).ok);
  }
}

TEST(GhzTest, EprPairValues) {
  for (double r : {0.0, 0.25, 1.0, 3.0}) {
    const QuadratureRegister reg = prepare_epr(r);
    EXPECT_NEAR(variance_of(reg, reg.x(0) - reg.x(1)), 2 * std::exp(-2 * r), 1e-12);
    EXPECT_NEAR(variance_of(reg, reg.p(0) + reg.p(1)), 2 * std::exp(-2 * r), 1e-12);
    EXPECT_NEAR(variance_of(reg, reg.x(0)), std::cosh(2 * r), 1e-9);
    EXPECT_NEAR(covariance_of(reg, reg.x(0), reg.x(1)), std::sinh(2 * r), 1e-9);
  }
}

TEST(GhzTest, HelmertMixingIsOrthogonal) {
  for (std::size_t n = 1; n <= 9; ++n) {
    const auto o = helmert_mixing(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += o[i][a] * o[i][b];
        EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-14);
      }
    }
  }
}

TEST(GhzTest, RejectsBadParameters) {
  EXPECT_THROW(prepare_ghz(1, 1.0), Error);
  EXPECT_THROW(prepare_ghz(3, -0.1), Error);
  EXPECT_THROW(prepare_ghz(3, std::nan("")), Error);
}

TEST(FeedForwardTest, OutputsMatchHandDerivedForms) {
  for (double eta : {1.0, 0.8, 0.5}) {
    for (double r : {0.0, 1.0}) {
      const ChannelOutput out = ccaecc_pq(3, r, eta);
      const auto table = oracle::feedforward_outputs(r, eta);
      for (const char* party : {"A", "B", "C"}) {
        for (Quadrature q : {X, P}) expect_effective(out.reg, out.mode_of(party), q, table.at({party, q}), party);
      }
      EXPECT_EQ(out.reg.detector_count(), eta < 1.0 ? 2 : 0);
      EXPECT_TRUE(symplectic_check(out.reg).ok);
    }
  }
}

TEST(FeedForwardTest, ReceiversAndLayout) {
  const ChannelOutput out = ccaecc_pq(4, 1.0, 1.0);
  EXPECT_EQ(out.parties, (std::vector<std::string>{"A", "B", "C", "D"}));
  EXPECT_EQ(out.sender(), "A");
  EXPECT_EQ(out.input_number(), 1);
  EXPECT_EQ(out.reg.live_modes().size(), 4u);
  EXPECT_THROW(out.party_index("Z"), Error);
  EXPECT_EQ(out.copied(), X);
  EXPECT_EQ(ccaecc_mq(3, 1.0, 1.0).copied(), P);
}

TEST(FeedForwardTest, NoiseScalesWithReceiverCount) {
  for (int n = 2; n <= 7; ++n) {
    for (ChannelKind kind : {ChannelKind::PQ, ChannelKind::MQ}) {
      const double r = 0.8;
      const double eta = 0.9;
      const ChannelOutput out = ccaecc(kind, n, r, eta);
      const EpsilonReport rep = check_definition(out);
      ASSERT_EQ(rep.epsilons.size(), static_cast<std::size_t>(n));
      for (int k = 0; k + 1 < n; ++k) EXPECT_NEAR(rep.epsilons[static_cast<std::size_t>(k)], 2 * std::exp(-2 * r), 1e-12);
      EXPECT_NEAR(rep.epsilons.back(), (n + 1) * std::exp(-2 * r) + 2 * (1 - eta) / eta, 1e-12);
      for (bool f : rep.input_free) EXPECT_TRUE(f);
      EXPECT_TRUE(rep.commutators_ok);
    }
  }
}

TEST(FeedForwardTest, RejectsBadParameters) {
  EXPECT_THROW(ccaecc_pq(1, 1.0, 1.0), Error);
  EXPECT_THROW(ccaecc_pq(3, 1.0, 0.0), Error);
  EXPECT_THROW(ccaecc_pq(3, 1.0, 1.01), Error);
  EXPECT_THROW(ccaecc_pq(3, -1.0, 1.0), Error);
}

void expect_integer_table(const QuadratureRegister& reg, const oracle::IntegerTable& table) {
  for (const auto& [key, row] : table) {
    const auto [mode, q] = key;
    const LinearForm& f = reg.form(static_cast<ModeId>(mode - 1), q);
    std::set<int> ids;
    for (const auto& [label, c] : f.terms()) {
      EXPECT_EQ(label.kind, LabelKind::Input);
      EXPECT_EQ(label.quadrature, q) << "mode " << mode;
      ids.insert(label.mode);
    }
    for (const auto& [id, c] : row) ids.insert(id);
    for (int id : ids) {
      const double want = row.count(id) ? row.at(id) : 0.0;
      EXPECT_EQ(f.coefficient({LabelKind::Input, id, q}), want)
          << quadrature_char(q) << mode << "' on mode " << id;
    }
  }
}

TEST(SuperdenseTest, ChainOutputsMatchTable) {
  const SuperdenseLayout layout = superdense_program(chain_topology({"A", "B", "C"}), true);
  expect_integer_table(run_symbolic(layout.program), oracle::chain3());
}

TEST(SuperdenseTest, StarOutputsMatchTable) {
  const SuperdenseLayout layout = superdense_program(star_topology({"A", "B", "C"}), true);
  expect_integer_table(run_symbolic(layout.program), oracle::star3());
}

TEST(SuperdenseTest, PathLawOverAllSmallTrees) {
  const double r = 0.6;
  const double unit = 2 * std::exp(-2 * r);
  std::size_t checked = 0;
  for (int k = 2; k <= 6; ++k) {
    for (const auto& edges : oracle::labeled_trees(k)) {
      Topology topo;
      for (int v = 0; v < k; ++v) topo.parties.push_back(party_name(static_cast<std::size_t>(v)));
      topo.sender = topo.parties[0];
      topo.r = r;
      for (auto [a, b] : edges) topo.edges.push_back({topo.parties[a], topo.parties[b], std::nullopt});
      const auto dist = oracle::hop_distances(k, edges, 0);
      const auto [pq, mq] = superdense_conat(topo);
      const EpsilonReport pq_rep = check_definition(pq);
      const EpsilonReport mq_rep = check_definition(mq);
      ASSERT_EQ(pq_rep.epsilons.size(), static_cast<std::size_t>(k));
      for (int v = 1; v < k; ++v) {
        // receivers follow party order with the sender removed
        EXPECT_NEAR(pq_rep.epsilons[static_cast<std::size_t>(v - 1)], dist[static_cast<std::size_t>(v)] * unit, 1e-10);
        EXPECT_NEAR(mq_rep.epsilons[static_cast<std::size_t>(v - 1)], dist[static_cast<std::size_t>(v)] * unit, 1e-10);
      }
      EXPECT_NEAR(pq_rep.epsilons.back(), (k - 1) * unit, 1e-10);
      EXPECT_NEAR(mq_rep.epsilons.back(), 0.0, 1e-10);
      EXPECT_TRUE(pq_rep.commutators_ok && mq_rep.commutators_ok);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1u + 3u + 16u + 125u + 1296u);
}

TEST(SuperdenseTest, NonHubSenderAndPerEdgeSqueezing) {
  Topology topo = star_topology({"A", "B", "C", "D"}, 1.0);
  topo.sender = "C";
  topo.edges[2].r = 0.3;  // A-D
  const auto [pq, mq] = superdense_conat(topo);
  EXPECT_EQ(pq.sender(), "C");
  const auto rep = with_predictions(check_definition(pq), predicted_epsilons(pq));
  ASSERT_TRUE(rep.pass.has_value());
  EXPECT_TRUE(*rep.pass);
  const double e1 = 2 * std::exp(-2.0);
  const double e3 = 2 * std::exp(-0.6);
  // receivers A, B, D
  EXPECT_NEAR(rep.epsilons[0], e1, 1e-12);
  EXPECT_NEAR(rep.epsilons[1], 2 * e1, 1e-12);
  EXPECT_NEAR(rep.epsilons[2], e1 + e3, 1e-12);
  EXPECT_NEAR(rep.epsilons[3], 2 * e1 + e3, 1e-12);
  EXPECT_NEAR(check_definition(mq).epsilons.back(), 0.0, 1e-12);
}

TEST(SuperdenseTest, PruningIsHarmless) {
  const Topology topo = chain_topology({"A", "B", "C", "D", "E"}, 1.3);
  const SuperdenseLayout layout = superdense_program(topo);
  const QuadratureRegister pruned = run_symbolic(layout.program);
  const QuadratureRegister exact = run_symbolic(layout.program, 1.0, 0.0);
  ASSERT_EQ(pruned.live_modes(), exact.live_modes());
  for (ModeId k : exact.live_modes()) {
    for (Quadrature q : {X, P}) {
      LinearForm diff = pruned.form(k, q) - exact.form(k, q);
      for (const auto& [label, c] : diff.terms()) EXPECT_LT(std::abs(c), 1e-10) << to_string(label);
    }
  }
  EXPECT_TRUE(symplectic_check(exact).ok);
}

TEST(TopologyTest, PathLengths) {
  EXPECT_EQ(validate_topology(chain_topology({"A", "B", "C"})).path_length, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(validate_topology(star_topology({"A", "B", "C"})).path_length, (std::vector<int>{0, 1, 1}));
}

TEST(TopologyTest, DisconnectedNamesComponent) {
  Topology topo{{"A", "B", "C", "D"}, "A", {{"A", "B", std::nullopt}, {"C", "D", std::nullopt}}, 1.0};
  const TopologyReport rep = validate_topology(topo);
  EXPECT_FALSE(rep.valid);
  EXPECT_FALSE(rep.connected);
  ASSERT_EQ(rep.components.size(), 2u);
  EXPECT_EQ(rep.components[1], (std::vector<std::string>{"C", "D"}));
  ASSERT_FALSE(rep.errors.empty());
  EXPECT_NE(rep.errors.back().find("{C,D}"), std::string::npos);
  try {
    superdense_conat(topo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Topology);
  }
}

TEST(TopologyTest, CycleRejected) {
  Topology topo = chain_topology({"A", "B", "C"});
  topo.edges.push_back({"C", "A", std::nullopt});
  const TopologyReport rep = validate_topology(topo);
  EXPECT_TRUE(rep.connected);
  EXPECT_FALSE(rep.is_tree);
  EXPECT_FALSE(rep.valid);
  EXPECT_NE(rep.errors.back().find("cycle"), std::string::npos);
  EXPECT_THROW(superdense_program(topo), Error);
}

TEST(TopologyTest, UnknownSenderIsInvalidParameter) {
  Topology topo = chain_topology({"A", "B", "C"});
  topo.sender = "Q";
  try {
    superdense_conat(topo);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParameter);
  }
}

TEST(TopologyTest, JsonRoundTrip) {
  Topology topo = chain_topology({"A", "B", "C"}, 0.8);
  topo.edges[1].r = 1.2;
  EXPECT_EQ(topology_from_json(topology_to_json(topo)), topo);
  EXPECT_THROW(topology_from_json(nlohmann::json::parse(R"({"parties": ["A"]})")), Error);
  EXPECT_THROW(topology_from_json(nlohmann::json::parse(R"({"parties": ["A","B"], "sender": "A", "edges": [["A"]]})")),
               Error);
}

TEST(TopologyTest, BundledFilesLoad) {
  const std::string dir = CONAT_DATA_DIR;
  const Topology chain = load_topology(dir + "/topologies/chain3.json");
  const Topology star = load_topology(dir + "/topologies/star3.json");
  EXPECT_TRUE(validate_topology(chain).valid);
  EXPECT_TRUE(validate_topology(star).valid);
  EXPECT_EQ(validate_topology(chain).path_length, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(validate_topology(star).path_length, (std::vector<int>{0, 1, 1}));
  EXPECT_TRUE(validate_topology(load_topology(dir + "/topologies/star-n.json")).valid);
  EXPECT_THROW(load_topology(dir + "/topologies/missing.json"), Error);
}

}  // namespace
}  // namespace conat
