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

// Entanglement resources and the two multiparty coherent-channel
// constructions: homodyne feed-forward over a GHZ resource, and QND
// superdense coding over a tree of EPR pairs.

#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "conat/circuit.hpp"
#include "conat/error.hpp"
#include "conat/gaussian.hpp"
#include "conat/heisenberg.hpp"
#include "conat/topology.hpp"

namespace conat {

/// PQ copies the position quadrature to every receiver, MQ the momentum.
enum class ChannelKind { PQ, MQ };
enum class Method { Ccaecc, Superdense };

constexpr const char* to_string(ChannelKind kind) { return kind == ChannelKind::PQ ? "PQ" : "MQ"; }
constexpr const char* to_string(Method method) { return method == Method::Ccaecc ? "ccaecc" : "superdense"; }

/// Orthogonal Helmert-pattern mixing. Column 0 is the uniform vector; column
/// j >= 1 is +sqrt((n-j)/(n-j+1)) on row j-1 and -1/sqrt((n-j)(n-j+1)) on
/// rows j..n-1.
inline std::vector<std::vector<double>> helmert_mixing(std::size_t n) {
  require(n >= 1, ErrorCode::InvalidParameter, "mixing needs at least one mode");
  std::vector<std::vector<double>> o(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) o[i][0] = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 1; j < n; ++j) {
    const double rest = static_cast<double>(n - j);
    o[j - 1][j] = std::sqrt(rest / (rest + 1.0));
    for (std::size_t i = j; i < n; ++i) o[i][j] = -1.0 / std::sqrt(rest * (rest + 1.0));
  }
  return o;
}

/// Appends an N-mode GHZ resource: one x-antisqueezed and N-1 x-squeezed
/// vacua mixed by the Helmert pattern. The PQ resource has small total
/// momentum and small relative positions; the MQ resource is its Fourier
/// image (small total position, small relative momenta).
inline std::vector<ModeId> append_ghz(Program& program, const std::vector<std::string>& names, double r,
                                      ChannelKind variant = ChannelKind::PQ) {
  require(names.size() >= 2, ErrorCode::InvalidParameter, "GHZ resource needs at least 2 modes");
  require(r >= 0.0 && std::isfinite(r), ErrorCode::InvalidParameter, "squeezing r must be finite and >= 0");
  std::vector<ModeId> modes;
  for (std::size_t k = 0; k < names.size(); ++k) {
    modes.push_back(program.add_vacuum(names[k], std::exp(k == 0 ? r : -r)));
  }
  program.append(PassiveOp{modes, helmert_mixing(names.size())});
  if (variant == ChannelKind::MQ) {
    for (ModeId m : modes) program.append(FourierOp{m});
  }
  return modes;
}

inline std::vector<std::string> numbered_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= n; ++k) names.push_back(std::to_string(k));
  return names;
}

inline QuadratureRegister prepare_ghz(int n, double r, double vacuum_variance = 1.0) {
  require(n >= 2, ErrorCode::InvalidParameter, "GHZ resource needs N >= 2");
  Program program;
  append_ghz(program, numbered_names(static_cast<std::size_t>(n)), r, ChannelKind::PQ);
  return run_symbolic(program, vacuum_variance);
}

inline QuadratureRegister prepare_ghz_mq_variant(int n, double r, double vacuum_variance = 1.0) {
  require(n >= 2, ErrorCode::InvalidParameter, "GHZ resource needs N >= 2");
  Program program;
  append_ghz(program, numbered_names(static_cast<std::size_t>(n)), r, ChannelKind::MQ);
  return run_symbolic(program, vacuum_variance);
}

inline QuadratureRegister prepare_epr(double r, double vacuum_variance = 1.0) {
  return prepare_ghz(2, r, vacuum_variance);
}

/// Covariance-engine twin of prepare_ghz, built from squeezed vacua and gates.
inline GaussianState prepare_ghz_state(int n, double r, ChannelKind variant = ChannelKind::PQ,
                                       double vacuum_variance = 1.0) {
  require(n >= 2, ErrorCode::InvalidParameter, "GHZ resource needs N >= 2");
  require(r >= 0.0 && std::isfinite(r), ErrorCode::InvalidParameter, "squeezing r must be finite and >= 0");
  GaussianState state = squeezed_vacuum(r, Quadrature::P, vacuum_variance);
  for (int k = 1; k < n; ++k) state = direct_sum(state, squeezed_vacuum(r, Quadrature::X, vacuum_variance));
  std::vector<std::size_t> modes;
  for (int k = 0; k < n; ++k) modes.push_back(static_cast<std::size_t>(k));
  state = passive(state, modes, helmert_mixing(static_cast<std::size_t>(n)));
  if (variant == ChannelKind::MQ) {
    for (std::size_t k : modes) state = fourier(state, k);
  }
  return state;
}

inline GaussianState prepare_epr_state(double r, double vacuum_variance = 1.0) {
  return prepare_ghz_state(2, r, ChannelKind::PQ, vacuum_variance);
}

struct ChannelMetadata {
  Method method = Method::Ccaecc;
  int n = 0;
  double r = 0.0;
  double eta = 1.0;
  double vacuum_variance = 1.0;
  std::optional<Topology> topology;

  bool operator==(const ChannelMetadata&) const = default;
};

/// Output of one channel construction: the program that realises it, its
/// exact Heisenberg image, and which surviving mode each receiver holds.
struct ChannelOutput {
  ChannelKind kind = ChannelKind::PQ;
  ChannelMetadata meta;
  std::vector<std::string> parties;    // receivers; the sender comes first
  std::vector<ModeId> receiver_modes;  // aligned with parties
  ModeId input_mode = 0;               // the transmitted input mode
  Program program;
  QuadratureRegister reg;

  const std::string& sender() const { return parties.front(); }
  ModeId sender_mode() const { return receiver_modes.front(); }
  int input_number() const { return program.input_number(input_mode); }

  /// Quadrature copied to every receiver.
  Quadrature copied() const { return kind == ChannelKind::PQ ? Quadrature::X : Quadrature::P; }
  /// Quadrature whose sum over receivers carries the sender's conjugate.
  Quadrature shared() const { return conjugate(copied()); }

  std::size_t party_index(const std::string& party) const {
    for (std::size_t i = 0; i < parties.size(); ++i) {
      if (parties[i] == party) return i;
    }
    throw Error(ErrorCode::InvalidParameter, "'" + party + "' is not a receiver of this channel");
  }
  ModeId mode_of(const std::string& party) const { return receiver_modes[party_index(party)]; }
};

/// Receiver names for the feed-forward construction: A (sender), B, C, ...
inline std::string party_name(std::size_t i) {
  if (i < 26) return std::string(1, static_cast<char>('A' + i));
  return "R" + std::to_string(i + 1);
}

/// Homodyne feed-forward construction over an (n+1)-mode GHZ resource. The
/// sender holds input A and resource modes A1, A2; receiver k holds one
/// resource mode. A and A1 meet on a balanced beam splitter; the difference
/// port is measured in the copied quadrature and fed forward with gain
/// sqrt(2) to every receiver, the sum port in the conjugate quadrature and
/// fed forward to A2 only.
inline ChannelOutput ccaecc(ChannelKind kind, int n, double r, double eta, double vacuum_variance = 1.0) {
  require(n >= 2, ErrorCode::InvalidParameter, "the channel needs n >= 2 receivers");
  require(r >= 0.0 && std::isfinite(r), ErrorCode::InvalidParameter, "squeezing r must be finite and >= 0");
  require(eta > 0.0 && eta <= 1.0, ErrorCode::InvalidParameter, "detector efficiency must lie in (0, 1]");

  ChannelOutput out;
  out.kind = kind;
  out.meta = {Method::Ccaecc, n, r, eta, vacuum_variance, std::nullopt};
  Program& program = out.program;

  const ModeId input = program.add_input("A");
  std::vector<std::string> names{"A1", "A2"};
  for (int k = 1; k < n; ++k) names.push_back(party_name(static_cast<std::size_t>(k)));
  const auto ghz = append_ghz(program, names, r, kind);
  const ModeId a1 = ghz[0];
  const ModeId a2 = ghz[1];

  program.append(BeamSplitterOp{input, a1, 0.5});  // input -> difference port, a1 -> sum port

  const Quadrature copied = kind == ChannelKind::PQ ? Quadrature::X : Quadrature::P;
  const Quadrature shared = conjugate(copied);
  const double gain = std::sqrt(2.0);
  std::vector<FeedForward> to_all{{a2, copied, gain}};
  for (std::size_t k = 2; k < ghz.size(); ++k) to_all.push_back({ghz[k], copied, gain});
  program.append(HomodyneOp{input, copied, to_all, eta});
  program.append(HomodyneOp{a1, shared, {{a2, shared, gain}}, eta});

  out.input_mode = input;
  out.parties.push_back("A");
  out.receiver_modes.push_back(a2);
  for (int k = 1; k < n; ++k) {
    out.parties.push_back(party_name(static_cast<std::size_t>(k)));
    out.receiver_modes.push_back(ghz[static_cast<std::size_t>(k) + 1]);
  }
  out.reg = run_symbolic(program, vacuum_variance);
  return out;
}

inline ChannelOutput ccaecc_pq(int n, double r, double eta, double vacuum_variance = 1.0) {
  return ccaecc(ChannelKind::PQ, n, r, eta, vacuum_variance);
}

inline ChannelOutput ccaecc_mq(int n, double r, double eta, double vacuum_variance = 1.0) {
  return ccaecc(ChannelKind::MQ, n, r, eta, vacuum_variance);
}

/// Mode bookkeeping of the superdense construction.
struct SuperdenseLayout {
  Program program;
  ModeId mq_payload = 0;  // mode 1
  ModeId pq_payload = 1;  // mode 2
  /// Per party (topology order): the mode carrying its MQ and PQ outputs.
  std::vector<ModeId> mq_mode;
  std::vector<ModeId> pq_mode;
};

/// Builds the QND program over a tree of EPR pairs.
///
/// Payloads are modes 1 (MQ) and 2 (PQ). Edge e contributes modes 3+2e
/// (the half nearer the sender) and 4+2e. Parties act in breadth-first order
/// from the sender:
///   receiving a half m over edge (m, h): phase-pi on h, then QND(m, h);
///       m now carries the MQ output and h the PQ output;
///   for each edge toward a child with local half c:
///       QND(pq, c) then QND-phase-adjust(mq, c), and c is handed over.
///
/// With `symbolic_resources` the EPR halves are left as bare symbolic input
/// modes, so output forms read directly in terms of modes 1..2+2E.
inline SuperdenseLayout superdense_program(const Topology& topo, bool symbolic_resources = false) {
  require(topo.has_party(topo.sender), ErrorCode::InvalidParameter,
          "sender '" + topo.sender + "' is not in the topology");
  const TopologyReport report = validate_topology(topo);
  if (!report.valid) {
    std::string msg;
    for (const auto& e : report.errors) msg += (msg.empty() ? "" : "; ") + e;
    throw Error(ErrorCode::Topology, msg);
  }
  const std::size_t n = topo.parties.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[topo.parties[i]] = i;
  const std::size_t sender = index.at(topo.sender);
  const auto& dist = report.path_length;

  SuperdenseLayout layout;
  Program& program = layout.program;
  layout.mq_payload = program.add_input("1");
  layout.pq_payload = program.add_input("2");

  struct Oriented {
    std::size_t parent, child;
    ModeId near_half, far_half;
  };
  std::vector<Oriented> edges;
  for (std::size_t e = 0; e < topo.edges.size(); ++e) {
    std::size_t a = index.at(topo.edges[e].a);
    std::size_t b = index.at(topo.edges[e].b);
    if (dist[a] > dist[b]) std::swap(a, b);
    const std::string near_name = std::to_string(3 + 2 * e);
    const std::string far_name = std::to_string(4 + 2 * e);
    ModeId near_half, far_half;
    if (symbolic_resources) {
      near_half = program.add_input(near_name);
      far_half = program.add_input(far_name);
    } else {
      const double r = topo.edge_r(e);
      near_half = program.add_vacuum(near_name, std::exp(r));
      far_half = program.add_vacuum(far_name, std::exp(-r));
    }
    edges.push_back({a, b, near_half, far_half});
  }
  if (!symbolic_resources) {
    for (const auto& e : edges) program.append(PassiveOp{{e.near_half, e.far_half}, helmert_mixing(2)});
  }

  layout.mq_mode.assign(n, 0);
  layout.pq_mode.assign(n, 0);
  layout.mq_mode[sender] = layout.mq_payload;
  layout.pq_mode[sender] = layout.pq_payload;

  std::vector<std::size_t> order;
  std::queue<std::size_t> queue;
  queue.push(sender);
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop();
    order.push_back(u);
    for (const auto& e : edges) {
      if (e.parent == u) queue.push(e.child);
    }
  }

  for (std::size_t u : order) {
    if (u != sender) {
      for (const auto& e : edges) {
        if (e.child != u) continue;
        program.append(PhasePiOp{e.far_half});
        program.append(QndOp{e.near_half, e.far_half});
        layout.mq_mode[u] = e.near_half;
        layout.pq_mode[u] = e.far_half;
      }
    }
    for (const auto& e : edges) {
      if (e.parent != u) continue;
      program.append(QndOp{layout.pq_mode[u], e.near_half});
      program.append(QndPhaseAdjustOp{layout.mq_mode[u], e.near_half});
    }
  }
  return layout;
}

/// Runs the superdense construction; returns the (PQ, MQ) channel pair.
inline std::pair<ChannelOutput, ChannelOutput> superdense_conat(const Topology& topo,
                                                               double vacuum_variance = 1.0) {
  SuperdenseLayout layout = superdense_program(topo, false);
  QuadratureRegister reg = run_symbolic(layout.program, vacuum_variance);

  std::vector<std::size_t> order{0};
  std::size_t sender = 0;
  for (std::size_t i = 0; i < topo.parties.size(); ++i) {
    if (topo.parties[i] == topo.sender) sender = i;
  }
  order[0] = sender;
  for (std::size_t i = 0; i < topo.parties.size(); ++i) {
    if (i != sender) order.push_back(i);
  }

  auto make = [&](ChannelKind kind) {
    ChannelOutput out;
    out.kind = kind;
    out.meta = {Method::Superdense, static_cast<int>(topo.parties.size()), topo.r, 1.0, vacuum_variance, topo};
    out.program = layout.program;
    out.reg = reg;
    out.input_mode = kind == ChannelKind::PQ ? layout.pq_payload : layout.mq_payload;
    const auto& modes = kind == ChannelKind::PQ ? layout.pq_mode : layout.mq_mode;
    for (std::size_t i : order) {
      out.parties.push_back(topo.parties[i]);
      out.receiver_modes.push_back(modes[i]);
    }
    return out;
  };
  return {make(ChannelKind::PQ), make(ChannelKind::MQ)};
}

}  // namespace conat
