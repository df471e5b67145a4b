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

// Executable channel definitions: noise variances (epsilons), noise means and
// commutators of a ChannelOutput, closed-form predictions, and three-way
// agreement between the symbolic engine, the covariance bridge and
// Monte-Carlo sampling.
//
// For a PQ channel with sender A and other receivers B, C, ..., N:
//   eps_i = Var(x_i' - ref)          for each non-sender receiver i,
//   eps_n = Var(p_A' - p_A + sum_i p_i'),
// where ref is the sender's output x_A' (sender-output-referenced) or the
// input x_A (input-referenced). MQ swaps x and p.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "conat/circuit.hpp"
#include "conat/error.hpp"
#include "conat/gaussian.hpp"
#include "conat/heisenberg.hpp"
#include "conat/protocols.hpp"
#include "conat/topology.hpp"

namespace conat {

enum class Reference { SenderOutput, Input };

constexpr const char* to_string(Reference ref) {
  return ref == Reference::SenderOutput ? "sender-output-referenced" : "input-referenced";
}

/// One term of a quadrature combination: either a program mode's current
/// quadrature or an input mode's initial quadrature (1-based input number).
struct Term {
  enum class Source { Output, Input };
  Source source = Source::Output;
  std::size_t id = 0;
  Quadrature quadrature = Quadrature::X;
  double coefficient = 1.0;
};

struct Combination {
  std::string name;
  std::vector<Term> terms;
};

inline LinearForm to_form(const Combination& c, const QuadratureRegister& reg) {
  LinearForm form;
  for (const auto& t : c.terms) {
    if (t.source == Term::Source::Output) {
      form.add_scaled(reg.form(t.id, t.quadrature), t.coefficient);
    } else {
      form.add_scaled(LinearForm(BasisLabel{LabelKind::Input, static_cast<int>(t.id), t.quadrature}),
                      t.coefficient);
    }
  }
  form.prune(reg.prune_threshold());
  return form;
}

/// Coefficient vector over a state laid out as `modes` (x, p interleaved)
/// followed by the initial quadratures of every input.
inline Eigen::VectorXd to_vector(const Combination& c, const std::vector<ModeId>& modes, std::size_t n_inputs) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * modes.size() + 2 * n_inputs));
  for (const auto& t : c.terms) {
    std::size_t idx = 0;
    if (t.source == Term::Source::Output) {
      auto it = std::find(modes.begin(), modes.end(), t.id);
      require(it != modes.end(), ErrorCode::StaleMode, "combination refers to a measured mode");
      idx = GaussianState::index(static_cast<std::size_t>(it - modes.begin()), t.quadrature);
    } else {
      require(t.id >= 1 && t.id <= n_inputs, ErrorCode::InvalidParameter, "input number out of range");
      idx = 2 * modes.size() + 2 * (t.id - 1) + (t.quadrature == Quadrature::P ? 1 : 0);
    }
    v(static_cast<Eigen::Index>(idx)) += t.coefficient;
  }
  return v;
}

/// eps_1 .. eps_{n-1} (per non-sender receiver) then the collective eps_n.
inline std::vector<Combination> noise_combinations(const ChannelOutput& out, Reference ref) {
  const Quadrature copied = out.copied();
  const Quadrature shared = out.shared();
  const auto input = static_cast<std::size_t>(out.input_number());
  std::vector<Combination> combos;
  for (std::size_t i = 1; i < out.parties.size(); ++i) {
    Combination c{"eps" + std::to_string(i), {{Term::Source::Output, out.receiver_modes[i], copied, 1.0}}};
    if (ref == Reference::SenderOutput) {
      c.terms.push_back({Term::Source::Output, out.sender_mode(), copied, -1.0});
    } else {
      c.terms.push_back({Term::Source::Input, input, copied, -1.0});
    }
    combos.push_back(std::move(c));
  }
  Combination collective{"eps" + std::to_string(out.parties.size()), {}};
  for (std::size_t i = 0; i < out.parties.size(); ++i) {
    collective.terms.push_back({Term::Source::Output, out.receiver_modes[i], shared, 1.0});
  }
  collective.terms.push_back({Term::Source::Input, input, shared, -1.0});
  combos.push_back(std::move(collective));
  return combos;
}

struct EpsilonReport {
  ChannelKind kind = ChannelKind::PQ;
  std::string sender;
  std::vector<std::string> receivers;  // non-sender receivers, eps order
  std::vector<double> epsilons;        // sender-output-referenced
  std::vector<double> epsilons_input_referenced;
  std::vector<double> means;  // symbolic noise means (0 when input-free)
  std::vector<bool> input_free;
  double mean_tolerance = 1e-9;
  std::vector<double> commutators;  // Omega(x_k', p_k') per receiver, sender first
  double commutator_max_deviation = 0.0;
  bool commutators_ok = true;
  std::optional<std::vector<double>> predicted;
  double tolerance = 1e-12;
  std::optional<bool> pass;
};

namespace detail {

/// Variance of a combination in the exact engine; +inf if it still depends
/// on the input (the bound then fails for some input state).
inline double exact_variance(const QuadratureRegister& reg, const LinearForm& form) {
  if (form.contains_input()) return std::numeric_limits<double>::infinity();
  return variance_of(reg, form);
}

}  // namespace detail

inline EpsilonReport check_definition(const ChannelOutput& out) {
  EpsilonReport report;
  report.kind = out.kind;
  report.sender = out.sender();
  for (std::size_t i = 1; i < out.parties.size(); ++i) report.receivers.push_back(out.parties[i]);

  for (const auto& c : noise_combinations(out, Reference::SenderOutput)) {
    const LinearForm f = to_form(c, out.reg);
    report.epsilons.push_back(detail::exact_variance(out.reg, f));
    report.input_free.push_back(!f.contains_input());
    report.means.push_back(f.contains_input() ? std::numeric_limits<double>::quiet_NaN() : 0.0);
  }
  for (const auto& c : noise_combinations(out, Reference::Input)) {
    report.epsilons_input_referenced.push_back(detail::exact_variance(out.reg, to_form(c, out.reg)));
  }

  for (std::size_t a = 0; a < out.receiver_modes.size(); ++a) {
    const ModeId ma = out.receiver_modes[a];
    for (std::size_t b = 0; b < out.receiver_modes.size(); ++b) {
      const ModeId mb = out.receiver_modes[b];
      const double xp = symplectic_form(out.reg.x(ma), out.reg.p(mb));
      if (a == b) report.commutators.push_back(xp);
      double dev = std::abs(xp - (a == b ? 1.0 : 0.0));
      if (b > a) {
        dev = std::max({dev, std::abs(symplectic_form(out.reg.x(ma), out.reg.x(mb))),
                        std::abs(symplectic_form(out.reg.p(ma), out.reg.p(mb)))});
      }
      report.commutator_max_deviation = std::max(report.commutator_max_deviation, dev);
    }
  }
  report.commutators_ok = report.commutator_max_deviation <= 1e-9;
  return report;
}

inline EpsilonReport check_pq_definition(const ChannelOutput& out) {
  require(out.kind == ChannelKind::PQ, ErrorCode::InvalidParameter, "expected a PQ channel");
  return check_definition(out);
}

inline EpsilonReport check_mq_definition(const ChannelOutput& out) {
  require(out.kind == ChannelKind::MQ, ErrorCode::InvalidParameter, "expected an MQ channel");
  return check_definition(out);
}

/// Closed-form epsilons in vacuum units times vacuum_variance.
///
/// Feed-forward construction: 2e^{-2r} for each non-sender receiver and
/// (n+1)e^{-2r} + 2(1-eta)/eta collectively. Superdense construction: a
/// receiver at hop distance d accumulates 2e^{-2r} per edge on its path; the
/// PQ collective noise is 2e^{-2r} per edge and the MQ collective noise is 0.
inline std::vector<double> predicted_epsilons(Method method, ChannelKind kind, int n, double r, double eta,
                                              const std::optional<Topology>& topology = std::nullopt,
                                              double vacuum_variance = 1.0) {
  std::vector<double> eps;
  if (method == Method::Ccaecc) {
    require(n >= 2, ErrorCode::InvalidParameter, "the channel needs n >= 2 receivers");
    require(eta > 0.0 && eta <= 1.0, ErrorCode::InvalidParameter, "detector efficiency must lie in (0, 1]");
    const double squeezed = std::exp(-2.0 * r);
    eps.assign(static_cast<std::size_t>(n - 1), 2.0 * squeezed * vacuum_variance);
    eps.push_back(((n + 1) * squeezed + 2.0 * (1.0 - eta) / eta) * vacuum_variance);
    return eps;
  }

  require(topology.has_value(), ErrorCode::InvalidParameter, "superdense prediction needs a topology");
  const Topology& topo = *topology;
  const TopologyReport report = validate_topology(topo);
  require(report.valid, ErrorCode::Topology, "topology is not a tree containing the sender");

  // accumulated path noise from the sender, by breadth-first search
  const std::size_t np = topo.parties.size();
  std::vector<double> path(np, -1.0);
  std::size_t sender = 0;
  for (std::size_t i = 0; i < np; ++i) {
    if (topo.parties[i] == topo.sender) sender = i;
  }
  path[sender] = 0.0;
  std::queue<std::size_t> queue;
  queue.push(sender);
  double collective = 0.0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop();
    for (std::size_t e = 0; e < topo.edges.size(); ++e) {
      const auto& edge = topo.edges[e];
      std::size_t v = np;
      if (edge.a == topo.parties[u]) v = static_cast<std::size_t>(std::find(topo.parties.begin(), topo.parties.end(), edge.b) - topo.parties.begin());
      if (edge.b == topo.parties[u]) v = static_cast<std::size_t>(std::find(topo.parties.begin(), topo.parties.end(), edge.a) - topo.parties.begin());
      if (v >= np || path[v] >= 0.0) continue;
      const double edge_noise = 2.0 * std::exp(-2.0 * topo.edge_r(e)) * vacuum_variance;
      path[v] = path[u] + edge_noise;
      collective += edge_noise;
      queue.push(v);
    }
  }
  for (std::size_t i = 0; i < np; ++i) {
    if (i != sender) eps.push_back(path[i]);
  }
  eps.push_back(kind == ChannelKind::PQ ? collective : 0.0);
  return eps;
}

inline std::vector<double> predicted_epsilons(const ChannelOutput& out) {
  return predicted_epsilons(out.meta.method, out.kind, out.meta.n, out.meta.r, out.meta.eta, out.meta.topology,
                            out.meta.vacuum_variance);
}

/// Attaches predictions; pass requires every sender-output-referenced eps
/// within `tolerance`, input-free noise forms and canonical commutators.
inline EpsilonReport with_predictions(EpsilonReport report, std::vector<double> predicted,
                                      double tolerance = 1e-12) {
  bool pass = predicted.size() == report.epsilons.size() && report.commutators_ok;
  for (std::size_t i = 0; pass && i < predicted.size(); ++i) {
    pass = report.input_free[i] && std::abs(report.epsilons[i] - predicted[i]) <= tolerance;
  }
  report.predicted = std::move(predicted);
  report.tolerance = tolerance;
  report.pass = pass;
  return report;
}

/// Coherent input states with fixed nonzero means, one per program input.
inline GaussianState default_input_state(const Program& program, double vacuum_variance = 1.0) {
  static constexpr double kMeans[][2] = {{1.5, -0.5}, {-0.8, 0.3}, {0.4, 1.1}, {-1.2, -0.7}};
  const std::size_t n = program.input_count();
  require(n >= 1, ErrorCode::InvalidParameter, "program has no input mode");
  GaussianState state = coherent(kMeans[0][0], kMeans[0][1], vacuum_variance);
  for (std::size_t i = 1; i < n; ++i) {
    state = direct_sum(state, coherent(kMeans[i % 4][0], kMeans[i % 4][1], vacuum_variance));
  }
  return state;
}

struct AgreementReport {
  std::vector<std::string> labels;
  std::vector<double> symbolic;
  std::vector<double> bridge;
  std::vector<double> monte_carlo;
  std::vector<double> standard_error;
  std::vector<double> mc_means;
  std::vector<double> mc_mean_standard_error;
  double max_bridge_deviation = 0.0;
  bool bridge_agrees = false;
  bool monte_carlo_agrees = false;
  bool means_agree = false;
  bool agree = false;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string rng = Rng::kName;
};

/// Moments of every combination over `trials` Monte-Carlo runs of `program`.
inline std::vector<SampleMoments> monte_carlo_moments(const Program& program, const GaussianState& input_state,
                                                      const std::vector<Combination>& combos, std::size_t trials,
                                                      std::uint64_t seed) {
  GaussianRunner runner(program, input_state);
  std::vector<Eigen::VectorXd> weights;
  for (const auto& c : combos) weights.push_back(to_vector(c, runner.final_modes(), program.input_count()));
  auto rows = run_trials<std::vector<double>>(trials, seed, [&](std::size_t, Rng& rng) {
    const Eigen::VectorXd z = runner.sample(rng);
    std::vector<double> values;
    values.reserve(weights.size());
    for (const auto& w : weights) values.push_back(w.dot(z));
    return values;
  });
  std::vector<SampleMoments> moments;
  std::vector<double> column(trials);
  for (std::size_t k = 0; k < combos.size(); ++k) {
    for (std::size_t t = 0; t < trials; ++t) column[t] = rows[t][k];
    moments.push_back(sample_moments(column));
  }
  return moments;
}

/// Symbolic eps (exact) vs covariance-bridge eps (within 1e-9) vs
/// Monte-Carlo eps (within 3 standard errors), in both reference
/// conventions. The Monte-Carlo path re-executes out.program; the other two
/// read out.reg.
inline AgreementReport cross_validate(const ChannelOutput& out, std::size_t trials, std::uint64_t seed,
                                      std::optional<GaussianState> input_state = std::nullopt) {
  require(trials >= 1000, ErrorCode::InvalidParameter, "cross validation needs at least 1000 trials");
  const GaussianState input = input_state ? *input_state : default_input_state(out.program, out.meta.vacuum_variance);

  std::vector<Combination> combos = noise_combinations(out, Reference::SenderOutput);
  const std::string collective = combos.back().name;
  for (auto c : noise_combinations(out, Reference::Input)) {
    if (c.name == collective) continue;  // collective eps is the same in both conventions
    c.name += "_input";
    combos.push_back(std::move(c));
  }

  AgreementReport report;
  report.trials = trials;
  report.seed = seed;

  const BasisMoments exact(out.reg, input);
  const GaussianState bridged = from_heisenberg(out.reg, input, true);
  const auto live = out.reg.live_modes();
  for (const auto& c : combos) {
    report.labels.push_back(c.name);
    const LinearForm f = to_form(c, out.reg);
    report.symbolic.push_back(f.contains_input() ? exact.variance(f) : variance_of(out.reg, f));
    const Eigen::VectorXd w = to_vector(c, live, static_cast<std::size_t>(out.reg.input_count()));
    report.bridge.push_back(w.dot(bridged.cov() * w));
  }

  const auto moments = monte_carlo_moments(out.program, input, combos, trials, seed);
  report.bridge_agrees = true;
  report.monte_carlo_agrees = true;
  report.means_agree = true;
  for (std::size_t k = 0; k < combos.size(); ++k) {
    const double dev = std::abs(report.bridge[k] - report.symbolic[k]);
    report.max_bridge_deviation = std::max(report.max_bridge_deviation, dev);
    if (!(dev <= 1e-9)) report.bridge_agrees = false;
    const auto& m = moments[k];
    report.monte_carlo.push_back(m.variance);
    report.standard_error.push_back(m.variance_std_error);
    report.mc_means.push_back(m.mean);
    report.mc_mean_standard_error.push_back(m.mean_std_error);
    if (!(std::abs(m.variance - report.symbolic[k]) <= 3.0 * m.variance_std_error + 1e-9)) {
      report.monte_carlo_agrees = false;
    }
    if (!(std::abs(m.mean) <= 3.0 * m.mean_std_error + 1e-9)) report.means_agree = false;
  }
  report.agree = report.bridge_agrees && report.monte_carlo_agrees && report.means_agree;
  return report;
}

}  // namespace conat
