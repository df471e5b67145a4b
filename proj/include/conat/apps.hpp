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

// Applications on top of a conat channel: multiparty-controlled
// teleportation and classical continuous-variable secret sharing. Both reduce
// to the same reconstruction: every cooperating party homodynes the shared
// quadrature of its output mode and the receiver adds the outcomes to its own
// shared quadrature.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conat/circuit.hpp"
#include "conat/error.hpp"
#include "conat/gaussian.hpp"
#include "conat/heisenberg.hpp"
#include "conat/protocols.hpp"

namespace conat {

/// Overlap fidelity of two coherent-state Gaussians with equal means whose
/// quadrature variances differ by (v_x, v_p), in units of the vacuum variance.
inline double coherent_fidelity(double v_x, double v_p, double vacuum_variance = 1.0) {
  return 2.0 / std::sqrt((2.0 + v_x / vacuum_variance) * (2.0 + v_p / vacuum_variance));
}

struct MonteCarloSummary {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string rng = Rng::kName;
  double v_x = 0.0;
  double v_p = 0.0;
  double v_x_std_error = 0.0;
  double v_p_std_error = 0.0;
  double fidelity = 0.0;
  double fidelity_std_error = 0.0;
  // receiver output mean minus the encoded mean
  double bias_x = 0.0;
  double bias_p = 0.0;
  double bias_x_std_error = 0.0;
  double bias_p_std_error = 0.0;
};

struct TeleportReport {
  ChannelKind kind = ChannelKind::PQ;
  std::string receiver;
  std::vector<std::string> controllers;  // parties whose outcomes reach the receiver
  std::vector<std::string> withheld;     // parties that measure but keep their outcome
  double eta_controllers = 1.0;
  double vacuum_variance = 1.0;
  double v_x = 0.0;  // Var(x_out - x_in), exact
  double v_p = 0.0;  // Var(p_out - p_in), exact
  double fidelity = 0.0;
  std::optional<MonteCarloSummary> monte_carlo;
};

struct TeleportOptions {
  std::optional<double> eta_controllers;  // defaults to the channel's eta
  std::vector<std::string> withheld;
  std::size_t trials = 0;  // 0 skips the Monte-Carlo path
  std::uint64_t seed = 1;
};

namespace detail {

struct Reconstruction {
  std::string receiver;
  std::vector<std::string> controllers;
  std::vector<std::string> withheld;
};

inline Reconstruction plan_reconstruction(const ChannelOutput& channel, const std::string& receiver,
                                          const std::vector<std::string>& withheld) {
  require(channel.party_index(receiver) != 0, ErrorCode::InvalidParameter,
          "the receiver must not be the sender ('" + receiver + "')");
  for (const auto& w : withheld) {
    require(channel.party_index(w) < channel.parties.size() && w != receiver, ErrorCode::InvalidParameter,
            "withheld party '" + w + "' must be a controller");
  }
  Reconstruction plan{receiver, {}, withheld};
  for (const auto& party : channel.parties) {
    if (party == receiver) continue;
    if (std::find(withheld.begin(), withheld.end(), party) != withheld.end()) continue;
    plan.controllers.push_back(party);
  }
  return plan;
}

/// Every non-receiver party measures the shared quadrature; only
/// controllers forward the outcome (gain 1), withheld parties use gain 0.
inline void append_reconstruction(Program& program, const ChannelOutput& channel, const Reconstruction& plan,
                                  double eta) {
  const Quadrature q = channel.shared();
  const ModeId target = channel.mode_of(plan.receiver);
  for (const auto& party : channel.parties) {
    if (party == plan.receiver) continue;
    const bool forwards = std::find(plan.controllers.begin(), plan.controllers.end(), party) != plan.controllers.end();
    std::vector<FeedForward> targets;
    if (forwards) targets.push_back({target, q, 1.0});
    program.append(HomodyneOp{channel.mode_of(party), q, std::move(targets), eta});
  }
}

struct ErrorProbe {
  ModeId mode = 0;
  int input = 1;
  double mean_x = 0.0;  // encoded input mean
  double mean_p = 0.0;
};

struct ProbeResult {
  double v_x = 0.0;
  double v_p = 0.0;
  std::optional<MonteCarloSummary> monte_carlo;
};

inline std::vector<ProbeResult> evaluate_probes(const Program& program, const GaussianState& input_state,
                                                const std::vector<ErrorProbe>& probes, std::size_t trials,
                                                std::uint64_t seed) {
  const double sigma2 = input_state.vacuum_variance();
  const QuadratureRegister reg = run_symbolic(program, sigma2);
  const BasisMoments moments(reg, input_state);
  std::vector<ProbeResult> results;
  for (const auto& probe : probes) {
    ProbeResult r;
    for (Quadrature q : {Quadrature::X, Quadrature::P}) {
      LinearForm error = reg.form(probe.mode, q);
      error.add_scaled(LinearForm(BasisLabel{LabelKind::Input, probe.input, q}), -1.0);
      error.prune(reg.prune_threshold());
      (q == Quadrature::X ? r.v_x : r.v_p) = moments.variance(error);
    }
    results.push_back(r);
  }
  if (trials == 0) return results;
  require(trials >= 2, ErrorCode::InvalidParameter, "Monte-Carlo needs at least 2 trials");

  const GaussianRunner runner(program, input_state);
  // per probe: x error, p error, x output, p output
  auto rows = run_trials<std::vector<double>>(trials, seed, [&](std::size_t, Rng& rng) {
    const Eigen::VectorXd z = runner.sample(rng);
    std::vector<double> values;
    for (const auto& probe : probes) {
      for (Quadrature q : {Quadrature::X, Quadrature::P}) {
        const double out = z(static_cast<Eigen::Index>(runner.final_index(probe.mode, q)));
        const double in = z(static_cast<Eigen::Index>(runner.reference_index(probe.input, q)));
        values.push_back(out - in);
      }
      for (Quadrature q : {Quadrature::X, Quadrature::P}) {
        values.push_back(z(static_cast<Eigen::Index>(runner.final_index(probe.mode, q))));
      }
    }
    return values;
  });
  std::vector<double> column(trials);
  auto moments_of = [&](std::size_t k) {
    for (std::size_t t = 0; t < trials; ++t) column[t] = rows[t][k];
    return sample_moments(column);
  };
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto ex = moments_of(4 * i);
    const auto ep = moments_of(4 * i + 1);
    const auto ox = moments_of(4 * i + 2);
    const auto op = moments_of(4 * i + 3);
    MonteCarloSummary mc;
    mc.trials = trials;
    mc.seed = seed;
    mc.v_x = ex.variance;
    mc.v_p = ep.variance;
    mc.v_x_std_error = ex.variance_std_error;
    mc.v_p_std_error = ep.variance_std_error;
    mc.fidelity = coherent_fidelity(mc.v_x, mc.v_p, sigma2);
    // first-order propagation of the variance errors
    const double dx = mc.fidelity / (2.0 * (2.0 * sigma2 + mc.v_x));
    const double dp = mc.fidelity / (2.0 * (2.0 * sigma2 + mc.v_p));
    mc.fidelity_std_error = std::hypot(dx * mc.v_x_std_error, dp * mc.v_p_std_error);
    mc.bias_x = ox.mean - probes[i].mean_x;
    mc.bias_p = op.mean - probes[i].mean_p;
    mc.bias_x_std_error = ox.mean_std_error;
    mc.bias_p_std_error = op.mean_std_error;
    results[i].monte_carlo = mc;
  }
  return results;
}

/// Coherent inputs for every program input; `means` is indexed by input
/// number - 1 and missing entries default to zero.
inline GaussianState coherent_inputs(const Program& program, const std::vector<std::pair<double, double>>& means,
                                     double vacuum_variance) {
  const std::size_t n = program.input_count();
  require(n >= 1, ErrorCode::InvalidParameter, "program has no input mode");
  auto mean_of = [&](std::size_t i) { return i < means.size() ? means[i] : std::pair<double, double>{0.0, 0.0}; };
  GaussianState state = coherent(mean_of(0).first, mean_of(0).second, vacuum_variance);
  for (std::size_t i = 1; i < n; ++i) state = direct_sum(state, coherent(mean_of(i).first, mean_of(i).second, vacuum_variance));
  return state;
}

inline TeleportReport make_report(const ChannelOutput& channel, const Reconstruction& plan, double eta,
                                  const ProbeResult& result) {
  TeleportReport report;
  report.kind = channel.kind;
  report.receiver = plan.receiver;
  report.controllers = plan.controllers;
  report.withheld = plan.withheld;
  report.eta_controllers = eta;
  report.vacuum_variance = channel.meta.vacuum_variance;
  report.v_x = result.v_x;
  report.v_p = result.v_p;
  report.fidelity = coherent_fidelity(result.v_x, result.v_p, channel.meta.vacuum_variance);
  report.monte_carlo = result.monte_carlo;
  return report;
}

inline double controller_eta(const ChannelOutput& channel, const std::optional<double>& eta) {
  const double value = eta.value_or(channel.meta.eta);
  require(value > 0.0 && value <= 1.0, ErrorCode::InvalidParameter, "controller efficiency must lie in (0, 1]");
  return value;
}

}  // namespace detail

/// Teleports a coherent state of mean (x0, p0) from the sender to
/// `receiver`; the other parties control the transfer by revealing their
/// shared-quadrature outcomes.
inline TeleportReport controlled_teleport(const ChannelOutput& channel, const std::string& receiver, double x0,
                                          double p0, const TeleportOptions& options = {}) {
  const auto plan = detail::plan_reconstruction(channel, receiver, options.withheld);
  const double eta = detail::controller_eta(channel, options.eta_controllers);
  Program program = channel.program;
  detail::append_reconstruction(program, channel, plan, eta);

  std::vector<std::pair<double, double>> means(program.input_count(), {0.0, 0.0});
  const int input = channel.input_number();
  means[static_cast<std::size_t>(input - 1)] = {x0, p0};
  const GaussianState state = detail::coherent_inputs(program, means, channel.meta.vacuum_variance);
  const auto results = detail::evaluate_probes(program, state, {{channel.mode_of(receiver), input, x0, p0}},
                                               options.trials, options.seed);
  return detail::make_report(channel, plan, eta, results.front());
}

/// Teleports a two-mode state through the PQ and MQ channels of a single
/// superdense run: PQ-side controllers reveal p, MQ-side controllers reveal x.
/// `means` holds (x, p) of input 1 then input 2; `input_state` overrides the
/// coherent default (it may be entangled). Returns (PQ report, MQ report).
inline std::pair<TeleportReport, TeleportReport> controlled_teleport_two_mode(
    const ChannelOutput& pq, const ChannelOutput& mq, const std::string& receiver, const std::array<double, 4>& means,
    const TeleportOptions& options = {}, const std::optional<GaussianState>& input_state = std::nullopt) {
  require(pq.kind == ChannelKind::PQ && mq.kind == ChannelKind::MQ, ErrorCode::InvalidParameter,
          "expected one PQ and one MQ channel");
  require(pq.program == mq.program && pq.parties == mq.parties, ErrorCode::InvalidParameter,
          "the PQ and MQ channels come from different runs");
  const auto plan_pq = detail::plan_reconstruction(pq, receiver, options.withheld);
  const auto plan_mq = detail::plan_reconstruction(mq, receiver, options.withheld);
  const double eta = detail::controller_eta(pq, options.eta_controllers);

  Program program = pq.program;
  detail::append_reconstruction(program, pq, plan_pq, eta);
  detail::append_reconstruction(program, mq, plan_mq, eta);

  require(program.input_count() == 2, ErrorCode::InvalidParameter, "two-mode teleportation needs two inputs");
  GaussianState state = input_state ? *input_state
                                    : detail::coherent_inputs(program, {{means[0], means[1]}, {means[2], means[3]}},
                                                              pq.meta.vacuum_variance);
  auto mean_of = [&](int input, int q) { return state.mean()(2 * (input - 1) + q); };
  const int in_pq = pq.input_number();
  const int in_mq = mq.input_number();
  const auto results = detail::evaluate_probes(
      program, state,
      {{pq.mode_of(receiver), in_pq, mean_of(in_pq, 0), mean_of(in_pq, 1)},
       {mq.mode_of(receiver), in_mq, mean_of(in_mq, 0), mean_of(in_mq, 1)}},
      options.trials, options.seed);
  return {detail::make_report(pq, plan_pq, eta, results[0]), detail::make_report(mq, plan_mq, eta, results[1])};
}

struct QssReport {
  ChannelKind kind = ChannelKind::PQ;
  std::string reconstructor;
  std::vector<std::string> coalition;  // parties revealing their outcomes
  std::vector<std::string> excluded;   // parties outside the coalition
  double secret_x = 0.0;
  double secret_p = 0.0;
  double v_x = 0.0;  // error variance relative to the encoded quadratures, exact
  double v_p = 0.0;
  std::optional<MonteCarloSummary> monte_carlo;
};

/// The sender encodes the secret (x0, p0) as the mean of a coherent input;
/// `reconstructor` estimates it from its output mode plus the outcomes of
/// `coalition`.
inline QssReport qss_classical(const ChannelOutput& channel, double x0, double p0, const std::string& reconstructor,
                               const std::vector<std::string>& coalition, std::size_t trials, std::uint64_t seed,
                               std::optional<double> eta_coalition = std::nullopt) {
  channel.party_index(reconstructor);
  for (const auto& member : coalition) {
    channel.party_index(member);
    require(member != reconstructor, ErrorCode::InvalidParameter,
            "the reconstructor '" + reconstructor + "' cannot be part of the coalition");
  }
  std::vector<std::string> excluded;
  for (const auto& party : channel.parties) {
    if (party == reconstructor) continue;
    if (std::find(coalition.begin(), coalition.end(), party) == coalition.end()) excluded.push_back(party);
  }
  TeleportOptions options{eta_coalition, excluded, trials, seed};
  const TeleportReport t = controlled_teleport(channel, reconstructor, x0, p0, options);

  QssReport report;
  report.kind = channel.kind;
  report.reconstructor = reconstructor;
  report.coalition = t.controllers;
  report.excluded = excluded;
  report.secret_x = x0;
  report.secret_p = p0;
  report.v_x = t.v_x;
  report.v_p = t.v_p;
  report.monte_carlo = t.monte_carlo;
  return report;
}

}  // namespace conat
