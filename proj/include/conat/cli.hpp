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

// Batch front-end. `run` parses a command line, executes one subcommand and
// writes a JSON document or CSV table. Exit codes: 0 success, 1 invalid
// arguments, 2 topology error, 3 verification failure.

#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "conat/apps.hpp"
#include "conat/error.hpp"
#include "conat/protocols.hpp"
#include "conat/serialize.hpp"
#include "conat/topology.hpp"
#include "conat/verify.hpp"

namespace conat::cli {

enum ExitCode : int { kSuccess = 0, kInvalidArguments = 1, kTopologyError = 2, kVerificationFailure = 3 };

struct RunConfig {
  std::string command;
  // channel
  std::string method = "ccaecc";
  std::string kind = "pq";
  int n = 3;
  int parties = 4;
  double r = std::numeric_limits<double>::quiet_NaN();  // NaN: not given
  double eta = 1.0;
  std::vector<std::string> topology;
  // engines and output
  std::string engine = "both";
  std::size_t trials = 100000;
  std::uint64_t seed = 1;
  std::string format = "json";
  std::string output;
  double vacuum_variance = 1.0;
  unsigned workers = 0;
  // applications
  std::string receiver;
  std::vector<std::string> drop_controller;
  double eta_controllers = std::numeric_limits<double>::quiet_NaN();
  double x0 = 0.0;
  double p0 = 0.0;
  bool two_mode = false;
  std::vector<std::string> coalition;
  std::string reconstructor;
  // sweep
  std::string param;
  double from = 0.0;
  double to = 0.0;
  int steps = 1;
  std::string over;

  bool r_given() const { return !std::isnan(r); }
  double r_or_default() const { return r_given() ? r : 1.0; }
};

inline Json optional_number(double v) { return std::isnan(v) ? Json(nullptr) : number(v); }

inline Json config_json(const RunConfig& c) {
  return {{"command", c.command},
          {"method", c.method},
          {"kind", c.kind},
          {"n", c.n},
          {"parties", c.parties},
          {"r", optional_number(c.r)},
          {"eta", number(c.eta)},
          {"topology", c.topology},
          {"engine", c.engine},
          {"trials", c.trials},
          {"seed", c.seed},
          {"format", c.format},
          {"vacuum_variance", number(c.vacuum_variance)},
          {"receiver", c.receiver},
          {"drop_controller", c.drop_controller},
          {"eta_controllers", optional_number(c.eta_controllers)},
          {"input_mean", {number(c.x0), number(c.p0)}},
          {"two_mode", c.two_mode},
          {"coalition", c.coalition},
          {"reconstructor", c.reconstructor},
          {"param", c.param},
          {"from", number(c.from)},
          {"to", number(c.to)},
          {"steps", c.steps},
          {"over", c.over}};
}

inline Json conventions_json(const RunConfig& c) {
  return {{"vacuum_variance", number(c.vacuum_variance)},
          {"quadrature_order", "x1,p1,...,xn,pn"},
          {"reference", to_string(Reference::SenderOutput)},
          {"symbolic_tolerance", 1e-12},
          {"bridge_tolerance", 1e-9},
          {"monte_carlo_tolerance", "3 standard errors"},
          {"prune_threshold", kDefaultPruneThreshold},
          {"rng", Rng::kName},
          {"significant_digits", kSignificantDigits}};
}

/// One verified channel: the unit of JSON records and CSV rows.
struct EpsilonRow {
  std::string method;
  std::string topology;
  std::string kind;
  std::string param;
  double value = std::numeric_limits<double>::quiet_NaN();
  int n = 0;
  double r = 0.0;
  double eta = 1.0;
  std::vector<std::string> parties;
  std::vector<double> measured;
  std::vector<double> predicted;
  std::vector<double> input_referenced;
  std::vector<double> means;
  std::vector<double> commutators;
  std::vector<double> monte_carlo;
  std::vector<double> standard_errors;
  bool pass = false;
  std::optional<AgreementReport> agreement;
};

inline ChannelKind parse_kind(const std::string& kind) { return kind == "mq" ? ChannelKind::MQ : ChannelKind::PQ; }

inline Topology topology_for(const std::string& path, const RunConfig& c) {
  Topology topo = load_topology(path);
  if (c.r_given()) {
    topo.r = c.r;
    for (auto& e : topo.edges) e.r.reset();
  }
  return topo;
}

inline EpsilonRow evaluate_channel(const ChannelOutput& out, const RunConfig& c) {
  EpsilonRow row;
  row.method = to_string(out.meta.method);
  row.kind = to_string(out.kind);
  row.n = out.meta.n;
  row.r = out.meta.r;
  row.eta = out.meta.eta;
  row.parties = out.parties;

  const EpsilonReport exact = with_predictions(check_definition(out), predicted_epsilons(out));
  row.predicted = *exact.predicted;
  row.commutators = exact.commutators;
  if (c.engine == "symbolic") {
    row.measured = exact.epsilons;
    row.input_referenced = exact.epsilons_input_referenced;
    row.means = exact.means;
    row.pass = *exact.pass;
    return row;
  }

  AgreementReport agreement = cross_validate(out, c.trials, c.seed);
  const std::size_t k = exact.epsilons.size();
  row.monte_carlo.assign(agreement.monte_carlo.begin(), agreement.monte_carlo.begin() + static_cast<long>(k));
  row.standard_errors.assign(agreement.standard_error.begin(), agreement.standard_error.begin() + static_cast<long>(k));
  if (c.engine == "gaussian") {
    row.measured = row.monte_carlo;
    row.input_referenced.assign(agreement.monte_carlo.begin() + static_cast<long>(k), agreement.monte_carlo.end());
    row.input_referenced.push_back(agreement.monte_carlo[k - 1]);
    row.means.assign(agreement.mc_means.begin(), agreement.mc_means.begin() + static_cast<long>(k));
    bool pass = exact.commutators_ok && agreement.means_agree;
    for (std::size_t i = 0; i < k; ++i) {
      pass = pass && std::abs(row.monte_carlo[i] - row.predicted[i]) <= 3.0 * row.standard_errors[i] + 1e-9;
    }
    row.pass = pass;
  } else {
    row.measured = exact.epsilons;
    row.input_referenced = exact.epsilons_input_referenced;
    row.means = exact.means;
    row.pass = *exact.pass && agreement.agree;
  }
  row.agreement = std::move(agreement);
  return row;
}

inline Json row_json(const EpsilonRow& row) {
  Json out = {{"method", row.method}, {"kind", row.kind}};
  if (!row.topology.empty()) out["topology"] = row.topology;
  if (!row.param.empty()) {
    out["param"] = row.param;
    out["value"] = number(row.value);
  }
  out["n"] = row.n;
  out["r"] = number(row.r);
  out["eta"] = number(row.eta);
  out["parties"] = row.parties;
  out["epsilons_measured"] = numbers(row.measured);
  out["epsilons_predicted"] = numbers(row.predicted);
  out["epsilons_input_referenced"] = numbers(row.input_referenced);
  out["means"] = numbers(row.means);
  out["commutators"] = numbers(row.commutators);
  out["pass"] = row.pass;
  out["cross_validation"] = row.agreement ? to_json(*row.agreement) : Json(nullptr);
  return out;
}

inline const char* kEpsilonCsvHeader =
    "index,command,method,topology,kind,param,value,n,r,eta,engine,trials,seed,vacuum_variance,"
    "epsilons_measured,epsilons_predicted,epsilons_input_referenced,means,commutators,"
    "epsilons_monte_carlo,standard_errors,pass";

inline std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ";" : "") + format_number(values[i]);
  return out;
}

inline std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ";" : "") + names[i];
  return out;
}

inline std::string csv_row(std::size_t index, const EpsilonRow& row, const RunConfig& c) {
  std::ostringstream s;
  s << index << ',' << c.command << ',' << row.method << ',' << row.topology << ',' << row.kind << ',' << row.param
    << ',' << (row.param.empty() ? "" : format_number(row.value)) << ',' << row.n << ',' << format_number(row.r)
    << ',' << format_number(row.eta) << ',' << c.engine << ',' << c.trials << ',' << c.seed << ','
    << format_number(c.vacuum_variance) << ',' << join_numbers(row.measured) << ','
    << join_numbers(row.predicted) << ',' << join_numbers(row.input_referenced) << ','
    << join_numbers(row.means) << ',' << join_numbers(row.commutators) << ',' << join_numbers(row.monte_carlo)
    << ',' << join_numbers(row.standard_errors) << ',' << (row.pass ? "true" : "false");
  return s.str();
}

struct Artifact {
  std::string text;
  bool pass = true;
};

inline Artifact epsilon_artifact(const RunConfig& c, const std::vector<EpsilonRow>& rows, bool keyed_by_kind) {
  Artifact a;
  for (const auto& row : rows) a.pass = a.pass && row.pass;
  if (c.format == "csv") {
    a.text = std::string(kEpsilonCsvHeader) + "\n";
    for (std::size_t i = 0; i < rows.size(); ++i) a.text += csv_row(i, rows[i], c) + "\n";
    return a;
  }
  Json doc = {{"config", config_json(c)}, {"conventions", conventions_json(c)}};
  if (c.command == "sweep") {
    Json list = Json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Json entry = {{"index", i}};
      entry.update(row_json(rows[i]));
      list.push_back(std::move(entry));
    }
    doc["rows"] = std::move(list);
    doc["pass"] = a.pass;
  } else if (keyed_by_kind) {
    Json channels = Json::object();
    for (const auto& row : rows) channels[row.kind == "PQ" ? "pq" : "mq"] = row_json(row);
    doc["channels"] = std::move(channels);
    doc["pass"] = a.pass;
  } else {
    doc.update(row_json(rows.front()));
  }
  a.text = doc.dump(2) + "\n";
  return a;
}

/// Rows for one configuration of a channel-producing command.
inline std::vector<EpsilonRow> channel_rows(const std::string& target, const RunConfig& c) {
  require(c.engine == "symbolic" || c.trials >= 1000, ErrorCode::InvalidParameter,
          "the gaussian engine needs --trials >= 1000");
  std::vector<EpsilonRow> rows;
  const bool superdense = target == "superdense" || (target == "verify" && c.method == "superdense");
  if (superdense) {
    require(!c.topology.empty(), ErrorCode::InvalidParameter, "superdense needs --topology FILE");
    for (const auto& path : c.topology) {
      const Topology topo = topology_for(path, c);
      auto [pq, mq] = superdense_conat(topo, c.vacuum_variance);
      for (const ChannelOutput* out : {&pq, &mq}) {
        EpsilonRow row = evaluate_channel(*out, c);
        row.topology = path;
        rows.push_back(std::move(row));
      }
    }
    return rows;
  }
  require(c.method == "ccaecc" || target == "ccaecc", ErrorCode::InvalidParameter,
          "unknown method '" + c.method + "'");
  if (target == "verify") {
    for (ChannelKind kind : {ChannelKind::PQ, ChannelKind::MQ}) {
      rows.push_back(evaluate_channel(ccaecc(kind, c.n, c.r_or_default(), c.eta, c.vacuum_variance), c));
    }
  } else {
    rows.push_back(evaluate_channel(ccaecc(parse_kind(c.kind), c.n, c.r_or_default(), c.eta, c.vacuum_variance), c));
  }
  return rows;
}

inline std::vector<double> sweep_grid(const RunConfig& c) {
  require(c.steps >= 1, ErrorCode::InvalidParameter, "--steps must be at least 1");
  std::vector<double> grid;
  for (int i = 0; i < c.steps; ++i) {
    grid.push_back(c.steps == 1 ? c.from : c.from + (c.to - c.from) * i / (c.steps - 1));
  }
  return grid;
}

inline std::vector<EpsilonRow> sweep_rows(const RunConfig& c) {
  require(c.over == "ccaecc" || c.over == "superdense" || c.over == "verify", ErrorCode::InvalidParameter,
          "--over must be ccaecc, superdense or verify");
  const bool superdense = c.over == "superdense" || (c.over == "verify" && c.method == "superdense");
  require(!(superdense && c.param == "n"), ErrorCode::InvalidParameter,
          "n is fixed by the topology; sweep r or eta instead");
  require(!(superdense && c.param == "eta"), ErrorCode::InvalidParameter,
          "the superdense construction has no detector efficiency");
  const auto grid = sweep_grid(c);
  auto blocks = run_trials<std::vector<EpsilonRow>>(
      grid.size(), c.seed,
      [&](std::size_t i, Rng&) {
        RunConfig point = c;
        if (c.param == "r") point.r = grid[i];
        if (c.param == "eta") point.eta = grid[i];
        if (c.param == "n") point.n = static_cast<int>(std::lround(grid[i]));
        auto rows = channel_rows(c.over, point);
        for (auto& row : rows) {
          row.param = c.param;
          row.value = c.param == "n" ? point.n : grid[i];
        }
        return rows;
      },
      c.workers);
  std::vector<EpsilonRow> rows;
  for (auto& block : blocks) {
    for (auto& row : block) rows.push_back(std::move(row));
  }
  return rows;
}

inline Json resource_json(const QuadratureRegister& reg) {
  Json modes = Json::array();
  for (ModeId k : reg.live_modes()) {
    Json entry = {{"name", reg.mode(k).name}};
    for (Quadrature q : {Quadrature::X, Quadrature::P}) {
      const std::string key(1, quadrature_char(q));
      entry[key] = to_json(reg.form(k, q));
      Json effective = Json::object();
      for (const auto& [label, coef] : reg.form(k, q).terms()) {
        effective[to_string(label)] = number(reg.effective_coefficient(k, q, label));
      }
      entry[key + "_effective"] = std::move(effective);
    }
    modes.push_back(std::move(entry));
  }
  return modes;
}

inline Artifact resource_artifact(const RunConfig& c, const QuadratureRegister& reg, ChannelKind variant,
                                  const GaussianState* state) {
  // correlations of the resource: small relative copied-quadrature noise and
  // small total shared-quadrature noise
  const Quadrature rel = variant == ChannelKind::PQ ? Quadrature::X : Quadrature::P;
  const auto live = reg.live_modes();
  LinearForm total;
  for (ModeId k : live) total += reg.form(k, conjugate(rel));
  double rel_min = std::numeric_limits<double>::infinity();
  double rel_max = 0.0;
  for (std::size_t a = 0; a < live.size(); ++a) {
    for (std::size_t b = a + 1; b < live.size(); ++b) {
      const double v = variance_of(reg, reg.form(live[a], rel) - reg.form(live[b], rel));
      rel_min = std::min(rel_min, v);
      rel_max = std::max(rel_max, v);
    }
  }
  const SymplecticReport symplectic = symplectic_check(reg);

  Artifact a;
  a.pass = symplectic.ok;
  if (c.format == "csv") {
    a.text = "mode,quadrature,label,coefficient,effective_coefficient\n";
    for (ModeId k : live) {
      for (Quadrature q : {Quadrature::X, Quadrature::P}) {
        for (const auto& [label, coef] : reg.form(k, q).terms()) {
          a.text += reg.mode(k).name + "," + quadrature_char(q) + "," + to_string(label) + "," +
                    format_number(coef) + "," + format_number(reg.effective_coefficient(k, q, label)) + "\n";
        }
      }
    }
    return a;
  }
  Json doc = {{"config", config_json(c)}, {"conventions", conventions_json(c)}};
  doc["modes"] = resource_json(reg);
  doc["properties"] = {{"relative_quadrature", std::string(1, quadrature_char(rel))},
                       {"relative_variance_min", number(rel_min)},
                       {"relative_variance_max", number(rel_max)},
                       {"total_conjugate_variance", number(variance_of(reg, total))}};
  doc["symplectic"] = to_json(symplectic);
  if (state != nullptr) {
    const GaussianState no_input(Eigen::VectorXd(0), Eigen::MatrixXd(0, 0), 0, c.vacuum_variance);
    const GaussianState bridged = from_heisenberg(reg, no_input);
    Json cov = Json::array();
    for (Eigen::Index i = 0; i < state->cov().rows(); ++i) {
      std::vector<double> rowv(state->cov().cols());
      for (Eigen::Index j = 0; j < state->cov().cols(); ++j) rowv[j] = state->cov()(i, j);
      cov.push_back(numbers(rowv));
    }
    doc["covariance"] = std::move(cov);
    doc["bridge_max_deviation"] = number((bridged.cov() - state->cov()).cwiseAbs().maxCoeff());
  }
  a.text = doc.dump(2) + "\n";
  return a;
}

inline ChannelOutput app_channel(const RunConfig& c, std::optional<ChannelOutput>* partner = nullptr) {
  if (c.method == "superdense") {
    require(c.topology.size() == 1, ErrorCode::InvalidParameter, "give exactly one --topology FILE");
    auto [pq, mq] = superdense_conat(topology_for(c.topology.front(), c), c.vacuum_variance);
    if (partner != nullptr) *partner = mq;
    return parse_kind(c.kind) == ChannelKind::MQ ? mq : pq;
  }
  require(c.method == "ccaecc", ErrorCode::InvalidParameter, "unknown method '" + c.method + "'");
  return ccaecc(parse_kind(c.kind), c.n, c.r_or_default(), c.eta, c.vacuum_variance);
}

inline std::optional<double> eta_controllers(const RunConfig& c) {
  if (std::isnan(c.eta_controllers)) return std::nullopt;
  return c.eta_controllers;
}

inline std::size_t app_trials(const RunConfig& c) { return c.engine == "symbolic" ? 0 : c.trials; }

inline const char* kTeleportCsvHeader =
    "kind,receiver,controllers,withheld,eta_controllers,v_x,v_p,fidelity,mc_v_x,mc_v_p,mc_v_x_std_error,"
    "mc_v_p_std_error,mc_fidelity,mc_fidelity_std_error,trials,seed";

inline std::string teleport_csv(const TeleportReport& t) {
  const auto* mc = t.monte_carlo ? &*t.monte_carlo : nullptr;
  auto m = [&](double v) { return mc ? format_number(v) : std::string(); };
  std::ostringstream s;
  s << to_string(t.kind) << ',' << t.receiver << ',' << join_names(t.controllers) << ',' << join_names(t.withheld)
    << ',' << format_number(t.eta_controllers) << ',' << format_number(t.v_x) << ',' << format_number(t.v_p) << ','
    << format_number(t.fidelity) << ',' << m(mc ? mc->v_x : 0) << ',' << m(mc ? mc->v_p : 0) << ','
    << m(mc ? mc->v_x_std_error : 0) << ',' << m(mc ? mc->v_p_std_error : 0) << ',' << m(mc ? mc->fidelity : 0)
    << ',' << m(mc ? mc->fidelity_std_error : 0) << ',' << (mc ? mc->trials : 0) << ',' << (mc ? mc->seed : 0);
  return s.str();
}

inline Artifact teleport_artifact(const RunConfig& c) {
  TeleportOptions options{eta_controllers(c), c.drop_controller, app_trials(c), c.seed};
  std::optional<ChannelOutput> mq;
  const ChannelOutput channel = app_channel(c, c.two_mode ? &mq : nullptr);
  const std::string receiver = c.receiver.empty() ? channel.parties.at(1) : c.receiver;
  std::vector<TeleportReport> reports;
  if (c.two_mode) {
    require(mq.has_value(), ErrorCode::InvalidParameter, "--two-mode needs --method superdense");
    auto [a, b] = controlled_teleport_two_mode(parse_kind(c.kind) == ChannelKind::PQ ? channel : *mq,
                                               parse_kind(c.kind) == ChannelKind::PQ ? *mq : channel, receiver,
                                               {c.x0, c.p0, c.x0, c.p0}, options);
    reports = {a, b};
  } else {
    reports.push_back(controlled_teleport(channel, receiver, c.x0, c.p0, options));
  }
  Artifact art;
  if (c.format == "csv") {
    art.text = std::string(kTeleportCsvHeader) + "\n";
    for (const auto& t : reports) art.text += teleport_csv(t) + "\n";
    return art;
  }
  Json doc = {{"config", config_json(c)}, {"conventions", conventions_json(c)}};
  if (c.two_mode) {
    doc["pq"] = to_json(reports[0]);
    doc["mq"] = to_json(reports[1]);
  } else {
    doc["teleport"] = to_json(reports[0]);
  }
  art.text = doc.dump(2) + "\n";
  return art;
}

inline const char* kQssCsvHeader =
    "kind,reconstructor,coalition,excluded,secret_x,secret_p,v_x,v_p,mc_v_x,mc_v_p,mc_v_x_std_error,"
    "mc_v_p_std_error,mc_bias_x,mc_bias_p,trials,seed";

inline Artifact qss_artifact(const RunConfig& c) {
  const ChannelOutput channel = app_channel(c);
  std::string reconstructor = c.reconstructor;
  if (reconstructor.empty()) {
    for (std::size_t i = 1; i < channel.parties.size() && reconstructor.empty(); ++i) {
      const auto& p = channel.parties[i];
      if (std::find(c.coalition.begin(), c.coalition.end(), p) == c.coalition.end()) reconstructor = p;
    }
    require(!reconstructor.empty(), ErrorCode::InvalidParameter, "no party is left to reconstruct the secret");
  }
  std::vector<std::string> coalition = c.coalition;
  if (coalition.empty()) {
    for (const auto& p : channel.parties) {
      if (p != reconstructor) coalition.push_back(p);
    }
  }
  const QssReport q = qss_classical(channel, c.x0, c.p0, reconstructor, coalition, app_trials(c), c.seed,
                                    eta_controllers(c));
  Artifact art;
  if (c.format == "csv") {
    const auto* mc = q.monte_carlo ? &*q.monte_carlo : nullptr;
    auto m = [&](double v) { return mc ? format_number(v) : std::string(); };
    std::ostringstream s;
    s << kQssCsvHeader << '\n'
      << to_string(q.kind) << ',' << q.reconstructor << ',' << join_names(q.coalition) << ','
      << join_names(q.excluded) << ',' << format_number(q.secret_x) << ',' << format_number(q.secret_p) << ','
      << format_number(q.v_x) << ',' << format_number(q.v_p) << ',' << m(mc ? mc->v_x : 0) << ','
      << m(mc ? mc->v_p : 0) << ',' << m(mc ? mc->v_x_std_error : 0) << ',' << m(mc ? mc->v_p_std_error : 0)
      << ',' << m(mc ? mc->bias_x : 0) << ',' << m(mc ? mc->bias_p : 0) << ',' << (mc ? mc->trials : 0) << ','
      << (mc ? mc->seed : 0) << '\n';
    art.text = s.str();
    return art;
  }
  Json doc = {{"config", config_json(c)}, {"conventions", conventions_json(c)}, {"qss", to_json(q)}};
  art.text = doc.dump(2) + "\n";
  return art;
}

inline Artifact execute(const RunConfig& c) {
  require(c.vacuum_variance > 0.0, ErrorCode::InvalidParameter, "--vacuum-variance must be positive");
  if (c.command == "ghz") {
    const double r = c.r_or_default();
    const ChannelKind variant = parse_kind(c.kind);
    const QuadratureRegister reg = variant == ChannelKind::PQ ? prepare_ghz(c.parties, r, c.vacuum_variance)
                                                              : prepare_ghz_mq_variant(c.parties, r, c.vacuum_variance);
    if (c.engine == "symbolic") return resource_artifact(c, reg, variant, nullptr);
    const GaussianState state = prepare_ghz_state(c.parties, r, variant, c.vacuum_variance);
    return resource_artifact(c, reg, variant, &state);
  }
  if (c.command == "epr") {
    const double r = c.r_or_default();
    require(r >= 0.0, ErrorCode::InvalidParameter, "squeezing r must be >= 0");
    const QuadratureRegister reg = prepare_epr(r, c.vacuum_variance);
    if (c.engine == "symbolic") return resource_artifact(c, reg, ChannelKind::PQ, nullptr);
    const GaussianState state = prepare_epr_state(r, c.vacuum_variance);
    return resource_artifact(c, reg, ChannelKind::PQ, &state);
  }
  if (c.command == "ccaecc") return epsilon_artifact(c, channel_rows("ccaecc", c), false);
  if (c.command == "superdense") {
    require(c.topology.size() == 1, ErrorCode::InvalidParameter, "give exactly one --topology FILE");
    return epsilon_artifact(c, channel_rows("superdense", c), true);
  }
  if (c.command == "verify") return epsilon_artifact(c, channel_rows("verify", c), c.method != "superdense" || c.topology.size() == 1);
  if (c.command == "teleport") return teleport_artifact(c);
  if (c.command == "qss") return qss_artifact(c);
  if (c.command == "sweep") return epsilon_artifact(c, sweep_rows(c), false);
  throw Error(ErrorCode::InvalidParameter, "unknown command '" + c.command + "'");
}

inline void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << Json{{"error", code}, {"message", message}}.dump() << "\n";
}

inline void add_common(CLI::App* sub, RunConfig& c) {
  sub->add_option("--engine", c.engine, "symbolic, gaussian or both")
      ->check(CLI::IsMember({"symbolic", "gaussian", "both"}));
  sub->add_option("--trials", c.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
  sub->add_option("--seed", c.seed, "base seed of the Monte-Carlo generator");
  sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--output", c.output, "write the artifact to this path instead of stdout");
  sub->add_option("--vacuum-variance", c.vacuum_variance, "vacuum quadrature variance")->check(CLI::PositiveNumber);
  sub->add_option("--workers", c.workers, "worker threads (0: one per core)");
}

inline void add_channel(CLI::App* sub, RunConfig& c) {
  sub->add_option("--method", c.method, "ccaecc or superdense")->check(CLI::IsMember({"ccaecc", "superdense"}));
  sub->add_option("--n", c.n, "number of receivers (sender included)");
  sub->add_option("--r", c.r, "squeezing parameter");
  sub->add_option("--eta", c.eta, "homodyne efficiency");
  sub->add_option("--kind", c.kind, "pq or mq")->check(CLI::IsMember({"pq", "mq"}));
  sub->add_option("--topology", c.topology, "topology JSON file(s)");
}

inline std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::stringstream s(item);
    std::string part;
    while (std::getline(s, part, ',')) {
      if (!part.empty()) out.push_back(part);
    }
  }
  return out;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Multiparty coherent channel simulator", "conat"};
  app.require_subcommand(1);

  auto* ghz = app.add_subcommand("ghz", "prepare a GHZ resource");
  ghz->add_option("--parties", c.parties, "number of modes")->check(CLI::Range(2, 64));
  ghz->add_option("--r", c.r, "squeezing parameter");
  ghz->add_option("--kind", c.kind, "pq (x-correlated) or mq (Fourier variant)")->check(CLI::IsMember({"pq", "mq"}));
  add_common(ghz, c);

  auto* epr = app.add_subcommand("epr", "prepare an EPR pair");
  epr->add_option("--r", c.r, "squeezing parameter");
  add_common(epr, c);

  auto* cc = app.add_subcommand("ccaecc", "feed-forward channel over a GHZ resource");
  add_channel(cc, c);
  add_common(cc, c);

  auto* sd = app.add_subcommand("superdense", "superdense channels over an EPR tree");
  sd->add_option("--topology", c.topology, "topology JSON file")->required();
  sd->add_option("--r", c.r, "squeezing parameter for every EPR pair (overrides the file)");
  add_common(sd, c);

  auto* verify = app.add_subcommand("verify", "verify both channels of a method against the closed forms");
  add_channel(verify, c);
  add_common(verify, c);

  std::vector<std::string> drop;
  auto* tele = app.add_subcommand("teleport", "multiparty-controlled teleportation");
  add_channel(tele, c);
  tele->add_option("--receiver", c.receiver, "receiving party (default: first non-sender)");
  tele->add_option("--drop-controller", drop, "controller(s) whose outcome is withheld");
  tele->add_option("--eta-controllers", c.eta_controllers, "controllers' homodyne efficiency");
  tele->add_option("--x0", c.x0, "input mean x");
  tele->add_option("--p0", c.p0, "input mean p");
  tele->add_flag("--two-mode", c.two_mode, "teleport two modes through the PQ and MQ superdense channels");
  add_common(tele, c);

  std::vector<std::string> coalition;
  auto* qss = app.add_subcommand("qss", "secret sharing of a classical continuous value");
  add_channel(qss, c);
  qss->add_option("--coalition", coalition, "cooperating parties, comma separated (default: everyone else)");
  qss->add_option("--reconstructor", c.reconstructor, "party estimating the secret");
  qss->add_option("--eta-controllers", c.eta_controllers, "coalition homodyne efficiency");
  qss->add_option("--x0", c.x0, "secret x");
  qss->add_option("--p0", c.p0, "secret p");
  add_common(qss, c);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep emitting one row per grid point");
  sweep->add_option("--param", c.param, "r, eta or n")->required()->check(CLI::IsMember({"r", "eta", "n"}));
  sweep->add_option("--from", c.from)->required();
  sweep->add_option("--to", c.to)->required();
  sweep->add_option("--steps", c.steps)->check(CLI::PositiveNumber);
  sweep->add_option("--over", c.over, "ccaecc, superdense or verify")->required();
  add_channel(sweep, c);
  add_common(sweep, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    report_error(err, "invalid-arguments", e.what());
    return kInvalidArguments;
  }
  c.command = app.get_subcommands().front()->get_name();
  c.drop_controller = split_list(drop);
  c.coalition = split_list(coalition);

  try {
    const Artifact artifact = execute(c);
    if (c.output.empty()) {
      out << artifact.text;
    } else {
      std::ofstream file(c.output, std::ios::binary);
      if (!file) {
        report_error(err, "invalid-arguments", "cannot write '" + c.output + "'");
        return kInvalidArguments;
      }
      file << artifact.text;
    }
    if (!artifact.pass) {
      report_error(err, "verification-failure", "at least one check failed");
      return kVerificationFailure;
    }
    return kSuccess;
  } catch (const Error& e) {
    report_error(err, std::string(code_name(e.code())), e.what());
    return e.code() == ErrorCode::Topology ? kTopologyError : kInvalidArguments;
  } catch (const std::exception& e) {
    report_error(err, "invalid-parameter", e.what());
    return kInvalidArguments;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"conat"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace conat::cli
