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

// JSON images of the library's reports. Every real number is rounded to 12
// significant digits; non-finite values become null.

#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "json.hpp"

#include "conat/apps.hpp"
#include "conat/heisenberg.hpp"
#include "conat/topology.hpp"
#include "conat/verify.hpp"

namespace conat {

using Json = nlohmann::ordered_json;

constexpr int kSignificantDigits = 12;

/// Fixed 12-significant-digit text, independent of the locale ("inf",
/// "-inf" and "nan" for non-finite values).
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // also folds -0
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, v);
  return buf;
}

inline double round_significant(double v) {
  if (!std::isfinite(v)) return v;
  return std::strtod(format_number(v).c_str(), nullptr);
}

inline Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_significant(v);
}

inline Json numbers(const std::vector<double>& values) {
  Json out = Json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

inline Json to_json(const LinearForm& form) {
  Json out = Json::object();
  for (const auto& [label, c] : form.terms()) out[to_string(label)] = number(c);
  return out;
}

inline Json to_json(const SymplecticReport& report) {
  Json violations = Json::array();
  for (const auto& v : report.violations) {
    violations.push_back({{"first", v.first}, {"second", v.second}, {"pair", v.pair}, {"value", number(v.value)},
                          {"expected", number(v.expected)}});
  }
  return {{"ok", report.ok},
          {"max_deviation", number(report.max_deviation)},
          {"pairs_checked", report.pairs_checked},
          {"violations", violations}};
}

inline Json to_json(const TopologyReport& report) {
  return {{"valid", report.valid},     {"sender_known", report.sender_known}, {"connected", report.connected},
          {"is_tree", report.is_tree}, {"path_length", report.path_length},   {"components", report.components},
          {"errors", report.errors}};
}

inline Json to_json(const EpsilonReport& report) {
  Json out = {{"kind", to_string(report.kind)},
              {"sender", report.sender},
              {"receivers", report.receivers},
              {"reference", to_string(Reference::SenderOutput)},
              {"epsilons_measured", numbers(report.epsilons)},
              {"epsilons_input_referenced", numbers(report.epsilons_input_referenced)},
              {"means", numbers(report.means)},
              {"mean_tolerance", number(report.mean_tolerance)},
              {"commutators", numbers(report.commutators)},
              {"commutator_max_deviation", number(report.commutator_max_deviation)},
              {"commutators_ok", report.commutators_ok}};
  out["epsilons_predicted"] = report.predicted ? numbers(*report.predicted) : Json(nullptr);
  out["tolerance"] = number(report.tolerance);
  out["pass"] = report.pass ? Json(*report.pass) : Json(nullptr);
  return out;
}

inline Json to_json(const AgreementReport& report) {
  return {{"labels", report.labels},
          {"symbolic", numbers(report.symbolic)},
          {"bridge", numbers(report.bridge)},
          {"monte_carlo", numbers(report.monte_carlo)},
          {"standard_error", numbers(report.standard_error)},
          {"monte_carlo_means", numbers(report.mc_means)},
          {"monte_carlo_mean_standard_error", numbers(report.mc_mean_standard_error)},
          {"max_bridge_deviation", number(report.max_bridge_deviation)},
          {"bridge_agrees", report.bridge_agrees},
          {"monte_carlo_agrees", report.monte_carlo_agrees},
          {"means_agree", report.means_agree},
          {"agree", report.agree},
          {"trials", report.trials},
          {"seed", report.seed},
          {"rng", report.rng}};
}

inline Json to_json(const MonteCarloSummary& mc) {
  return {{"trials", mc.trials},
          {"seed", mc.seed},
          {"rng", mc.rng},
          {"v_x", number(mc.v_x)},
          {"v_p", number(mc.v_p)},
          {"v_x_std_error", number(mc.v_x_std_error)},
          {"v_p_std_error", number(mc.v_p_std_error)},
          {"fidelity", number(mc.fidelity)},
          {"fidelity_std_error", number(mc.fidelity_std_error)},
          {"bias_x", number(mc.bias_x)},
          {"bias_p", number(mc.bias_p)},
          {"bias_x_std_error", number(mc.bias_x_std_error)},
          {"bias_p_std_error", number(mc.bias_p_std_error)}};
}

inline Json to_json(const TeleportReport& report) {
  Json out = {{"kind", to_string(report.kind)},
              {"receiver", report.receiver},
              {"controllers", report.controllers},
              {"withheld", report.withheld},
              {"eta_controllers", number(report.eta_controllers)},
              {"v_x", number(report.v_x)},
              {"v_p", number(report.v_p)},
              {"fidelity", number(report.fidelity)}};
  out["monte_carlo"] = report.monte_carlo ? to_json(*report.monte_carlo) : Json(nullptr);
  return out;
}

inline Json to_json(const QssReport& report) {
  Json out = {{"kind", to_string(report.kind)},
              {"reconstructor", report.reconstructor},
              {"coalition", report.coalition},
              {"excluded", report.excluded},
              {"secret", {number(report.secret_x), number(report.secret_p)}},
              {"v_x", number(report.v_x)},
              {"v_p", number(report.v_p)}};
  out["monte_carlo"] = report.monte_carlo ? to_json(*report.monte_carlo) : Json(nullptr);
  return out;
}

}  // namespace conat
