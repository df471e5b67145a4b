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

// A protocol written once as data and executed on either engine.

#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "conat/error.hpp"
#include "conat/gaussian.hpp"
#include "conat/heisenberg.hpp"

namespace conat {

struct ModeDecl {
  std::string name;
  bool input = false;
  double squeezing = 1.0;  // x-quadrature squeezing factor of a vacuum mode

  bool operator==(const ModeDecl&) const = default;
};

struct BeamSplitterOp {
  ModeId i = 0, j = 0;
  double transmissivity = 0.5;
  bool operator==(const BeamSplitterOp&) const = default;
};

struct QndOp {
  ModeId i = 0, j = 0;
  bool operator==(const QndOp&) const = default;
};

struct QndPhaseAdjustOp {
  ModeId i = 0, j = 0;
  bool operator==(const QndPhaseAdjustOp&) const = default;
};

struct PhasePiOp {
  ModeId mode = 0;
  bool operator==(const PhasePiOp&) const = default;
};

struct FourierOp {
  ModeId mode = 0;
  bool operator==(const FourierOp&) const = default;
};

struct PassiveOp {
  std::vector<ModeId> modes;
  std::vector<std::vector<double>> mixing;
  bool operator==(const PassiveOp&) const = default;
};

struct HomodyneOp {
  ModeId measured = 0;
  Quadrature quadrature = Quadrature::X;
  std::vector<FeedForward> targets;
  double eta = 1.0;
  bool operator==(const HomodyneOp&) const = default;
};

using Operation =
    std::variant<BeamSplitterOp, QndOp, QndPhaseAdjustOp, PhasePiOp, FourierOp, PassiveOp, HomodyneOp>;

/// Mode declarations (all modes exist from the start) plus an operation list.
struct Program {
  std::vector<ModeDecl> modes;
  std::vector<Operation> ops;

  ModeId add_input(std::string name) {
    modes.push_back({std::move(name), true, 1.0});
    return modes.size() - 1;
  }

  ModeId add_vacuum(std::string name, double squeezing = 1.0) {
    require(squeezing > 0.0, ErrorCode::InvalidParameter, "squeezing factor must be positive");
    modes.push_back({std::move(name), false, squeezing});
    return modes.size() - 1;
  }

  void append(Operation op) { ops.push_back(std::move(op)); }

  std::vector<ModeId> input_modes() const {
    std::vector<ModeId> out;
    for (ModeId k = 0; k < modes.size(); ++k) {
      if (modes[k].input) out.push_back(k);
    }
    return out;
  }

  std::size_t input_count() const { return input_modes().size(); }

  /// 1-based input number of an input mode (the id of its basis labels).
  int input_number(ModeId k) const {
    require(k < modes.size() && modes[k].input, ErrorCode::InvalidParameter, "mode is not an input");
    int n = 0;
    for (ModeId j = 0; j <= k; ++j) n += modes[j].input ? 1 : 0;
    return n;
  }

  /// Modes never measured, in declaration order.
  std::vector<ModeId> surviving_modes() const {
    std::vector<bool> gone(modes.size(), false);
    for (const auto& op : ops) {
      if (const auto* h = std::get_if<HomodyneOp>(&op)) gone.at(h->measured) = true;
    }
    std::vector<ModeId> out;
    for (ModeId k = 0; k < modes.size(); ++k) {
      if (!gone[k]) out.push_back(k);
    }
    return out;
  }

  ModeId find(const std::string& name) const {
    for (ModeId k = 0; k < modes.size(); ++k) {
      if (modes[k].name == name) return k;
    }
    throw Error(ErrorCode::InvalidParameter, "no mode named '" + name + "'");
  }

  bool operator==(const Program&) const = default;
};

inline void apply(QuadratureRegister& reg, const Operation& op) {
  std::visit(
      [&reg](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, BeamSplitterOp>) {
          apply_beam_splitter(reg, o.i, o.j, o.transmissivity);
        } else if constexpr (std::is_same_v<T, QndOp>) {
          apply_qnd(reg, o.i, o.j);
        } else if constexpr (std::is_same_v<T, QndPhaseAdjustOp>) {
          apply_qnd_phase_adjust(reg, o.i, o.j);
        } else if constexpr (std::is_same_v<T, PhasePiOp>) {
          apply_phase_pi(reg, o.mode);
        } else if constexpr (std::is_same_v<T, FourierOp>) {
          apply_fourier(reg, o.mode);
        } else if constexpr (std::is_same_v<T, PassiveOp>) {
          apply_passive(reg, o.modes, o.mixing);
        } else {
          homodyne_feedforward(reg, o.measured, o.quadrature, o.targets, o.eta);
        }
      },
      op);
}

inline QuadratureRegister run_symbolic(const Program& program, double vacuum_variance = 1.0,
                                       double prune_threshold = kDefaultPruneThreshold) {
  QuadratureRegister reg(vacuum_variance);
  reg.set_prune_threshold(prune_threshold);
  for (const auto& decl : program.modes) {
    if (decl.input) {
      reg.add_input_mode(decl.name);
    } else {
      reg.add_vacuum_mode(decl.name, decl.squeezing);
    }
  }
  for (const auto& op : program.ops) apply(reg, op);
  return reg;
}

/// Executes a program on the covariance engine, one stochastic trial at a
/// time. Operations before the first measurement are applied once.
///
/// The state starts with every declared mode (inputs drawn from
/// `input_state`) followed by reference copies of the initial input
/// quadratures, in input order.
class GaussianRunner {
 public:
  GaussianRunner(Program program, const GaussianState& input_state) : program_(std::move(program)) {
    const auto inputs = program_.input_modes();
    require(input_state.n_modes() == inputs.size() && input_state.n_reference() == 0,
            ErrorCode::InvalidParameter,
            "input state has " + std::to_string(input_state.n_modes()) + " modes, program expects " +
                std::to_string(inputs.size()));
    initial_ = initial_state(input_state);
    for (ModeId k = 0; k < program_.modes.size(); ++k) order_.push_back(k);

    std::size_t next = 0;
    for (; next < program_.ops.size(); ++next) {
      if (std::holds_alternative<HomodyneOp>(program_.ops[next])) break;
      initial_ = apply_gate(initial_, order_, program_.ops[next]);
    }
    first_measurement_ = next;

    // The conditioned covariance does not depend on outcomes; fix it once.
    auto order = order_;
    GaussianState probe = initial_;
    for (std::size_t i = first_measurement_; i < program_.ops.size(); ++i) {
      probe = step(probe, order, program_.ops[i], nullptr);
    }
    final_order_ = order;
    final_cov_ = probe.cov();
    sampler_.emplace(final_cov_);
  }

  const Program& program() const { return program_; }

  /// Program mode ids of the final state's modes, in state order.
  const std::vector<ModeId>& final_modes() const { return final_order_; }
  std::size_t reference_count() const { return 2 * program_.input_count(); }
  const Eigen::MatrixXd& final_covariance() const { return final_cov_; }

  /// One trial: random homodyne outcomes and feed-forward.
  GaussianState run_trial(Rng& rng) const {
    auto order = order_;
    GaussianState state = initial_;
    for (std::size_t i = first_measurement_; i < program_.ops.size(); ++i) {
      state = step(state, order, program_.ops[i], &rng);
    }
    return state;
  }

  /// One trial followed by a draw from the conditioned state.
  Eigen::VectorXd sample(Rng& rng) const {
    GaussianState state = run_trial(rng);
    return sampler_->draw(state.mean(), rng);
  }

  /// Coordinate index of a surviving mode's quadrature in the final state.
  std::size_t final_index(ModeId mode, Quadrature q) const {
    auto it = std::find(final_order_.begin(), final_order_.end(), mode);
    require(it != final_order_.end(), ErrorCode::StaleMode,
            "mode '" + program_.modes.at(mode).name + "' does not survive the program");
    return GaussianState::index(static_cast<std::size_t>(it - final_order_.begin()), q);
  }

  /// Coordinate index of the initial quadrature of input number `input` (1-based).
  std::size_t reference_index(int input, Quadrature q) const {
    return 2 * final_order_.size() + 2 * static_cast<std::size_t>(input - 1) + (q == Quadrature::P ? 1 : 0);
  }

 private:
  GaussianState initial_state(const GaussianState& input_state) const {
    const auto& decls = program_.modes;
    const double sigma2 = input_state.vacuum_variance();
    const std::size_t n = decls.size();
    const std::size_t n_in = input_state.n_modes();
    const Eigen::Index dim = static_cast<Eigen::Index>(2 * n + 2 * n_in);
    // source[c] = input coordinate feeding coordinate c, or -1 for vacuum
    std::vector<Eigen::Index> source(static_cast<std::size_t>(dim), -1);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(dim);
    std::size_t input_seen = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (decls[k].input) {
        source[2 * k] = static_cast<Eigen::Index>(2 * input_seen);
        source[2 * k + 1] = static_cast<Eigen::Index>(2 * input_seen + 1);
        ++input_seen;
      } else {
        const double s = decls[k].squeezing;
        diag(static_cast<Eigen::Index>(2 * k)) = s * s * sigma2;
        diag(static_cast<Eigen::Index>(2 * k + 1)) = sigma2 / (s * s);
      }
    }
    for (std::size_t i = 0; i < 2 * n_in; ++i) source[2 * n + i] = static_cast<Eigen::Index>(i);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a) {
      const Eigen::Index sa = source[static_cast<std::size_t>(a)];
      if (sa < 0) {
        cov(a, a) = diag(a);
        continue;
      }
      mean(a) = input_state.mean()(sa);
      for (Eigen::Index b = 0; b < dim; ++b) {
        const Eigen::Index sb = source[static_cast<std::size_t>(b)];
        if (sb >= 0) cov(a, b) = input_state.cov()(sa, sb);
      }
    }
    return {std::move(mean), std::move(cov), n, sigma2};
  }

  static std::size_t position(const std::vector<ModeId>& order, ModeId mode) {
    auto it = std::find(order.begin(), order.end(), mode);
    require(it != order.end(), ErrorCode::StaleMode, "mode " + std::to_string(mode) + " was already measured");
    return static_cast<std::size_t>(it - order.begin());
  }

  static GaussianState apply_gate(const GaussianState& s, const std::vector<ModeId>& order, const Operation& op) {
    return std::visit(
        [&](const auto& o) -> GaussianState {
          using T = std::decay_t<decltype(o)>;
          if constexpr (std::is_same_v<T, BeamSplitterOp>) {
            return beam_splitter(s, position(order, o.i), position(order, o.j), o.transmissivity);
          } else if constexpr (std::is_same_v<T, QndOp>) {
            return qnd(s, position(order, o.i), position(order, o.j));
          } else if constexpr (std::is_same_v<T, QndPhaseAdjustOp>) {
            return qnd_phase_adjust(s, position(order, o.i), position(order, o.j));
          } else if constexpr (std::is_same_v<T, PhasePiOp>) {
            return phase_pi(s, position(order, o.mode));
          } else if constexpr (std::is_same_v<T, FourierOp>) {
            return fourier(s, position(order, o.mode));
          } else if constexpr (std::is_same_v<T, PassiveOp>) {
            std::vector<std::size_t> idx;
            for (ModeId m : o.modes) idx.push_back(position(order, m));
            return passive(s, idx, o.mixing);
          } else {
            throw Error(ErrorCode::InvalidParameter, "measurement is not a gate");
          }
        },
        op);
  }

  /// Applies one operation; with rng == nullptr a measurement is conditioned
  /// on its mean outcome (used only to obtain the covariance path).
  static GaussianState step(const GaussianState& s, std::vector<ModeId>& order, const Operation& op, Rng* rng) {
    const auto* h = std::get_if<HomodyneOp>(&op);
    if (h == nullptr) return apply_gate(s, order, op);
    const std::size_t k = position(order, h->measured);
    std::vector<std::pair<ModeId, FeedForward>> targets;
    for (const auto& t : h->targets) {
      require(t.mode != h->measured, ErrorCode::InvalidParameter, "feed-forward target equals the measured mode");
      position(order, t.mode);
      targets.emplace_back(t.mode, t);
    }
    HomodyneResult result;
    if (rng != nullptr) {
      result = homodyne_measure(s, k, h->quadrature, h->eta, *rng);
    } else {
      const double mean_outcome =
          std::sqrt(h->eta) * s.mean()(static_cast<Eigen::Index>(GaussianState::index(k, h->quadrature)));
      result = homodyne_condition(s, k, h->quadrature, h->eta, mean_outcome);
    }
    order.erase(order.begin() + static_cast<std::ptrdiff_t>(k));
    GaussianState out = std::move(result.state);
    for (const auto& [mode, t] : targets) {
      out = displace(out, position(order, mode), t.quadrature, t.gain * result.estimate);
    }
    return out;
  }

  Program program_;
  GaussianState initial_;
  std::vector<ModeId> order_;
  std::size_t first_measurement_ = 0;
  std::vector<ModeId> final_order_;
  Eigen::MatrixXd final_cov_;
  std::optional<GaussianSampler> sampler_;
};

}  // namespace conat
