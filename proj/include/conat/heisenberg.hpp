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

// Exact Heisenberg-picture quadrature algebra.
//
// Every mode quadrature is a real linear combination of initial-basis
// operators. Gates, homodyne measurements and feed-forward are linear
// substitutions on those combinations, so noise variances come out exactly.

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "conat/error.hpp"

namespace conat {

enum class Quadrature : std::uint8_t { X, P };

constexpr Quadrature conjugate(Quadrature q) {
  return q == Quadrature::X ? Quadrature::P : Quadrature::X;
}

constexpr char quadrature_char(Quadrature q) { return q == Quadrature::X ? 'x' : 'p'; }

enum class LabelKind : std::uint8_t { Input, Vacuum, Detector };

/// One initial-basis operator. Mode ids are 1-based within each kind.
struct BasisLabel {
  LabelKind kind = LabelKind::Vacuum;
  int mode = 1;
  Quadrature quadrature = Quadrature::X;

  auto operator<=>(const BasisLabel&) const = default;

  BasisLabel conjugate_label() const { return {kind, mode, conjugate(quadrature)}; }
};

inline std::string to_string(const BasisLabel& label) {
  std::string out(1, quadrature_char(label.quadrature));
  switch (label.kind) {
    case LabelKind::Input:
      out += "_in";
      break;
    case LabelKind::Vacuum:
      out += "_vac";
      break;
    case LabelKind::Detector:
      out += "_det";
      break;
  }
  return out + std::to_string(label.mode);
}

/// A real coefficient vector over basis labels.
class LinearForm {
 public:
  using Terms = std::map<BasisLabel, double>;

  LinearForm() = default;
  explicit LinearForm(const BasisLabel& label, double coefficient = 1.0) {
    if (coefficient != 0.0) terms_.emplace(label, coefficient);
  }

  const Terms& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  double coefficient(const BasisLabel& label) const {
    auto it = terms_.find(label);
    return it == terms_.end() ? 0.0 : it->second;
  }

  void set_coefficient(const BasisLabel& label, double value) {
    if (value == 0.0) {
      terms_.erase(label);
    } else {
      terms_[label] = value;
    }
  }

  /// this += scale * other; exact zeros are dropped.
  LinearForm& add_scaled(const LinearForm& other, double scale) {
    if (scale == 0.0) return *this;
    for (const auto& [label, c] : other.terms_) {
      auto [it, inserted] = terms_.try_emplace(label, scale * c);
      if (!inserted) {
        it->second += scale * c;
        if (it->second == 0.0) terms_.erase(it);
      }
    }
    return *this;
  }

  LinearForm& operator+=(const LinearForm& other) { return add_scaled(other, 1.0); }
  LinearForm& operator-=(const LinearForm& other) { return add_scaled(other, -1.0); }
  LinearForm& operator*=(double scale) {
    if (scale == 0.0) {
      terms_.clear();
    } else {
      for (auto& term : terms_) term.second *= scale;
    }
    return *this;
  }

  friend LinearForm operator+(LinearForm a, const LinearForm& b) { return a += b; }
  friend LinearForm operator-(LinearForm a, const LinearForm& b) { return a -= b; }
  friend LinearForm operator-(LinearForm a) { return a *= -1.0; }
  friend LinearForm operator*(double s, LinearForm a) { return a *= s; }
  friend LinearForm operator*(LinearForm a, double s) { return a *= s; }

  /// Drops coefficients with |c| < threshold.
  void prune(double threshold) {
    if (threshold <= 0.0) return;
    std::erase_if(terms_, [threshold](const auto& term) { return std::abs(term.second) < threshold; });
  }

  bool contains_input() const {
    for (const auto& term : terms_) {
      if (term.first.kind == LabelKind::Input) return true;
    }
    return false;
  }

  bool operator==(const LinearForm&) const = default;

 private:
  Terms terms_;
};

inline std::string to_string(const LinearForm& form) {
  if (form.empty()) return "0";
  std::string out;
  char buffer[64];
  for (const auto& [label, c] : form.terms()) {
    std::snprintf(buffer, sizeof(buffer), "%s%.12g*%s", out.empty() ? "" : " + ", c, to_string(label).c_str());
    out += buffer;
  }
  return out;
}

/// Canonical antisymmetric form on the basis: omega(x_i, p_j) = delta_ij.
inline double symplectic_form(const LinearForm& f, const LinearForm& g) {
  double total = 0.0;
  for (const auto& [label, c] : f.terms()) {
    const double partner = g.coefficient(label.conjugate_label());
    if (partner == 0.0) continue;
    total += label.quadrature == Quadrature::X ? c * partner : -c * partner;
  }
  return total;
}

using ModeId = std::size_t;

struct RegisterMode {
  std::string name;
  LinearForm x;
  LinearForm p;
  bool measured = false;

  const LinearForm& form(Quadrature q) const { return q == Quadrature::X ? x : p; }
  LinearForm& form(Quadrature q) { return q == Quadrature::X ? x : p; }
};

inline constexpr double kDefaultPruneThreshold = 1e-12;

/// Ordered set of modes, each an (x, p) pair of linear forms, plus the
/// squeezing factor of every vacuum-type basis label.
///
/// A vacuum label with squeezing factor s has variance s^2 * vacuum_variance.
/// Input labels never receive a variance.
class QuadratureRegister {
 public:
  explicit QuadratureRegister(double vacuum_variance = 1.0) : vacuum_variance_(vacuum_variance) {
    require(vacuum_variance > 0.0, ErrorCode::InvalidParameter, "vacuum variance must be positive");
  }

  ModeId add_input_mode(std::string name) {
    const int id = ++input_count_;
    return push_mode(std::move(name), BasisLabel{LabelKind::Input, id, Quadrature::X});
  }

  /// Adds a vacuum mode whose x label has squeezing factor `squeezing` and
  /// whose p label has 1/squeezing.
  ModeId add_vacuum_mode(std::string name, double squeezing = 1.0) {
    require(squeezing > 0.0 && std::isfinite(squeezing), ErrorCode::InvalidParameter,
            "squeezing factor must be positive");
    const int id = ++vacuum_count_;
    squeezing_[{LabelKind::Vacuum, id, Quadrature::X}] = squeezing;
    squeezing_[{LabelKind::Vacuum, id, Quadrature::P}] = 1.0 / squeezing;
    return push_mode(std::move(name), BasisLabel{LabelKind::Vacuum, id, Quadrature::X});
  }

  /// Fresh unit detector-vacuum label for one measurement event.
  BasisLabel new_detector_label(Quadrature q) {
    const int id = ++detector_count_;
    squeezing_[{LabelKind::Detector, id, Quadrature::X}] = 1.0;
    squeezing_[{LabelKind::Detector, id, Quadrature::P}] = 1.0;
    return {LabelKind::Detector, id, q};
  }

  std::size_t mode_count() const { return modes_.size(); }
  int input_count() const { return input_count_; }
  int vacuum_count() const { return vacuum_count_; }
  int detector_count() const { return detector_count_; }
  double vacuum_variance() const { return vacuum_variance_; }

  std::vector<ModeId> live_modes() const {
    std::vector<ModeId> out;
    for (ModeId k = 0; k < modes_.size(); ++k) {
      if (!modes_[k].measured) out.push_back(k);
    }
    return out;
  }

  const RegisterMode& mode(ModeId k) const {
    require(k < modes_.size(), ErrorCode::InvalidParameter, "mode " + std::to_string(k) + " out of range");
    return modes_[k];
  }

  /// Mutable access to a live mode; measured modes are stale.
  RegisterMode& live_mode(ModeId k) {
    require(k < modes_.size(), ErrorCode::InvalidParameter, "mode " + std::to_string(k) + " out of range");
    require(!modes_[k].measured, ErrorCode::StaleMode, "mode '" + modes_[k].name + "' was already measured");
    return modes_[k];
  }

  const LinearForm& x(ModeId k) const { return mode(k).x; }
  const LinearForm& p(ModeId k) const { return mode(k).p; }
  const LinearForm& form(ModeId k, Quadrature q) const { return mode(k).form(q); }

  /// Squeezing factor of a non-input label (1 for labels never registered).
  double squeezing_factor(const BasisLabel& label) const {
    require(label.kind != LabelKind::Input, ErrorCode::SymbolicInput,
            "input label " + to_string(label) + " carries no squeezing");
    auto it = squeezing_.find(label);
    return it == squeezing_.end() ? 1.0 : it->second;
  }

  double label_variance(const BasisLabel& label) const {
    const double s = squeezing_factor(label);
    return s * s * vacuum_variance_;
  }

  /// Coefficient times squeezing factor: the weight on the unit vacuum operator.
  double effective_coefficient(ModeId k, Quadrature q, const BasisLabel& label) const {
    const double c = form(k, q).coefficient(label);
    return label.kind == LabelKind::Input ? c : c * squeezing_factor(label);
  }

  double prune_threshold() const { return prune_threshold_; }
  void set_prune_threshold(double threshold) { prune_threshold_ = threshold; }

  void mark_measured(ModeId k) { live_mode(k).measured = true; }

  void prune(ModeId k) {
    modes_[k].x.prune(prune_threshold_);
    modes_[k].p.prune(prune_threshold_);
  }

 private:
  ModeId push_mode(std::string name, BasisLabel x_label) {
    BasisLabel p_label = x_label.conjugate_label();
    modes_.push_back({std::move(name), LinearForm(x_label), LinearForm(p_label), false});
    return modes_.size() - 1;
  }

  std::vector<RegisterMode> modes_;
  std::map<BasisLabel, double> squeezing_;
  double vacuum_variance_;
  double prune_threshold_ = kDefaultPruneThreshold;
  int input_count_ = 0;
  int vacuum_count_ = 0;
  int detector_count_ = 0;
};

/// Inputs first (named "in1", ...), then one vacuum mode per squeezing factor.
inline QuadratureRegister new_register(int n_input_modes, const std::vector<double>& vacuum_squeezing,
                                       double vacuum_variance = 1.0) {
  require(n_input_modes >= 0, ErrorCode::InvalidParameter, "input mode count must be non-negative");
  QuadratureRegister reg(vacuum_variance);
  for (int i = 0; i < n_input_modes; ++i) reg.add_input_mode("in" + std::to_string(i + 1));
  int v = 0;
  for (double s : vacuum_squeezing) reg.add_vacuum_mode("vac" + std::to_string(++v), s);
  return reg;
}

namespace detail {

inline void require_pair(const QuadratureRegister& reg, ModeId i, ModeId j) {
  require(i < reg.mode_count() && j < reg.mode_count(), ErrorCode::InvalidParameter, "mode out of range");
  require(i != j, ErrorCode::InvalidParameter, "two-mode gate needs distinct modes");
}

}  // namespace detail

/// Mixes modes i and j on a beam splitter with transmissivity t:
///   i -> sqrt(t) i - sqrt(1-t) j,   j -> sqrt(1-t) i + sqrt(t) j
/// for both quadratures. At t = 1/2 mode i carries the difference port and
/// mode j the sum port.
inline void apply_beam_splitter(QuadratureRegister& reg, ModeId i, ModeId j, double t) {
  detail::require_pair(reg, i, j);
  require(t >= 0.0 && t <= 1.0, ErrorCode::InvalidParameter, "transmissivity must lie in [0, 1]");
  auto& a = reg.live_mode(i);
  auto& b = reg.live_mode(j);
  const double ct = std::sqrt(t);
  const double st = std::sqrt(1.0 - t);
  for (Quadrature q : {Quadrature::X, Quadrature::P}) {
    LinearForm fi = ct * a.form(q) - st * b.form(q);
    LinearForm fj = st * a.form(q) + ct * b.form(q);
    a.form(q) = std::move(fi);
    b.form(q) = std::move(fj);
  }
  reg.prune(i);
  reg.prune(j);
}

/// QND coupling: x_i, p_i - p_j, x_i + x_j, p_j.
inline void apply_qnd(QuadratureRegister& reg, ModeId i, ModeId j) {
  detail::require_pair(reg, i, j);
  auto& a = reg.live_mode(i);
  auto& b = reg.live_mode(j);
  a.p -= b.p;
  b.x += a.x;
  reg.prune(i);
  reg.prune(j);
}

/// QND coupling with phase adjustment: x_i - x_j, p_i, x_j, p_i + p_j.
inline void apply_qnd_phase_adjust(QuadratureRegister& reg, ModeId i, ModeId j) {
  detail::require_pair(reg, i, j);
  auto& a = reg.live_mode(i);
  auto& b = reg.live_mode(j);
  a.x -= b.x;
  b.p += a.p;
  reg.prune(i);
  reg.prune(j);
}

inline void apply_phase_pi(QuadratureRegister& reg, ModeId k) {
  auto& m = reg.live_mode(k);
  m.x *= -1.0;
  m.p *= -1.0;
}

/// Quarter-period rotation: x -> p, p -> -x.
inline void apply_fourier(QuadratureRegister& reg, ModeId k) {
  auto& m = reg.live_mode(k);
  LinearForm old_x = std::move(m.x);
  m.x = std::move(m.p);
  m.p = -std::move(old_x);
}

/// Real orthogonal mixing applied identically to the x and p forms of
/// `modes`: new_k = sum_j mixing[k][j] * old_j.
inline void apply_passive(QuadratureRegister& reg, const std::vector<ModeId>& modes,
                          const std::vector<std::vector<double>>& mixing) {
  const std::size_t n = modes.size();
  require(mixing.size() == n, ErrorCode::InvalidParameter, "mixing matrix size does not match mode list");
  for (const auto& row : mixing) {
    require(row.size() == n, ErrorCode::InvalidParameter, "mixing matrix must be square");
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t k = 0; k < n; ++k) dot += mixing[a][k] * mixing[b][k];
      require(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-9, ErrorCode::InvalidParameter,
              "mixing matrix is not orthogonal");
    }
  }
  std::vector<RegisterMode*> targets;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      require(modes[a] != modes[b], ErrorCode::InvalidParameter, "mixing needs distinct modes");
    }
    targets.push_back(&reg.live_mode(modes[a]));
  }
  for (Quadrature q : {Quadrature::X, Quadrature::P}) {
    std::vector<LinearForm> mixed(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) mixed[a].add_scaled(targets[b]->form(q), mixing[a][b]);
    }
    for (std::size_t a = 0; a < n; ++a) targets[a]->form(q) = std::move(mixed[a]);
  }
  for (ModeId k : modes) reg.prune(k);
}

struct FeedForward {
  ModeId mode = 0;
  Quadrature quadrature = Quadrature::X;
  double gain = 1.0;

  bool operator==(const FeedForward&) const = default;
};

/// Homodyne measurement of one quadrature of `measured`, classical
/// transmission of the outcome, and displacement of every target by
/// gain * outcome. The measured mode leaves the register.
///
/// Detector inefficiency adds one shared detector-vacuum label per event with
/// coefficient -/+ gain*sqrt((1-eta)/eta) on each target (minus for an x
/// measurement, plus for p).
inline void homodyne_feedforward(QuadratureRegister& reg, ModeId measured, Quadrature q,
                                 const std::vector<FeedForward>& targets, double eta) {
  require(eta > 0.0 && eta <= 1.0, ErrorCode::InvalidParameter, "detector efficiency must lie in (0, 1]");
  const LinearForm signal = reg.live_mode(measured).form(q);
  for (const auto& t : targets) {
    require(t.mode != measured, ErrorCode::InvalidParameter, "feed-forward target equals the measured mode");
    reg.live_mode(t.mode);
  }
  LinearForm noise;
  if (eta < 1.0) {
    const double sign = q == Quadrature::X ? -1.0 : 1.0;
    noise = LinearForm(reg.new_detector_label(q), sign * std::sqrt((1.0 - eta) / eta));
  }
  for (const auto& t : targets) {
    auto& m = reg.live_mode(t.mode);
    m.form(t.quadrature).add_scaled(signal, t.gain);
    m.form(t.quadrature).add_scaled(noise, t.gain);
    reg.prune(t.mode);
  }
  reg.mark_measured(measured);
}

/// Exact variance of an input-free form.
inline double variance_of(const QuadratureRegister& reg, const LinearForm& form) {
  double total = 0.0;
  for (const auto& [label, c] : form.terms()) {
    require(label.kind != LabelKind::Input, ErrorCode::SymbolicInput,
            "form depends on input label " + to_string(label) + "; subtract the reference form first");
    total += c * c * reg.label_variance(label);
  }
  return total;
}

/// Exact covariance of two input-free forms (labels are independent).
inline double covariance_of(const QuadratureRegister& reg, const LinearForm& f, const LinearForm& g) {
  double total = 0.0;
  for (const auto& [label, c] : f.terms()) {
    require(label.kind != LabelKind::Input, ErrorCode::SymbolicInput,
            "form depends on input label " + to_string(label));
    const double d = g.coefficient(label);
    if (d != 0.0) total += c * d * reg.label_variance(label);
  }
  require(!g.contains_input(), ErrorCode::SymbolicInput, "form depends on an input label");
  return total;
}

struct SymplecticViolation {
  ModeId first = 0;
  ModeId second = 0;
  std::string pair;  // "xp", "xx" or "pp"
  double value = 0.0;
  double expected = 0.0;
};

struct SymplecticReport {
  bool ok = true;
  double max_deviation = 0.0;
  std::size_t pairs_checked = 0;
  std::vector<SymplecticViolation> violations;
};

/// Checks canonical commutators among all live modes.
inline SymplecticReport symplectic_check(const QuadratureRegister& reg, double tolerance = 1e-9) {
  SymplecticReport report;
  const auto live = reg.live_modes();
  auto record = [&](ModeId a, ModeId b, const char* pair, double value, double expected) {
    ++report.pairs_checked;
    const double dev = std::abs(value - expected);
    report.max_deviation = std::max(report.max_deviation, dev);
    if (dev > tolerance) {
      report.ok = false;
      report.violations.push_back({a, b, pair, value, expected});
    }
  };
  for (ModeId a : live) {
    for (ModeId b : live) {
      record(a, b, "xp", symplectic_form(reg.x(a), reg.p(b)), a == b ? 1.0 : 0.0);
      if (b > a) {
        record(a, b, "xx", symplectic_form(reg.x(a), reg.x(b)), 0.0);
        record(a, b, "pp", symplectic_form(reg.p(a), reg.p(b)), 0.0);
      }
    }
  }
  return report;
}

}  // namespace conat
