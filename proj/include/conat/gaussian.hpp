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

// Numeric covariance-matrix engine.
//
// Quadrature ordering is interleaved: x1, p1, x2, p2, ..., xn, pn. A state may
// also carry "reference coordinates" after the 2n quadratures: classical
// copies of quadratures taken at some earlier time (typically the input
// mode before any gate). Gates leave them alone; conditioning updates them
// like any other jointly Gaussian coordinate.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "conat/error.hpp"
#include "conat/heisenberg.hpp"

namespace conat {

/// Seedable generator with a platform-independent normal transform
/// (mt19937_64 + Box-Muller). std::normal_distribution is implementation
/// defined, so it is not used.
class Rng {
 public:
  static constexpr const char* kName = "mt19937_64/box-muller";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Per-trial seed derivation (splitmix64 finalizer).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Eigen::MatrixXd symplectic_omega(std::size_t n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

class GaussianState {
 public:
  GaussianState() = default;

  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov, std::size_t n_modes, double vacuum_variance = 1.0)
      : mean_(std::move(mean)), cov_(std::move(cov)), n_modes_(n_modes), vacuum_variance_(vacuum_variance) {
    require(mean_.size() == cov_.rows() && cov_.rows() == cov_.cols(), ErrorCode::InvalidParameter,
            "mean and covariance dimensions disagree");
    require(static_cast<std::size_t>(mean_.size()) >= 2 * n_modes_, ErrorCode::InvalidParameter,
            "state dimension smaller than 2 * modes");
    require(vacuum_variance_ > 0.0, ErrorCode::InvalidParameter, "vacuum variance must be positive");
  }

  std::size_t n_modes() const { return n_modes_; }
  std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }
  std::size_t n_reference() const { return dimension() - 2 * n_modes_; }
  double vacuum_variance() const { return vacuum_variance_; }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  Eigen::VectorXd& mean() { return mean_; }
  Eigen::MatrixXd& cov() { return cov_; }

  static std::size_t index(std::size_t mode, Quadrature q) { return 2 * mode + (q == Quadrature::P ? 1 : 0); }
  std::size_t reference_index(std::size_t r) const { return 2 * n_modes_ + r; }

  void check_mode(std::size_t k) const {
    require(k < n_modes_, ErrorCode::InvalidParameter, "mode " + std::to_string(k) + " out of range");
  }

  /// Symmetry within `tol` and smallest eigenvalue >= -tol.
  bool is_physical_covariance(double tol = 1e-9) const {
    if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > tol) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff() >= -tol;
  }

  void symmetrize() { cov_ = 0.5 * (cov_ + cov_.transpose()).eval(); }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  std::size_t n_modes_ = 0;
  double vacuum_variance_ = 1.0;
};

inline GaussianState vacuum(std::size_t n, double vacuum_variance = 1.0) {
  require(n >= 1, ErrorCode::InvalidParameter, "vacuum needs at least one mode");
  return {Eigen::VectorXd::Zero(2 * n), vacuum_variance * Eigen::MatrixXd::Identity(2 * n, 2 * n), n,
          vacuum_variance};
}

/// Single mode squeezed in `squeezed`: variance sigma^2 e^{-2r} there and
/// sigma^2 e^{+2r} on the conjugate quadrature.
inline GaussianState squeezed_vacuum(double r, Quadrature squeezed, double vacuum_variance = 1.0) {
  GaussianState state = vacuum(1, vacuum_variance);
  const double lo = vacuum_variance * std::exp(-2.0 * r);
  const double hi = vacuum_variance * std::exp(2.0 * r);
  state.cov()(0, 0) = squeezed == Quadrature::X ? lo : hi;
  state.cov()(1, 1) = squeezed == Quadrature::X ? hi : lo;
  return state;
}

inline GaussianState coherent(double x0, double p0, double vacuum_variance = 1.0) {
  GaussianState state = vacuum(1, vacuum_variance);
  state.mean() << x0, p0;
  return state;
}

/// Tensor product. Quantum modes of a then b; reference coordinates of a then b.
inline GaussianState direct_sum(const GaussianState& a, const GaussianState& b) {
  require(a.vacuum_variance() == b.vacuum_variance(), ErrorCode::InvalidParameter,
          "direct sum of states with different vacuum variance");
  const std::size_t qa = 2 * a.n_modes();
  const std::size_t qb = 2 * b.n_modes();
  const std::size_t ra = a.n_reference();
  const std::size_t rb = b.n_reference();
  const std::size_t dim = qa + qb + ra + rb;
  // new position of each old coordinate
  std::vector<std::size_t> pos_a(qa + ra), pos_b(qb + rb);
  for (std::size_t i = 0; i < qa; ++i) pos_a[i] = i;
  for (std::size_t i = 0; i < ra; ++i) pos_a[qa + i] = qa + qb + i;
  for (std::size_t i = 0; i < qb; ++i) pos_b[i] = qa + i;
  for (std::size_t i = 0; i < rb; ++i) pos_b[qb + i] = qa + qb + ra + i;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  auto place = [&](const GaussianState& s, const std::vector<std::size_t>& pos) {
    for (std::size_t i = 0; i < pos.size(); ++i) {
      mean(pos[i]) = s.mean()(i);
      for (std::size_t j = 0; j < pos.size(); ++j) cov(pos[i], pos[j]) = s.cov()(i, j);
    }
  };
  place(a, pos_a);
  place(b, pos_b);
  return {std::move(mean), std::move(cov), a.n_modes() + b.n_modes(), a.vacuum_variance()};
}

/// Appends a classical copy of mode k's current (x, p) as two reference
/// coordinates.
inline GaussianState append_reference(const GaussianState& state, std::size_t k) {
  state.check_mode(k);
  const Eigen::Index d = static_cast<Eigen::Index>(state.dimension());
  Eigen::MatrixXd select = Eigen::MatrixXd::Zero(d + 2, d);
  select.topRows(d).setIdentity();
  select(d, static_cast<Eigen::Index>(GaussianState::index(k, Quadrature::X))) = 1.0;
  select(d + 1, static_cast<Eigen::Index>(GaussianState::index(k, Quadrature::P))) = 1.0;
  return {select * state.mean(), select * state.cov() * select.transpose(), state.n_modes(),
          state.vacuum_variance()};
}

/// mean <- S mean, cov <- S cov S^T on the quadrature block. S must satisfy
/// S Omega S^T = Omega within 1e-9.
inline GaussianState apply_symplectic(const GaussianState& state, const Eigen::MatrixXd& s) {
  const Eigen::Index q = static_cast<Eigen::Index>(2 * state.n_modes());
  require(s.rows() == q && s.cols() == q, ErrorCode::InvalidParameter, "symplectic matrix has wrong size");
  const Eigen::MatrixXd omega = symplectic_omega(state.n_modes());
  const double deviation = (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff();
  if (deviation > 1e-9) {
    throw Error(ErrorCode::InvalidParameter,
                "matrix is not symplectic: max |S Omega S^T - Omega| = " + std::to_string(deviation));
  }
  const Eigen::Index d = static_cast<Eigen::Index>(state.dimension());
  Eigen::MatrixXd full = Eigen::MatrixXd::Identity(d, d);
  full.topLeftCorner(q, q) = s;
  GaussianState out(full * state.mean(), full * state.cov() * full.transpose(), state.n_modes(),
                    state.vacuum_variance());
  out.symmetrize();
  return out;
}

/// Embeds a gate acting on `modes` (local 2m x 2m matrix) into the full space.
inline Eigen::MatrixXd embed_gate(std::size_t n_modes, const std::vector<std::size_t>& modes,
                                  const Eigen::MatrixXd& local) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n_modes, 2 * n_modes);
  for (std::size_t a = 0; a < modes.size(); ++a) {
    for (std::size_t b = 0; b < modes.size(); ++b) {
      s.block<2, 2>(2 * modes[a], 2 * modes[b]) = local.block<2, 2>(2 * a, 2 * b);
    }
  }
  return s;
}

namespace detail {

inline void check_pair(const GaussianState& state, std::size_t i, std::size_t j) {
  state.check_mode(i);
  state.check_mode(j);
  require(i != j, ErrorCode::InvalidParameter, "two-mode gate needs distinct modes");
}

}  // namespace detail

/// Same orientation as the symbolic twin: i -> sqrt(t) i - sqrt(1-t) j.
inline Eigen::MatrixXd beam_splitter_matrix(double t) {
  require(t >= 0.0 && t <= 1.0, ErrorCode::InvalidParameter, "transmissivity must lie in [0, 1]");
  const double ct = std::sqrt(t);
  const double st = std::sqrt(1.0 - t);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(4, 4);
  for (int q = 0; q < 2; ++q) {
    m(q, q) = ct;
    m(q, 2 + q) = -st;
    m(2 + q, q) = st;
    m(2 + q, 2 + q) = ct;
  }
  return m;
}

inline Eigen::MatrixXd qnd_matrix() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  m(1, 3) = -1.0;  // p_i -= p_j
  m(2, 0) = 1.0;   // x_j += x_i
  return m;
}

inline Eigen::MatrixXd qnd_phase_adjust_matrix() {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  m(0, 2) = -1.0;  // x_i -= x_j
  m(3, 1) = 1.0;   // p_j += p_i
  return m;
}

inline GaussianState beam_splitter(const GaussianState& state, std::size_t i, std::size_t j, double t) {
  detail::check_pair(state, i, j);
  return apply_symplectic(state, embed_gate(state.n_modes(), {i, j}, beam_splitter_matrix(t)));
}

inline GaussianState qnd(const GaussianState& state, std::size_t i, std::size_t j) {
  detail::check_pair(state, i, j);
  return apply_symplectic(state, embed_gate(state.n_modes(), {i, j}, qnd_matrix()));
}

inline GaussianState qnd_phase_adjust(const GaussianState& state, std::size_t i, std::size_t j) {
  detail::check_pair(state, i, j);
  return apply_symplectic(state, embed_gate(state.n_modes(), {i, j}, qnd_phase_adjust_matrix()));
}

inline GaussianState phase_pi(const GaussianState& state, std::size_t k) {
  state.check_mode(k);
  return apply_symplectic(state, embed_gate(state.n_modes(), {k}, -Eigen::MatrixXd::Identity(2, 2)));
}

/// x -> p, p -> -x.
inline GaussianState fourier(const GaussianState& state, std::size_t k) {
  state.check_mode(k);
  Eigen::MatrixXd f(2, 2);
  f << 0.0, 1.0, -1.0, 0.0;
  return apply_symplectic(state, embed_gate(state.n_modes(), {k}, f));
}

/// Orthogonal mixing applied identically to x and p of `modes`.
inline GaussianState passive(const GaussianState& state, const std::vector<std::size_t>& modes,
                             const std::vector<std::vector<double>>& mixing) {
  const std::size_t m = modes.size();
  require(mixing.size() == m, ErrorCode::InvalidParameter, "mixing matrix size does not match mode list");
  Eigen::MatrixXd local = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (std::size_t a = 0; a < m; ++a) {
    state.check_mode(modes[a]);
    require(mixing[a].size() == m, ErrorCode::InvalidParameter, "mixing matrix must be square");
    for (std::size_t b = 0; b < m; ++b) {
      local(2 * a, 2 * b) = mixing[a][b];
      local(2 * a + 1, 2 * b + 1) = mixing[a][b];
    }
  }
  return apply_symplectic(state, embed_gate(state.n_modes(), modes, local));
}

inline GaussianState displace(const GaussianState& state, std::size_t k, Quadrature q, double amount) {
  state.check_mode(k);
  GaussianState out = state;
  out.mean()(static_cast<Eigen::Index>(GaussianState::index(k, q))) += amount;
  return out;
}

/// Removes mode k (its two rows and columns).
inline GaussianState drop_mode(const GaussianState& state, std::size_t k) {
  state.check_mode(k);
  const Eigen::Index d = static_cast<Eigen::Index>(state.dimension());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (i != static_cast<Eigen::Index>(2 * k) && i != static_cast<Eigen::Index>(2 * k + 1)) keep.push_back(i);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  Eigen::VectorXd mean(m);
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    mean(a) = state.mean()(keep[a]);
    for (Eigen::Index b = 0; b < m; ++b) cov(a, b) = state.cov()(keep[a], keep[b]);
  }
  return {std::move(mean), std::move(cov), state.n_modes() - 1, state.vacuum_variance()};
}

struct HomodyneResult {
  /// Raw detector outcome, distributed as N(sqrt(eta) mu_q, eta V_qq + (1-eta) sigma^2).
  double outcome = 0.0;
  /// outcome / sqrt(eta): the unbiased estimate of the quadrature.
  double estimate = 0.0;
  GaussianState state;
};

/// Conditions the state on a noisy homodyne outcome (rank-1 Schur update) and
/// drops the measured mode.
inline HomodyneResult homodyne_condition(const GaussianState& state, std::size_t k, Quadrature q, double eta,
                                         double outcome) {
  require(eta > 0.0 && eta <= 1.0, ErrorCode::InvalidParameter, "detector efficiency must lie in (0, 1]");
  state.check_mode(k);
  const Eigen::Index idx = static_cast<Eigen::Index>(GaussianState::index(k, q));
  const double root_eta = std::sqrt(eta);
  const Eigen::VectorXd vc = root_eta * state.cov().col(idx);
  const double m = eta * state.cov()(idx, idx) + (1.0 - eta) * state.vacuum_variance();
  GaussianState conditioned = state;
  if (m > 0.0) {
    const double innovation = outcome - root_eta * state.mean()(idx);
    conditioned.mean() += vc * (innovation / m);
    conditioned.cov() -= vc * vc.transpose() / m;
    conditioned.symmetrize();
  }
  return {outcome, outcome / root_eta, drop_mode(conditioned, k)};
}

inline HomodyneResult homodyne_measure(const GaussianState& state, std::size_t k, Quadrature q, double eta,
                                       Rng& rng) {
  require(eta > 0.0 && eta <= 1.0, ErrorCode::InvalidParameter, "detector efficiency must lie in (0, 1]");
  state.check_mode(k);
  const Eigen::Index idx = static_cast<Eigen::Index>(GaussianState::index(k, q));
  const double mu = std::sqrt(eta) * state.mean()(idx);
  const double var = eta * state.cov()(idx, idx) + (1.0 - eta) * state.vacuum_variance();
  const double outcome = mu + std::sqrt(std::max(var, 0.0)) * rng.normal();
  return homodyne_condition(state, k, q, eta, outcome);
}

inline HomodyneResult homodyne_measure(const GaussianState& state, std::size_t k, Quadrature q, double eta,
                                       std::uint64_t seed) {
  Rng rng(seed);
  return homodyne_measure(state, k, q, eta, rng);
}

/// Draws samples from N(mean, cov) for a fixed (possibly singular) covariance.
class GaussianSampler {
 public:
  explicit GaussianSampler(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const Eigen::VectorXd roots = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor_ = solver.eigenvectors() * roots.asDiagonal();
  }

  Eigen::VectorXd draw(const Eigen::VectorXd& mean, Rng& rng) const {
    Eigen::VectorXd z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return mean + factor_ * z;
  }

 private:
  Eigen::MatrixXd factor_;
};

/// Mean and covariance of register forms, given the joint Gaussian state of
/// the register's input modes. Vacuum-type labels are independent with
/// variance s^2 sigma^2.
class BasisMoments {
 public:
  BasisMoments(const QuadratureRegister& reg, const GaussianState& input_state)
      : reg_(reg), input_(input_state) {
    require(static_cast<int>(input_state.n_modes()) == reg.input_count(), ErrorCode::InvalidParameter,
            "input state has " + std::to_string(input_state.n_modes()) + " modes, register expects " +
                std::to_string(reg.input_count()));
  }

  double mean(const LinearForm& f) const {
    double total = 0.0;
    for (const auto& [label, c] : f.terms()) {
      if (label.kind == LabelKind::Input) total += c * input_.mean()(input_index(label));
    }
    return total;
  }

  double covariance(const LinearForm& f, const LinearForm& g) const {
    double total = 0.0;
    for (const auto& [label, c] : f.terms()) {
      if (label.kind == LabelKind::Input) {
        for (const auto& [other, d] : g.terms()) {
          if (other.kind == LabelKind::Input) {
            total += c * d * input_.cov()(input_index(label), input_index(other));
          }
        }
      } else {
        const double d = g.coefficient(label);
        if (d != 0.0) total += c * d * reg_.label_variance(label);
      }
    }
    return total;
  }

  double variance(const LinearForm& f) const { return covariance(f, f); }

 private:
  static Eigen::Index input_index(const BasisLabel& label) {
    return static_cast<Eigen::Index>(GaussianState::index(static_cast<std::size_t>(label.mode - 1), label.quadrature));
  }

  const QuadratureRegister& reg_;
  const GaussianState& input_;
};

/// Covariance-matrix image of a register: one mode per live register mode
/// (register order). With `with_input_reference`, the initial input
/// quadratures are appended as reference coordinates (input order).
inline GaussianState from_heisenberg(const QuadratureRegister& reg, const GaussianState& input_state,
                                     bool with_input_reference = false) {
  BasisMoments moments(reg, input_state);
  std::vector<LinearForm> forms;
  const auto live = reg.live_modes();
  for (ModeId k : live) {
    forms.push_back(reg.x(k));
    forms.push_back(reg.p(k));
  }
  if (with_input_reference) {
    for (int i = 1; i <= reg.input_count(); ++i) {
      forms.emplace_back(BasisLabel{LabelKind::Input, i, Quadrature::X});
      forms.emplace_back(BasisLabel{LabelKind::Input, i, Quadrature::P});
    }
  }
  const Eigen::Index d = static_cast<Eigen::Index>(forms.size());
  Eigen::VectorXd mean(d);
  Eigen::MatrixXd cov(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    mean(a) = moments.mean(forms[a]);
    for (Eigen::Index b = a; b < d; ++b) {
      cov(a, b) = cov(b, a) = moments.covariance(forms[a], forms[b]);
    }
  }
  return {std::move(mean), std::move(cov), live.size(), reg.vacuum_variance()};
}

/// Sample moments of a scalar statistic, accumulated in a fixed order.
struct SampleMoments {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;           // unbiased
  double mean_std_error = 0.0;
  double variance_std_error = 0.0;  // from the sample fourth central moment
};

inline SampleMoments sample_moments(const std::vector<double>& values) {
  SampleMoments m;
  m.count = values.size();
  if (m.count < 2) return m;
  const double n = static_cast<double>(m.count);
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  m.variance = m2 * n / (n - 1.0);
  m.mean_std_error = std::sqrt(m.variance / n);
  m.variance_std_error = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return m;
}

/// Runs `trial(index, rng)` for every index with seed derive_seed(seed, index)
/// on a pool of worker threads. Results are stored by index, so the output
/// does not depend on scheduling.
template <class Result, class Trial>
std::vector<Result> run_trials(std::size_t trials, std::uint64_t seed, Trial&& trial, unsigned workers = 0) {
  std::vector<Result> results(trials);
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(trials, 1)));
  std::vector<std::exception_ptr> failures(workers);
  auto body = [&](unsigned w) {
    try {
      for (std::size_t i = w; i < trials; i += workers) {
        Rng rng(derive_seed(seed, i));
        results[i] = trial(i, rng);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return results;
}

}  // namespace conat
