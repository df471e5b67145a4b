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
#include <random>
#include <set>

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "conat/circuit.hpp"
#include "conat/gaussian.hpp"
#include "conat/protocols.hpp"

namespace conat {
namespace {

const auto X = Quadrature::X;
const auto P = Quadrature::P;

double min_eigenvalue(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff();
}

// A random product of named symplectic gates on n modes.
Eigen::MatrixXd random_symplectic(std::size_t n, std::mt19937_64& gen) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  for (int g = 0; g < 12; ++g) {
    const std::size_t i = gen() % n;
    std::size_t j = gen() % n;
    if (j == i) j = (i + 1) % n;
    Eigen::MatrixXd local;
    switch (gen() % 3) {
      case 0: local = beam_splitter_matrix(static_cast<double>(gen() % 1000) / 999.0); break;
      case 1: local = qnd_matrix(); break;
      default: local = qnd_phase_adjust_matrix(); break;
    }
    s = embed_gate(n, {i, j}, local) * s;
  }
  return s;
}

TEST(GaussianStateTest, VacuumAndSqueezedMoments) {
  const GaussianState v = vacuum(1);
  EXPECT_TRUE(v.cov().isApprox(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(vacuum(3, 0.5).cov().isApprox(0.5 * Eigen::MatrixXd::Identity(6, 6)));

  const GaussianState s = squeezed_vacuum(1.0, X);
  EXPECT_NEAR(s.cov()(0, 0), 0.135335283237, 1e-12);
  for (double r : {0.0, 0.3, 1.0, 2.5}) {
    const GaussianState t = squeezed_vacuum(r, P, 0.5);
    EXPECT_NEAR(t.cov()(0, 0) * t.cov()(1, 1), 0.25, 1e-12);
    EXPECT_NEAR(t.cov()(1, 1), 0.5 * std::exp(-2 * r), 1e-15);
  }
}

TEST(GaussianStateTest, InterleavedOrdering) {
  EXPECT_EQ(GaussianState::index(0, X), 0u);
  EXPECT_EQ(GaussianState::index(0, P), 1u);
  EXPECT_EQ(GaussianState::index(2, X), 4u);
  EXPECT_EQ(GaussianState::index(2, P), 5u);
  const GaussianState c = direct_sum(coherent(1.0, 2.0), coherent(3.0, 4.0));
  EXPECT_DOUBLE_EQ(c.mean()(2), 3.0);
  EXPECT_DOUBLE_EQ(c.mean()(3), 4.0);
}

TEST(SymplecticTest, IdentityLeavesStateUnchanged) {
  const GaussianState s = direct_sum(squeezed_vacuum(0.7, X), coherent(0.2, -0.4));
  const GaussianState t = apply_symplectic(s, Eigen::MatrixXd::Identity(4, 4));
  EXPECT_TRUE(t.cov().isApprox(s.cov()));
  EXPECT_TRUE(t.mean().isApprox(s.mean()));
}

TEST(SymplecticTest, QndMatrixMatchesTransformation) {
  // rows: x1' = x1, p1' = p1 - p2, x2' = x1 + x2, p2' = p2 (order x1, p1, x2, p2)
  Eigen::MatrixXd expected(4, 4);
  expected << 1, 0, 0, 0,  //
      0, 1, 0, -1,         //
      1, 0, 1, 0,          //
      0, 0, 0, 1;
  EXPECT_TRUE(qnd_matrix().isApprox(expected));

  Eigen::MatrixXd adjust(4, 4);
  adjust << 1, 0, -1, 0,  //
      0, 1, 0, 0,         //
      0, 0, 1, 0,         //
      0, 1, 0, 1;
  EXPECT_TRUE(qnd_phase_adjust_matrix().isApprox(adjust));
}

TEST(SymplecticTest, NonSymplecticRejectedWithDeviation) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
  s(0, 0) = 2.0;
  try {
    apply_symplectic(vacuum(1), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidParameter);
    EXPECT_NE(std::string(e.what()).find("1"), std::string::npos);
  }
}

TEST(SymplecticTest, RandomChainsKeepCovariancePhysical) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + gen() % 5;
    GaussianState s = squeezed_vacuum(0.1 * static_cast<double>(gen() % 20), gen() % 2 ? X : P);
    for (std::size_t k = 1; k < n; ++k) s = direct_sum(s, squeezed_vacuum(0.1 * static_cast<double>(gen() % 20), X));
    const Eigen::MatrixXd m = random_symplectic(n, gen);
    const Eigen::MatrixXd omega = symplectic_omega(n);
    EXPECT_LT((m * omega * m.transpose() - omega).cwiseAbs().maxCoeff(), 1e-9);
    const GaussianState t = apply_symplectic(s, m);
    EXPECT_GT(min_eigenvalue(t.cov()), -1e-9);
    EXPECT_TRUE(t.is_physical_covariance());
    EXPECT_LT((t.cov() - t.cov().transpose()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SymplecticTest, PhaseAndFourierWrappers) {
  const GaussianState c = coherent(1.0, 2.0);
  EXPECT_TRUE(phase_pi(c, 0).mean().isApprox(Eigen::Vector2d(-1.0, -2.0)));
  EXPECT_TRUE(fourier(c, 0).mean().isApprox(Eigen::Vector2d(2.0, -1.0)));
  const GaussianState sq = fourier(squeezed_vacuum(1.0, X), 0);
  EXPECT_NEAR(sq.cov()(1, 1), std::exp(-2.0), 1e-12);
}

TEST(HomodyneTest, EprPartnerIsPinned) {
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    const GaussianState epr = prepare_epr_state(r);
    // closed-form conditioning: cosh(2r) - sinh(2r)^2 / cosh(2r)
    const double expected = 1.0 / std::cosh(2.0 * r);
    const HomodyneResult res = homodyne_condition(epr, 0, X, 1.0, 0.3);
    ASSERT_EQ(res.state.n_modes(), 1u);
    EXPECT_NEAR(res.state.cov()(0, 0), expected, 1e-12);
    EXPECT_NEAR(res.state.cov()(0, 0) / (2.0 * std::exp(-2.0 * r)), 1.0, 0.02 + std::exp(-4.0 * r));
    EXPECT_NEAR(res.state.mean()(0), std::tanh(2.0 * r) * 0.3, 1e-12);
  }
}

TEST(HomodyneTest, ProductStateUntouched) {
  const GaussianState s = direct_sum(squeezed_vacuum(0.6, X), coherent(0.5, -1.5));
  const HomodyneResult res = homodyne_condition(s, 0, X, 0.8, 1.7);
  ASSERT_EQ(res.state.n_modes(), 1u);
  EXPECT_TRUE(res.state.cov().isApprox(Eigen::MatrixXd::Identity(2, 2)));
  EXPECT_TRUE(res.state.mean().isApprox(Eigen::Vector2d(0.5, -1.5)));
  EXPECT_NEAR(res.estimate, 1.7 / std::sqrt(0.8), 1e-15);
}

TEST(HomodyneTest, OutcomeDistributionMatchesMarginal) {
  const double eta = 0.6;
  GaussianState s = direct_sum(squeezed_vacuum(0.4, X), vacuum(1));
  s = displace(s, 0, X, 1.25);
  s = beam_splitter(s, 0, 1, 0.3);
  const double mu = std::sqrt(eta) * s.mean()(0);
  const double var = eta * s.cov()(0, 0) + (1.0 - eta);
  const auto outcomes = run_trials<double>(100000, 77, [&](std::size_t, Rng& rng) {
    return homodyne_measure(s, 0, X, eta, rng).outcome;
  });
  const SampleMoments m = sample_moments(outcomes);
  EXPECT_LT(std::abs(m.mean - mu), 3.0 * m.mean_std_error);
  EXPECT_LT(std::abs(m.variance - var), 3.0 * m.variance_std_error);
}

TEST(HomodyneTest, DisplacementShiftsOutcomeMean) {
  const double eta = 0.75;
  const double d = 2.0;
  const GaussianState base = squeezed_vacuum(0.2, P);
  const GaussianState shifted = displace(base, 0, X, d);
  EXPECT_TRUE(displace(base, 0, X, 0.0).mean().isApprox(base.mean()));
  auto outcomes = [&](const GaussianState& s) {
    return sample_moments(run_trials<double>(100000, 3, [&](std::size_t, Rng& rng) {
      return homodyne_measure(s, 0, X, eta, rng).outcome;
    }));
  };
  const SampleMoments a = outcomes(base);
  const SampleMoments b = outcomes(shifted);
  // identical seeds: the shift is exact up to rounding
  EXPECT_NEAR(b.mean - a.mean, std::sqrt(eta) * d, 1e-9);
  EXPECT_LT(std::abs(b.mean - std::sqrt(eta) * d), 3.0 * b.mean_std_error);
}

TEST(HomodyneTest, ConditioningNeverIncreasesVariances) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 2 + gen() % 4;
    GaussianState s = squeezed_vacuum(0.1 * static_cast<double>(gen() % 15), X);
    for (std::size_t k = 1; k < n; ++k) s = direct_sum(s, squeezed_vacuum(0.1 * static_cast<double>(gen() % 15), P));
    s = apply_symplectic(s, random_symplectic(n, gen));
    const std::size_t k = gen() % n;
    const double eta = 0.2 + 0.8 * static_cast<double>(gen() % 100) / 99.0;
    const HomodyneResult res = homodyne_condition(s, k, gen() % 2 ? X : P, eta, 0.0);
    GaussianState kept = drop_mode(s, k);
    for (Eigen::Index i = 0; i < kept.cov().rows(); ++i) {
      EXPECT_LE(res.state.cov()(i, i), kept.cov()(i, i) + 1e-12);
    }
    EXPECT_GT(min_eigenvalue(res.state.cov()), -1e-9);
  }
}

TEST(HomodyneTest, RejectsBadEfficiency) {
  EXPECT_THROW(homodyne_condition(vacuum(2), 0, X, 0.0, 0.0), Error);
  EXPECT_THROW(homodyne_measure(vacuum(2), 0, X, 1.5, std::uint64_t{1}), Error);
  EXPECT_THROW(homodyne_condition(vacuum(2), 4, X, 1.0, 0.0), Error);
}

TEST(BridgeTest, IdentityRegisterReturnsInput) {
  QuadratureRegister reg = new_register(2, {});
  const GaussianState input = direct_sum(squeezed_vacuum(0.5, X), coherent(1.0, -2.0));
  const GaussianState out = from_heisenberg(reg, input);
  EXPECT_TRUE(out.cov().isApprox(input.cov()));
  EXPECT_TRUE(out.mean().isApprox(input.mean()));
  EXPECT_THROW(from_heisenberg(reg, vacuum(1)), Error);
}

TEST(BridgeTest, ProgramStateMatchesRunnerWithoutMeasurement) {
  Program program;
  program.add_input("a");
  program.add_vacuum("b", std::exp(0.8));
  program.add_vacuum("c", std::exp(-0.3));
  program.append(BeamSplitterOp{0, 1, 0.4});
  program.append(QndOp{1, 2});
  program.append(QndPhaseAdjustOp{0, 2});
  program.append(FourierOp{1});
  const GaussianState input = coherent(0.7, 0.1);
  const GaussianState bridged = from_heisenberg(run_symbolic(program), input, true);
  const GaussianRunner runner(program, input);
  EXPECT_LT((bridged.cov() - runner.final_covariance()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(BridgeTest, FeedForwardRegisterMatchesMonteCarlo) {
  const ChannelOutput out = ccaecc_pq(3, 0.7, 0.9);
  const GaussianState input = coherent(1.0, -0.5);
  const GaussianState bridged = from_heisenberg(out.reg, input, true);
  const GaussianRunner runner(out.program, input);
  ASSERT_EQ(runner.final_modes(), out.reg.live_modes());

  const auto samples = run_trials<Eigen::VectorXd>(100000, 21, [&](std::size_t, Rng& rng) { return runner.sample(rng); });
  const auto dim = bridged.cov().rows();
  ASSERT_EQ(samples.front().size(), dim);
  std::vector<double> column(samples.size());
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      // covariance entry as the mean of centred products
      for (std::size_t t = 0; t < samples.size(); ++t) {
        column[t] = (samples[t](i) - bridged.mean()(i)) * (samples[t](j) - bridged.mean()(j));
      }
      const SampleMoments m = sample_moments(column);
      EXPECT_LT(std::abs(m.mean - bridged.cov()(i, j)), 3.5 * m.mean_std_error + 1e-9) << i << "," << j;
    }
  }
}

TEST(RngTest, ReproducibleAndIndependentOfWorkers) {
  auto draw = [](unsigned workers) {
    return run_trials<double>(1000, 42, [](std::size_t, Rng& rng) { return rng.normal() + rng.uniform(); }, workers);
  };
  const auto a = draw(1);
  EXPECT_EQ(a, draw(1));
  EXPECT_EQ(a, draw(4));
  EXPECT_NE(a, run_trials<double>(1000, 43, [](std::size_t, Rng& rng) { return rng.normal() + rng.uniform(); }));
  EXPECT_STREQ(Rng::kName, "mt19937_64/box-muller");

  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(7, i));
  EXPECT_EQ(seeds.size(), 1000u);
}

TEST(RngTest, NormalMoments) {
  Rng rng(123);
  std::vector<double> v(200000);
  for (auto& x : v) x = rng.normal();
  const SampleMoments m = sample_moments(v);
  EXPECT_LT(std::abs(m.mean), 3.0 * m.mean_std_error);
  EXPECT_LT(std::abs(m.variance - 1.0), 3.0 * m.variance_std_error);
}

TEST(RngTest, TrialExceptionsPropagate) {
  EXPECT_THROW(run_trials<int>(10, 1, [](std::size_t i, Rng&) -> int {
                 if (i == 7) throw Error(ErrorCode::InvalidParameter, "boom");
                 return 0;
               }, 3),
               Error);
}

TEST(SampleMomentsTest, KnownValues) {
  const SampleMoments m = sample_moments({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_DOUBLE_EQ(m.variance, 5.0 / 3.0);
  EXPECT_EQ(m.count, 4u);
}

}  // namespace
}  // namespace conat
