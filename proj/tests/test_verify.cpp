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
#include <variant>

#include <gtest/gtest.h>

#include "conat/verify.hpp"
#include "oracles.hpp"

namespace conat {
namespace {

const auto X = Quadrature::X;

// Variance of a table combination: sum of squared effective coefficients,
// every basis label being an independent unit-variance quadrature.
double table_variance(const oracle::Coefficients& c) {
  double v = 0.0;
  for (const auto& [label, coef] : c) {
    EXPECT_NE(label.kind, LabelKind::Input);
    v += coef * coef;
  }
  return v;
}

oracle::Coefficients difference(const oracle::Coefficients& a, const oracle::Coefficients& b) {
  oracle::Coefficients d = a;
  oracle::accumulate(d, b, -1.0);
  std::erase_if(d, [](const auto& t) { return std::abs(t.second) < 1e-15; });
  return d;
}

TEST(EpsilonReportTest, FeedForwardMatchesHandDerivedVariances) {
  for (double eta : {1.0, 0.8}) {
    const double r = 1.0;
    const auto t = oracle::feedforward_outputs(r, eta);
    const EpsilonReport rep = check_pq_definition(ccaecc_pq(3, r, eta));
    EXPECT_NEAR(rep.epsilons[0], table_variance(difference(t.at({"B", X}), t.at({"A", X}))), 1e-12);
    EXPECT_NEAR(rep.epsilons[1], table_variance(difference(t.at({"C", X}), t.at({"A", X}))), 1e-12);
    oracle::Coefficients collective;
    for (const char* p : {"A", "B", "C"}) oracle::accumulate(collective, t.at({p, Quadrature::P}), 1.0);
    collective.erase(oracle::in(1, Quadrature::P));
    EXPECT_NEAR(rep.epsilons[2], table_variance(collective), 1e-12);
    // input-referenced: x_B - x_in
    oracle::Coefficients from_input = t.at({"B", X});
    from_input.erase(oracle::in(1, X));
    EXPECT_NEAR(rep.epsilons_input_referenced[0], table_variance(from_input), 1e-12);
    EXPECT_EQ(rep.receivers, (std::vector<std::string>{"B", "C"}));
  }
}

TEST(EpsilonReportTest, ReferenceValues) {
  const EpsilonReport rep = check_definition(ccaecc_pq(3, 1.0, 1.0));
  EXPECT_NEAR(rep.epsilons[0], 0.270670566473, 1e-12);
  EXPECT_NEAR(rep.epsilons[2], 0.541341132946, 1e-12);
  const EpsilonReport lossy = check_definition(ccaecc_pq(3, 1.0, 0.8));
  EXPECT_NEAR(lossy.epsilons_input_referenced[0], 2 * std::exp(-2.0) + 0.5, 1e-12);
  EXPECT_NEAR(lossy.epsilons[0], 2 * std::exp(-2.0), 1e-12);
}

TEST(EpsilonReportTest, PredictionsPassAndFail) {
  const ChannelOutput out = ccaecc_mq(4, 0.7, 0.85);
  const EpsilonReport good = with_predictions(check_definition(out), predicted_epsilons(out));
  ASSERT_TRUE(good.pass.has_value());
  EXPECT_TRUE(*good.pass);

  auto wrong = predicted_epsilons(out);
  wrong.back() += 1e-6;
  EXPECT_FALSE(*with_predictions(check_definition(out), wrong).pass);
  EXPECT_FALSE(*with_predictions(check_definition(out), {0.1}).pass);
}

TEST(EpsilonReportTest, KindMismatchRejected) {
  EXPECT_THROW(check_pq_definition(ccaecc_mq(3, 1.0, 1.0)), Error);
  EXPECT_THROW(check_mq_definition(ccaecc_pq(3, 1.0, 1.0)), Error);
  EXPECT_NO_THROW(check_mq_definition(ccaecc_mq(3, 1.0, 1.0)));
}

TEST(EpsilonReportTest, CommutatorsAreCanonical) {
  const EpsilonReport rep = check_definition(superdense_conat(chain_topology({"A", "B", "C", "D"})).first);
  ASSERT_EQ(rep.commutators.size(), 4u);
  for (double c : rep.commutators) EXPECT_NEAR(c, 1.0, 1e-12);
  EXPECT_TRUE(rep.commutators_ok);
}

TEST(EpsilonReportTest, NoiseMonotoneInSqueezingAndEfficiency) {
  double previous = INFINITY;
  for (double r = 0.0; r <= 3.0; r += 0.25) {
    const double eps = check_definition(ccaecc_pq(3, r, 0.9)).epsilons.back();
    EXPECT_LT(eps, previous);
    previous = eps;
  }
  previous = -1.0;
  for (double eta = 1.0; eta >= 0.3; eta -= 0.1) {
    const double eps = check_definition(ccaecc_pq(3, 1.0, eta)).epsilons.back();
    EXPECT_GE(eps, previous);
    previous = eps;
  }
}

TEST(PredictionTest, SuperdenseNeedsValidTree) {
  EXPECT_THROW(predicted_epsilons(Method::Superdense, ChannelKind::PQ, 3, 1.0, 1.0), Error);
  Topology cyc = chain_topology({"A", "B", "C"});
  cyc.edges.push_back({"A", "C", std::nullopt});
  EXPECT_THROW(predicted_epsilons(Method::Superdense, ChannelKind::PQ, 3, 1.0, 1.0, cyc), Error);
}

TEST(PredictionTest, VacuumVarianceScales) {
  const auto half = predicted_epsilons(Method::Ccaecc, ChannelKind::PQ, 3, 1.0, 0.9, std::nullopt, 0.5);
  const auto unit = predicted_epsilons(Method::Ccaecc, ChannelKind::PQ, 3, 1.0, 0.9);
  for (std::size_t i = 0; i < unit.size(); ++i) EXPECT_NEAR(half[i], 0.5 * unit[i], 1e-15);
  const ChannelOutput out = ccaecc_pq(3, 1.0, 0.9, 0.5);
  EXPECT_TRUE(*with_predictions(check_definition(out), half).pass);
}

TEST(CrossValidationTest, FeedForwardAgrees) {
  const AgreementReport rep = cross_validate(ccaecc_pq(3, 1.0, 1.0), 100000, 11);
  EXPECT_TRUE(rep.agree);
  EXPECT_LE(rep.max_bridge_deviation, 1e-9);
  ASSERT_EQ(rep.labels, (std::vector<std::string>{"eps1", "eps2", "eps3", "eps1_input", "eps2_input"}));
  for (std::size_t k = 0; k < rep.labels.size(); ++k) {
    EXPECT_LE(std::abs(rep.monte_carlo[k] - rep.symbolic[k]), 3 * rep.standard_error[k] + 1e-9);
  }
  EXPECT_EQ(rep.trials, 100000u);
  EXPECT_EQ(rep.seed, 11u);
}

TEST(CrossValidationTest, LossyMqAgrees) {
  const AgreementReport rep = cross_validate(ccaecc_mq(4, 0.8, 0.7), 20000, 5);
  EXPECT_TRUE(rep.agree);
}

TEST(CrossValidationTest, StarAgrees) {
  const auto [pq, mq] = superdense_conat(star_topology({"A", "B", "C", "D"}, 0.5));
  EXPECT_TRUE(cross_validate(pq, 20000, 3).agree);
  const AgreementReport m = cross_validate(mq, 20000, 4);
  EXPECT_TRUE(m.agree);
  EXPECT_NEAR(m.symbolic[3], 0.0, 1e-12);
  EXPECT_NEAR(m.monte_carlo[3], 0.0, 1e-9);
}

TEST(CrossValidationTest, ReproducibleForFixedSeed) {
  const ChannelOutput out = ccaecc_pq(2, 0.5, 0.9);
  const AgreementReport a = cross_validate(out, 5000, 99);
  const AgreementReport b = cross_validate(out, 5000, 99);
  EXPECT_EQ(a.monte_carlo, b.monte_carlo);
  EXPECT_EQ(a.mc_means, b.mc_means);
}

TEST(CrossValidationTest, DetectsTamperedGain) {
  ChannelOutput out = ccaecc_pq(3, 1.0, 1.0);
  bool tampered = false;
  for (auto& op : out.program.ops) {
    if (auto* h = std::get_if<HomodyneOp>(&op); h && !tampered) {
      h->targets.front().gain = 1.0;
      tampered = true;
    }
  }
  ASSERT_TRUE(tampered);
  const AgreementReport rep = cross_validate(out, 20000, 7);
  EXPECT_FALSE(rep.monte_carlo_agrees);
  EXPECT_FALSE(rep.agree);
}

TEST(CrossValidationTest, RejectsTooFewTrials) {
  EXPECT_THROW(cross_validate(ccaecc_pq(2, 1.0, 1.0), 999, 1), Error);
}

}  // namespace
}  // namespace conat
