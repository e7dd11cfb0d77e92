#include <cmath>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "aprior/decision.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace aprior {
namespace {

constexpr ObjectId kQ11{11};

// Reference configuration: Q11 = (0,0), eps = 0.3, V = 1, c = 0.02.
// Golden argmax frozen from the brute-force sweep over n = 1..15
// (tests/oracles.hpp, brute_force_accuracy squared for two features).
constexpr std::size_t kGoldenArgmax = 2;

MeasurementEconomy reference_econ() { return {1.0, 0.02, 0.0, 15}; }

TEST(FeatureAccuracy, Noiseless) {
  for (std::size_t n = 1; n <= 8; ++n) EXPECT_DOUBLE_EQ(feature_accuracy(n, {0.0, 3, 1}, 1).value, 1.0);
}

TEST(FeatureAccuracy, SingleDraw) {
  for (Symbol s = 0; s < 3; ++s) EXPECT_NEAR(feature_accuracy(1, {0.3, 3, 1}, s).value, 0.7, 1e-15);
}

TEST(FeatureAccuracy, ThreeDrawsWithTieBreak) {
  const auto p = feature_accuracy(3, {0.3, 3, 1}, 0);
  EXPECT_EQ(p.mode, EvalMode::Exact);
  EXPECT_NEAR(p.value, 0.8785, 1e-12);
  EXPECT_NEAR(p.value, oracle::brute_force_accuracy(3, 0.3, 3, 0), 1e-12);
}

TEST(FeatureAccuracy, MatchesBruteForceAcrossConfigurations) {
  for (int a : {2, 3, 4})
    for (double eps : {0.0, 0.1, 0.3, 0.5, 1.0})
      for (int n = 1; n <= 7; ++n)
        for (int s = 0; s < a; ++s)
          EXPECT_NEAR(feature_accuracy(static_cast<std::size_t>(n), {eps, static_cast<Symbol>(a), 1},
                                       static_cast<Symbol>(s), EvalMode::Exact)
                          .value,
                      oracle::brute_force_accuracy(n, eps, a, s), 1e-12)
              << "a=" << a << " eps=" << eps << " n=" << n << " s=" << s;
}

TEST(FeatureAccuracy, TieBreakFavorsLowSymbols) {
  const ChannelParams p{0.3, 3, 1};
  EXPECT_GT(feature_accuracy(2, p, 0).value, feature_accuracy(2, p, 2).value);
}

TEST(FeatureAccuracy, AutoSwitchesToMonteCarloPastBudget) {
  const ChannelParams p{0.3, 3, 1};
  EXPECT_EQ(feature_accuracy(12, p, 0).mode, EvalMode::Exact);      // 3^12 = 531441
  EXPECT_EQ(feature_accuracy(13, p, 0).mode, EvalMode::MonteCarlo);  // 3^13 > 1e6
}

TEST(FeatureAccuracy, MonteCarloAgreesWithExactWithinThreeSigma) {
  const ChannelParams p{0.3, 3, 1};
  for (std::size_t n : {1u, 3u, 4u, 9u}) {
    const double exact = feature_accuracy(n, p, 0, EvalMode::Exact).value;
    const auto mc = feature_accuracy(n, p, 0, EvalMode::MonteCarlo);
    EXPECT_EQ(mc.mode, EvalMode::MonteCarlo);
    const double sigma = std::sqrt(exact * (1 - exact) / kMonteCarloSamples);
    EXPECT_NEAR(mc.value, exact, 3 * sigma + 1e-12) << "n=" << n;
  }
}

TEST(FeatureAccuracy, RejectsZeroCount) {
  try {
    feature_accuracy(0, {0.3, 3, 1}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidCount);
  }
}

TEST(RecognitionError, ReferenceValues) {
  const auto kb = test::three_node_kb();
  const auto params = channel_for(*kb, 0.3);
  EXPECT_NEAR(recognition_error(*kb, kQ11, 1, params).perr, 0.51, 1e-12);
  const double a3 = oracle::brute_force_accuracy(3, 0.3, 3, 0);
  EXPECT_NEAR(recognition_error(*kb, kQ11, 3, params).perr, 1 - a3 * a3, 1e-12);
  EXPECT_NEAR(recognition_error(*kb, kQ11, 3, params).perr, 0.22823775, 1e-12);
  for (std::size_t n = 1; n <= 5; ++n) EXPECT_DOUBLE_EQ(recognition_error(*kb, kQ11, n, channel_for(*kb, 0.0)).perr, 0.0);
}

TEST(RecognitionError, CheckpointsDecrease) {
  const auto kb = test::three_node_kb();
  const auto params = channel_for(*kb, 0.3);
  const double p1 = recognition_error(*kb, kQ11, 1, params).perr;
  const double p3 = recognition_error(*kb, kQ11, 3, params).perr;
  const double p9 = recognition_error(*kb, kQ11, 9, params).perr;
  EXPECT_LT(p3, p1);
  EXPECT_LT(p9, p3);
  const double a9 = oracle::brute_force_accuracy(9, 0.3, 3, 0);
  EXPECT_NEAR(p9, 1 - a9 * a9, 1e-12);
}

TEST(RecognitionError, RequiresFullyConstrainedLeaf) {
  const auto kb = test::three_node_kb();
  const auto params = channel_for(*kb, 0.3);
  try {
    recognition_error(*kb, ObjectId{1}, 3, params);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotLeaf);
  }
  try {
    recognition_error(*kb, ObjectId{2}, 3, params);  // Q2 fixes only f0
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnderconstrainedLeaf);
  }
}

TEST(PhiMeasure, Definition) {
  EXPECT_DOUBLE_EQ(phi_measure(7, 0.0, {2.0, 0.0, 0.0, 10}), 2.0);
  EXPECT_NEAR(phi_measure(1, 0.51, reference_econ()), 0.47, 1e-12);
  EXPECT_NEAR(phi_measure(3, 0.22823775, reference_econ()), 0.71176225, 1e-12);
  EXPECT_THROW(phi_measure(1, 1.5, reference_econ()), Error);
}

TEST(OptimalN, ReferenceSweepHasFrozenInteriorArgmax) {
  const auto kb = test::three_node_kb();
  const auto result = optimal_n(*kb, kQ11, channel_for(*kb, 0.3), reference_econ(), EvalMode::Exact);
  ASSERT_EQ(result.sweep.size(), 15u);
  // Brute-force oracle sweep.
  std::vector<double> oracle_phi;
  for (int n = 1; n <= 15; ++n) {
    const double a = oracle::brute_force_accuracy(std::min(n, 12), 0.3, 3, 0);
    oracle_phi.push_back(n <= 12 ? a * a - 0.02 * n : NAN);
  }
  for (int n = 1; n <= 12; ++n) EXPECT_NEAR(result.sweep[n - 1].phi, oracle_phi[n - 1], 1e-9) << n;
  EXPECT_EQ(result.n, kGoldenArgmax);
  EXPECT_NEAR(result.phi, 0.91 * 0.91 - 0.04, 1e-12);
  EXPECT_GT(result.phi, result.sweep.front().phi);
  EXPECT_GT(result.phi, result.sweep.back().phi);
  int maxima = 0;
  for (const auto& p : result.sweep) maxima += p.phi == result.phi;
  EXPECT_EQ(maxima, 1);
}

TEST(OptimalN, NoiselessWithCostPicksOne) {
  const auto kb = test::three_node_kb();
  const auto result = optimal_n(*kb, kQ11, channel_for(*kb, 0.0), reference_econ());
  EXPECT_EQ(result.n, 1u);
  for (std::size_t i = 1; i < result.sweep.size(); ++i) EXPECT_LT(result.sweep[i].phi, result.sweep[i - 1].phi);
}

TEST(OptimalN, FreeMeasurementsReachNMax) {
  const auto kb = test::three_node_kb();
  MeasurementEconomy econ = reference_econ();
  econ.cost = 0.0;
  const auto result = optimal_n(*kb, kQ11, channel_for(*kb, 0.3), econ, EvalMode::Exact);
  EXPECT_EQ(result.n, 15u);
}

TEST(OptimalN, TiesGoToSmallestN) {
  const auto kb = test::three_node_kb();
  MeasurementEconomy econ = reference_econ();
  econ.cost = 0.0;
  const auto result = optimal_n(*kb, kQ11, channel_for(*kb, 0.0), econ);
  EXPECT_EQ(result.n, 1u);
}

TEST(APrioriMeasurementCount, AveragesFullyConstrainedLeaves) {
  const auto kb = test::three_node_kb();
  const auto params = channel_for(*kb, 0.3);
  // Leaves Q11=(0,0) and Q12=(0,1); Q2 fixes one feature only.
  MeasurementEconomy econ = reference_econ();
  econ.n_max = 10;
  std::size_t best = 0;
  double best_phi = -1e300;
  for (int n = 1; n <= 10; ++n) {
    const double a0 = oracle::brute_force_accuracy(n, 0.3, 3, 0);
    const double a1 = oracle::brute_force_accuracy(n, 0.3, 3, 1);
    const double phi = 1 - (2 - a0 * a0 - a0 * a1) / 2 - 0.02 * n;
    if (phi > best_phi) {
      best_phi = phi;
      best = static_cast<std::size_t>(n);
    }
  }
  EXPECT_EQ(a_priori_measurement_count(*kb, params, econ, EvalMode::Exact), best);
}

TEST(PhiProgram, Definition) {
  Program p;
  p.id = ProgramId{5};
  p.base_utility = 2.0;
  EXPECT_DOUBLE_EQ(phi_program(p, 1.0, 3, {1.0, 0.0, 0.0, 15}).phi, 2.0);
  EXPECT_NEAR(phi_program(p, 0.5, 3, reference_econ()).phi, 0.94, 1e-12);
  EXPECT_LE(phi_program(p, 0.0, 3, reference_econ()).phi, 0.0);
  EXPECT_EQ(phi_program(p, 0.0, 3, reference_econ()).program, ProgramId{5});
  EXPECT_THROW(phi_program(p, 1.5, 3, reference_econ()), Error);
}

TEST(OrderAndFilter, Examples) {
  EXPECT_TRUE(order_and_filter({}, 0.0).empty());
  const std::vector<ProgramQuality> a{{ProgramId{1}, 0.9}, {ProgramId{2}, 0.3}};
  EXPECT_EQ(order_and_filter(a, 0.5), (std::vector<ProgramQuality>{{ProgramId{1}, 0.9}}));
  const std::vector<ProgramQuality> tie{{ProgramId{2}, 0.7}, {ProgramId{1}, 0.7}};
  EXPECT_EQ(order_and_filter(tie, 0.0), (std::vector<ProgramQuality>{{ProgramId{1}, 0.7}, {ProgramId{2}, 0.7}}));
  // Strict threshold.
  EXPECT_TRUE(order_and_filter(std::vector<ProgramQuality>{{ProgramId{1}, 0.5}}, 0.5).empty());
}

TEST(SelectRandom, EmptyAndSingleton) {
  SplitMix64 rng(1);
  EXPECT_FALSE(select_random({}, rng).has_value());
  const std::vector<ProgramQuality> one{{ProgramId{9}, 0.1}};
  for (int i = 0; i < 50; ++i) EXPECT_EQ(select_random(one, rng), ProgramId{9});
}

TEST(SelectRandom, UniformOverTwo) {
  SplitMix64 rng(2);
  const std::vector<ProgramQuality> two{{ProgramId{1}, 0.5}, {ProgramId{2}, 0.5}};
  std::map<std::int64_t, int> hits;
  constexpr int kTrials = 10000;
  for (int i = 0; i < kTrials; ++i) ++hits[select_random(two, rng)->value];
  ASSERT_EQ(hits.size(), 2u);
  const double sigma = std::sqrt(kTrials * 0.25);
  EXPECT_NEAR(hits[1], 5000, 3 * sigma);
  EXPECT_NEAR(hits[2], 5000, 3 * sigma);
}

}  // namespace
}  // namespace aprior
