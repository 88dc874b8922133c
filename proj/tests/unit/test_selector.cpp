#include "test_support.hpp"

#include "sma/calibration_mc.hpp"
#include "sma/errors.hpp"
#include "sma/population_stats.hpp"
#include "sma/selector.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sma;
using sma::test::toy_family;
using sma::test::vec;

namespace {

const NoiseSpec kUnit4 = NoiseSpec::homogeneous(4, 1.0);

TestStatistics manual_stats(const std::vector<int>& models, std::vector<double> values)
{
  TestStatistics s;
  s.pairs = PairIndex(models);
  s.values = std::move(values);
  return s;
}

// AIC by explicit least squares on the leading features.
int brute_force_aic(const Matrix& psi, const std::vector<int>& models, double sigma,
                    const Vector& y)
{
  int best_m = 0;
  double best = 0.0;
  for (const int m : models) {
    const Matrix x = psi.topRows(m).transpose();
    const Vector beta = x.completeOrthogonalDecomposition().solve(y);
    const double crit = (y - x * beta).squaredNorm() + 2.0 * sigma * sigma * m;
    if (best_m == 0 || crit < best) {
      best = crit;
      best_m = m;
    }
  }
  return best_m;
}

} // namespace

TEST(TestStatisticsTest, ToyExamples)
{
  const auto fam = toy_family();
  const auto s = test_statistics(fam, vec({5, 0, 0, 9}));
  EXPECT_EQ(s.at(2, 1), 0.0);
  EXPECT_EQ(s.at(3, 1), 0.0);
  EXPECT_NEAR(test_statistics(fam, vec({1, -3, 4, 0})).at(3, 1), 5.0, 1e-12);
  EXPECT_EQ(s.values.size(), 3U);
  EXPECT_THROW((void)s.at(2, 2), Error);
}

TEST(TestStatisticsTest, MatchesExplicitDifferences)
{
  const Matrix psi = test::gaussian_matrix(6, 30, 3);
  const ModelFamily fam(DesignMatrix(psi), WeightingScheme::prediction(1.0), {1, 3, 4, 6});
  const Vector y = test::gaussian(30, 4);
  const auto s = test_statistics(fam, y);
  for (std::size_t c = 0; c < s.values.size(); ++c) {
    const auto& pr = s.pairs.pair(c);
    EXPECT_NEAR(s.values[c], (fam.difference(pr.m, pr.base) * y).norm(), 1e-10);
    EXPECT_GE(s.values[c], 0.0);
  }
}

TEST(SmaSelect, DecisionRuleExamples)
{
  // Pair order: (2,1), (3,1), (3,2).
  const auto zero = sma_select(manual_stats({1, 2, 3}, {0, 0, 0}), std::vector<double>{1, 1, 1});
  EXPECT_EQ(zero.m_hat, 1);

  const auto top = sma_select(manual_stats({1, 2, 3}, {0.1, 0.2, 0.3}), std::vector<double>{0, 0, 0});
  EXPECT_EQ(top.m_hat, 3);
  EXPECT_TRUE(top.accepted.at(3));
  EXPECT_FALSE(top.accepted.at(1));

  const auto toy = sma_select(manual_stats({1, 2, 3}, {10, 1, 0.5}), std::vector<double>{1, 1, 1});
  EXPECT_EQ(toy.m_hat, 2);
  EXPECT_FALSE(toy.accepted.at(1));
  EXPECT_TRUE(toy.accepted.at(2));
  EXPECT_TRUE(toy.accepted.at(3));
}

TEST(SmaSelect, MissingPairIsReported)
{
  CalibrationTable table;
  table.pairs = PairIndex({1, 2});
  table.critical = {1.0};
  try {
    (void)sma_select(manual_stats({1, 2, 3}, {0, 0, 0}), table);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingPair);
  }
}

TEST(SmaSelect, RaisingThresholdsNeverEnlargesSelection)
{
  const Matrix psi = test::gaussian_matrix(6, 40, 7);
  const ModelFamily fam(DesignMatrix(psi), WeightingScheme::prediction(1.0), {1, 2, 3, 4, 5, 6});
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    const Vector y = test::gaussian(40, 100 + trial) * 2.0;
    const auto s = test_statistics(fam, y);
    std::vector<double> lo(s.values.size());
    std::vector<double> hi(s.values.size());
    const Vector bump = test::gaussian(static_cast<Index>(s.values.size()), 200 + trial).cwiseAbs();
    for (std::size_t c = 0; c < lo.size(); ++c) {
      lo[c] = 1.0 + 0.1 * static_cast<double>(c % 3);
      hi[c] = lo[c] + bump(static_cast<Index>(c));
    }
    EXPECT_LE(sma_select(s, hi).m_hat, sma_select(s, lo).m_hat);
    EXPECT_LE(sma_select(s, lo).m_hat, fam.largest());
  }
}

TEST(SmaSelect, NonincreasingInConfidenceLevel)
{
  const Matrix psi = test::gaussian_matrix(5, 30, 9);
  const ModelFamily fam(DesignMatrix(psi), WeightingScheme::prediction(1.0), {1, 2, 3, 4, 5});
  const auto noise = NoiseSpec::homogeneous(30, 1.0);
  const auto draws = sample_joint_draws(fam, noise, 4000, 10);
  const TailFunctions tails(draws);
  const auto moments = all_pair_moments(fam, noise.variances());
  Vector f = Vector::Zero(30);
  f = psi.topRows(4).transpose() * vec({0.0, 2.0, -1.5, 1.0});
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const Vector y = f + test::gaussian(30, 300 + trial);
    const auto s = test_statistics(fam, y);
    int prev = fam.largest();
    for (const double x : {0.5, 1.0, 1.5, 2.0, 3.0}) {
      const int m = sma_select(s, critical_values(tails, moments, x, 1.0)).m_hat;
      EXPECT_LE(m, prev);
      prev = m;
    }
  }
}

TEST(Oracle, ToyExamples)
{
  const auto fam = toy_family();
  for (const auto mode : {CalibrationMode::Probabilistic, CalibrationMode::PowerLoss}) {
    EXPECT_EQ(oracle_index(fam, Vector::Zero(4), kUnit4, 1.0, mode), 1);
  }
  EXPECT_EQ(oracle_index(fam, vec({0, 0, 3, 0}), kUnit4, 1.0, CalibrationMode::Probabilistic), 3);
  EXPECT_EQ(oracle_index(fam, vec({0, 0.5, 0, 0}), kUnit4, 1.0, CalibrationMode::Probabilistic), 1);
}

TEST(Oracle, PowerLossRequiresAllLargerModelsGood)
{
  // Bias between models 3 and 4 only: models 1..3 are bad for the power-loss oracle
  // even though the probabilistic oracle may accept a smaller base via large p.
  Matrix psi = Matrix::Zero(4, 5);
  for (Index i = 0; i < 4; ++i) {
    psi(i, i) = 1.0;
  }
  const ModelFamily fam(DesignMatrix(psi), WeightingScheme::full_vector(), {1, 2, 3, 4});
  const auto noise = NoiseSpec::homogeneous(5, 1.0);
  const Vector f = vec({0, 0, 0, 1.5, 0});
  EXPECT_EQ(oracle_index(fam, f, noise, 1.0, CalibrationMode::PowerLoss), 4);
  // Probabilistic: base 1 needs 2.25 <= 3 for pair (4,1), 0 <= p otherwise.
  EXPECT_EQ(oracle_index(fam, f, noise, 1.0, CalibrationMode::Probabilistic), 1);
}

TEST(Oracle, ZeroAlphaFindsExactSupport)
{
  const Matrix psi = test::gaussian_matrix(6, 25, 13);
  const ModelFamily fam(DesignMatrix(psi), WeightingScheme::full_vector(), {1, 2, 3, 4, 5, 6});
  const auto noise = NoiseSpec::homogeneous(25, 1.0);
  for (int support = 1; support <= 6; ++support) {
    Vector theta = Vector::Zero(6);
    theta.head(support) = test::gaussian(support, 14).array() + 3.0;
    const Vector f = psi.transpose() * theta;
    EXPECT_EQ(oracle_index(fam, f, noise, 0.0, CalibrationMode::Probabilistic), support);
  }
}

TEST(Payment, ToyClosedForms)
{
  const auto fam = toy_family();
  const auto draws = sample_joint_draws(fam, kUnit4, 20000, 17);
  const TailFunctions tails(draws);
  const auto table = critical_values(tails, all_pair_moments(fam, kUnit4.variances()), 2.0, 1.0);
  const auto p3 = payment_for_adaptation(fam, kUnit4, 3, table);
  EXPECT_NEAR(p3.z_bar_theory, 2.0 * std::sqrt(3.0) + std::sqrt(2.0 * (2.0 + std::log(3.0))), 1e-12);
  EXPECT_NEAR(p3.z_bar_theory, 5.9535, 1e-4);
  EXPECT_LE(p3.z_bar, p3.z_bar_theory + 0.05);
  EXPECT_EQ(payment_for_adaptation(fam, kUnit4, 1, table).z_bar, 0.0);

  CalibrationTable power = table;
  power.mode = CalibrationMode::PowerLoss;
  power.a = 1.0;
  const double expected = std::sqrt(3.0) + std::sqrt(2.0 * (4.0 * std::log(3.0) + std::log(3.0)));
  EXPECT_NEAR(payment_for_adaptation(fam, kUnit4, 3, power).z_bar_theory, expected, 1e-12);
  EXPECT_NEAR(expected, 5.0467, 2e-4);
}

TEST(OracleReportTest, ToyReportAndZone)
{
  const auto fam = toy_family();
  const auto draws = sample_joint_draws(fam, kUnit4, 20000, 19);
  const TailFunctions tails(draws);
  const auto table = critical_values(tails, all_pair_moments(fam, kUnit4.variances()), 2.0, 1.0);
  const Vector f = vec({0, 0, 30, 0});
  const auto rep = oracle_report(fam, {kUnit4, f}, table, tails);
  EXPECT_EQ(rep.m_star, 3);
  EXPECT_EQ(rep.risk.size(), 3U);
  // A bias of 30 dwarfs every threshold: both smaller models sit in the complement.
  EXPECT_EQ(rep.zone.complement, (std::vector<int>{1, 2}));
  EXPECT_EQ(rep.zone.z_bar_zone, 0.0);
  EXPECT_NEAR(rep.zone.x_s, 2.0 + std::log(2.0), 1e-12);
  EXPECT_LE(rep.zone.z_bar_zone, rep.z_bar);

  try {
    (void)oracle_report(fam, {NoiseSpec::unknown(), f}, table, tails);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RequiresKnownTruth);
  }
}

TEST(Aic, ToyExamples)
{
  const auto fam = toy_family(WeightingScheme::prediction(1.0));
  EXPECT_TRUE(aic_equivalence_check(fam, 1.0, vec({1, 2, 3, 4})));
  const auto zero = aic_comparison(fam, 1.0, Vector::Zero(4));
  EXPECT_TRUE(zero.equivalent);
  EXPECT_EQ(zero.m_aic, 1);
  // Hand enumeration for Y = (1,2,3,4): AIC = 29+2, 25+4, 16+6 -> m = 3.
  EXPECT_EQ(aic_comparison(fam, 1.0, vec({1, 2, 3, 4})).m_aic, 3);
  for (std::uint64_t r = 0; r < 20; ++r) {
    const Vector y = 2.0 * test::gaussian(4, 23, r);
    const auto cmp = aic_comparison(fam, 1.0, y);
    EXPECT_TRUE(cmp.equivalent) << "draw " << r;
    EXPECT_EQ(cmp.m_aic, brute_force_aic(test::toy_psi(), {1, 2, 3}, 1.0, y));
  }
  try {
    (void)aic_equivalence_check(toy_family(), 1.0, Vector::Zero(4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotProjectionFamily);
  }
}

TEST(Aic, GenericDesignsAgreeWithBruteForce)
{
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const Matrix psi = test::gaussian_matrix(5, 12, 500 + trial);
    const double sigma = 0.5 + 0.1 * static_cast<double>(trial % 7);
    const ModelFamily fam(DesignMatrix(psi), WeightingScheme::prediction(2.0), {1, 2, 3, 4, 5});
    const Vector y = psi.transpose() * test::gaussian(5, 600 + trial) * 0.3 +
                     sigma * test::gaussian(12, 700 + trial);
    const auto cmp = aic_comparison(fam, sigma, y);
    EXPECT_TRUE(cmp.equivalent);
    EXPECT_EQ(cmp.m_aic, brute_force_aic(psi, {1, 2, 3, 4, 5}, sigma, y));
  }
}
