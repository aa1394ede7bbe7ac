#include <gtest/gtest.h>

#include <cmath>

#include "dhmm/analysis/counterexample.hpp"
#include "dhmm/analysis/density.hpp"
#include "dhmm/analysis/error_prob.hpp"
#include "dhmm/errors.hpp"
#include "dhmm/numeric.hpp"

using namespace dhmm;
using namespace dhmm::analysis;

namespace {
const auto kGauss = LikelihoodModel::gaussian({-1.0, 1.0}, 1.0);
}

TEST(Density, SingleAgentMassConserved) {
  DensityOptions o;
  o.steps = 20;
  const auto d = density_evolution_consensus(TransitionModel::binary_symmetric(0.1), NetworkLikelihoods::replicate(kGauss, 1),
                                             CombinationMatrix::identity(1), 1.0, o);
  ASSERT_EQ(d.total_mass.size(), 20u);
  double prev = 1.0;
  for (double m : d.total_mass) {
    EXPECT_LE(prev - m, 1e-5);
    prev = m;
  }
  EXPECT_NEAR(d.total_mass.back() + d.leakage, 1.0, 1e-9);
  EXPECT_LT(d.leakage, 1e-3);
}

TEST(Density, SymmetricGridGivesSymmetricErrors) {
  DensityOptions o;
  o.steps = 10;
  o.grid = GridSpec{{-15.0}, {15.0}, 301};
  const auto d = density_evolution_consensus(TransitionModel::binary_symmetric(0.1), NetworkLikelihoods::replicate(kGauss, 1),
                                             CombinationMatrix::identity(1), 1.0, o);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_NEAR(d.error_given0(0, i), d.error_given1(0, i), 1e-9);
}

TEST(Density, FirstStepIsAnalytic) {
  DensityOptions o;
  o.steps = 1;
  const auto d = density_evolution_consensus(TransitionModel::binary_symmetric(0.1), NetworkLikelihoods::replicate(kGauss, 1),
                                             CombinationMatrix::identity(1), 1.0, o);
  // w_1 = 2 xi with xi ~ N(+-1, 1) and a uniform start; error = P(xi > 0 | theta = 0) = Phi(-1).
  EXPECT_NEAR(d.error(0, 0), normal_cdf(-1.0), 1e-12);
}

TEST(Density, TractabilityGuards) {
  const auto t = TransitionModel::binary_symmetric(0.1);
  EXPECT_THROW(density_evolution_consensus(t, NetworkLikelihoods::replicate(kGauss, 5),
                                           metropolis_weights(Graph::ring(5)), 5.0),
               TractabilityError);
  EXPECT_THROW(density_evolution_diffusion(t, NetworkLikelihoods::replicate(kGauss, 4),
                                           metropolis_weights(Graph::path(4)), 4.0),
               TractabilityError);
  EXPECT_THROW(density_evolution_consensus(t, NetworkLikelihoods::replicate(LikelihoodModel::gaussian({1.0, 1.0}, 1.0), 1),
                                           CombinationMatrix::identity(1), 1.0),
               ValidationError);
}

TEST(Density, LeakageIsReported) {
  DensityOptions o;
  o.steps = 5;
  o.grid = GridSpec{{-1.0}, {1.0}, 50};
  EXPECT_THROW(density_evolution_consensus(TransitionModel::binary_symmetric(0.1), NetworkLikelihoods::replicate(kGauss, 1),
                                           CombinationMatrix::identity(1), 1.0, o),
               GridLeakageError);
}

TEST(Density, RankOneDiffusionAgreesWithMonteCarlo) {
  const std::size_t k = 3;
  const auto s = Scenario::make(TransitionModel::binary_symmetric(0.1), NetworkLikelihoods::replicate(kGauss, k),
                                CombinationMatrix::uniform(k));
  DensityOptions o;
  o.steps = 10;
  const auto d = density_evolution_diffusion(s.transition, s.likelihoods, s.combination, 1.0, o);
  EXPECT_EQ(d.dimension, 1u);
  MonteCarloOptions mc;
  mc.runs = 40000;
  mc.horizon = 10;
  const auto e = estimate_error_prob(s, AlgorithmSpec{Variant::Dhs, 1.0, 0.1}, mc, 5);
  for (Eigen::Index a = 0; a < 3; ++a) EXPECT_NEAR(d.error(a, 9), e.p(a, 9), 0.01);
}

TEST(Density, TwoAgentConsensusGrid) {
  Eigen::MatrixXd w(2, 2);
  w << 0.75, 0.25, 0.25, 0.75;
  const CombinationMatrix a(w);
  DensityOptions o;
  o.steps = 5;
  o.grid = GridSpec{{-25.0, -25.0}, {25.0, 25.0}, 101};
  const auto d = density_evolution_consensus(TransitionModel::binary_symmetric(0.1), NetworkLikelihoods::replicate(kGauss, 2),
                                             a, 2.0, o);
  EXPECT_EQ(d.dimension, 2u);
  EXPECT_LT(d.leakage, 1e-3);
  EXPECT_NEAR(d.error(0, 4), d.error(1, 4), 1e-9);
}

TEST(Counterexample, DistinctLimitingLaws) {
  CounterexampleOptions o;
  o.runs = 100000;
  const auto r = three_agent_counterexample(o);
  EXPECT_NEAR(r.analytic_ratio, 0.6, 1e-12);
  EXPECT_NEAR(r.analytic_variance[0], 20.0 / 9.0, 1e-12);
  EXPECT_NEAR(r.analytic_variance[1], 4.0 / 3.0, 1e-12);
  EXPECT_TRUE(r.passed());
  EXPECT_GT(r.ks_end_middle, 0.05);

  o.seed = 99;
  const auto r2 = three_agent_counterexample(o);
  EXPECT_EQ(r2.analytic_ratio, r.analytic_ratio);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r2.mc_variance[k], r2.analytic_variance[k], 0.05 * r2.analytic_variance[k]);
}
