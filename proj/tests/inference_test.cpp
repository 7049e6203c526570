#include "robust_bayes/inference.hpp"
#include "robust_bayes/simulation.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

using namespace robust_bayes;

namespace {

std::vector<double> normal_sample(std::size_t n, std::uint64_t seed, double mu = 0.0, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mu, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

/// Dense grid search over (mu, log sigma) followed by local refinement.
Theta grid_oracle(const DivergenceSpec& div, const std::vector<double>& xs, double lo, double hi, double smin, double smax) {
  double best = INFINITY;
  double bm = 0.0;
  double bs = 1.0;
  double mlo = lo, mhi = hi, slo = std::log(smin), shi = std::log(smax);
  for (int round = 0; round < 6; ++round) {
    const int k = 80;
    for (int i = 0; i <= k; ++i)
      for (int j = 0; j <= k; ++j) {
        const double m = mlo + (mhi - mlo) * i / k;
        const double s = std::exp(slo + (shi - slo) * j / k);
        const double v = empirical_risk(div, xs, Theta(m, s));
        if (v < best) {
          best = v;
          bm = m;
          bs = s;
        }
      }
    const double wm = (mhi - mlo) / k * 2;
    const double ws = (shi - slo) / k * 2;
    mlo = bm - wm;
    mhi = bm + wm;
    slo = std::log(bs) - ws;
    shi = std::log(bs) + ws;
  }
  return {bm, bs};
}

}  // namespace

TEST(QuasiPosterior, KlUniformIsLogLikelihood) {
  const std::vector<double> xs{0.5, -1.0, 2.0};
  const Theta t(0.2, 1.5);
  double ll = 0.0;
  for (double x : xs) ll += log_density(x, t);
  EXPECT_NEAR(quasi_log_posterior(DivergenceSpec::kl(), PriorSpec::uniform(), xs, t), ll, 1e-12);
  EXPECT_THROW(quasi_log_posterior(DivergenceSpec::kl(), PriorSpec::uniform(), std::vector<double>{}, t),
               std::invalid_argument);
}

TEST(QuasiPosterior, ComposesKernelValues) {
  const std::vector<double> xs{0.5, -0.5};
  const auto div = DivergenceSpec::gamma(0.5);
  const Theta t(0.0, 1.0);
  EXPECT_NEAR(quasi_log_posterior(div, PriorSpec::reference(), xs, t), q_value(div, 0.5, t) + q_value(div, -0.5, t),
              1e-14);
  const Theta t2(0.0, 2.0);
  EXPECT_NEAR(quasi_log_posterior(div, PriorSpec::reference(), xs, t2),
              q_value(div, 0.5, t2) + q_value(div, -0.5, t2) + (-3.0 + 1.0 / 1.5) * std::log(2.0), 1e-14);
}

TEST(ImportanceSampling, Deterministic) {
  const auto xs = normal_sample(30, 1);
  const auto a = importance_posterior_mean(DivergenceSpec::gamma(0.5), PriorSpec::moment_matching(), xs, 2000, 9);
  const auto b = importance_posterior_mean(DivergenceSpec::gamma(0.5), PriorSpec::moment_matching(), xs, 2000, 9);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.weighted.log_weights, b.weighted.log_weights);
  const auto c = importance_posterior_mean(DivergenceSpec::gamma(0.5), PriorSpec::moment_matching(), xs, 2000, 10);
  EXPECT_NE(a.mean, c.mean);
}

TEST(ImportanceSampling, WeightsInvariantToConstantShift) {
  const auto xs = normal_sample(30, 2);
  const auto r = importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), xs, 1000, 3);
  auto shifted = r.weighted.log_weights;
  for (auto& w : shifted) w += 123.456;
  const WeightedMean a = self_normalized_mean(r.weighted.draws, r.weighted.log_weights);
  const WeightedMean b = self_normalized_mean(r.weighted.draws, shifted);
  // Equal up to rounding of the shifted sums.
  EXPECT_NEAR(a.mean.mu(), b.mean.mu(), 1e-14);
  EXPECT_NEAR(a.mean.sigma(), b.mean.sigma(), 1e-14);
  EXPECT_NEAR(a.ess, b.ess, 1e-10);
  EXPECT_DOUBLE_EQ(*std::max_element(r.weighted.log_weights.begin(), r.weighted.log_weights.end()), 0.0);
  EXPECT_GE(r.weighted.ess, 1.0);
  EXPECT_LE(r.weighted.ess, 1000.0);
}

TEST(ImportanceSampling, SymmetricSampleGivesCentredMean) {
  const std::vector<double> xs{-1.0, 1.0};
  const auto r = importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), xs, 100000, 4);
  EXPECT_LT(std::abs(r.mean.mu()), 3.0 * r.mc_standard_error[kMu]);
}

TEST(ImportanceSampling, KlUniformMeanIsSampleMean) {
  int outside = 0;
  for (int s = 0; s < 50; ++s) {
    const auto xs = normal_sample(20, 100 + s, 1.0, 2.0);
    const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const auto r = importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), xs, 10000, s);
    if (std::abs(r.mean.mu() - xbar) > 3.0 * r.mc_standard_error[kMu]) ++outside;
  }
  EXPECT_LE(outside, 2);  // 3-sigma events: expected 0.135 of 50
}

TEST(ImportanceSampling, GammaConsistentOnCleanData) {
  const auto xs = normal_sample(1000, 5);
  const auto r = importance_posterior_mean(DivergenceSpec::gamma(0.5), PriorSpec::uniform(), xs, 10000, 6);
  const Theta est = minimum_divergence_estimate(DivergenceSpec::gamma(0.5), xs);
  EXPECT_NEAR(r.mean.mu(), 0.0, 0.05);
  EXPECT_NEAR(r.mean.sigma(), 1.0, 0.05);
  EXPECT_NEAR(r.mean.mu(), est.mu(), 0.05);
  EXPECT_NEAR(r.mean.sigma(), est.sigma(), 0.05);
}

TEST(ImportanceSampling, Errors) {
  EXPECT_THROW(importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), std::vector<double>{1.0}, 10, 1),
               std::invalid_argument);
  EXPECT_THROW(importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), std::vector<double>{1.0, 2.0}, 0, 1),
               std::invalid_argument);
  EXPECT_THROW(importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), std::vector<double>{1.0, 1.0}, 10, 1),
               NumericalError);
}

TEST(ImportanceSampling, LowEssFlag) {
  const auto xs = normal_sample(2000, 8);
  const auto r = importance_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), xs, 1000, 1);
  EXPECT_TRUE(r.low_ess);
}

TEST(Estimator, KlIsClosedFormMle) {
  const auto xs = normal_sample(25, 9, 2.0, 3.0);
  const double n = xs.size();
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const Theta est = minimum_divergence_estimate(DivergenceSpec::kl(), xs);
  EXPECT_NEAR(est.mu(), mean, 1e-9);
  EXPECT_NEAR(est.sigma(), std::sqrt(ss / n), 1e-9);
}

TEST(Estimator, GammaDownweightsGrossOutlier) {
  const std::vector<double> xs{-1.0, 0.0, 1.0, 100.0};
  const Theta g = minimum_divergence_estimate(DivergenceSpec::gamma(0.5), xs);
  const Theta oracle = grid_oracle(DivergenceSpec::gamma(0.5), xs, -3.0, 3.0, 0.1, 5.0);
  EXPECT_NEAR(g.mu(), 0.0, 0.1);
  EXPECT_NEAR(g.mu(), oracle.mu(), 1e-3);
  EXPECT_NEAR(g.sigma(), oracle.sigma(), 1e-3);
  EXPECT_NEAR(minimum_divergence_estimate(DivergenceSpec::kl(), xs).mu(), 25.0, 1e-9);
}

TEST(Estimator, AgreesWithGridSearchOnRandomSamples) {
  for (int k = 0; k < 20; ++k) {
    const auto xs = generate_sample(ContaminatedModel(0.1, 6.0), 8 + k, 1000 + k);
    for (const auto& div : {DivergenceSpec::kl(), DivergenceSpec::density_power(0.5), DivergenceSpec::gamma(0.5)}) {
      const Theta est = minimum_divergence_estimate(div, xs);
      // The robust risks have no global minimiser (they diverge as sigma -> 0 at any data
      // point) and small contaminated samples can have several basins, so the oracle
      // searches the basin of the estimate.
      const double s = est.sigma();
      const Theta oracle = grid_oracle(div, xs, est.mu() - 0.1 * s, est.mu() + 0.1 * s, 0.9 * s, 1.1 * s);
      EXPECT_LE(empirical_risk(div, xs, est), empirical_risk(div, xs, oracle) + 1e-12) << div.to_string() << " " << k;
      EXPECT_NEAR(est.mu(), oracle.mu(), 1e-4 * s) << div.to_string() << " " << k;
      EXPECT_NEAR(est.sigma(), oracle.sigma(), 1e-4 * s) << div.to_string() << " " << k;
    }
  }
}

TEST(Estimator, LocationScaleEquivariance) {
  const auto xs = generate_sample(ContaminatedModel(0.2, 6.0), 50, 3);
  for (const auto& div : {DivergenceSpec::kl(), DivergenceSpec::gamma(0.3), DivergenceSpec::gamma(1.0)}) {
    const Theta e = minimum_divergence_estimate(div, xs);
    for (auto [a, b] : {std::pair{-4.0, 0.5}, std::pair{10.0, 3.0}}) {
      std::vector<double> ys(xs);
      for (auto& y : ys) y = a + b * y;
      const Theta f = minimum_divergence_estimate(div, ys);
      EXPECT_NEAR(f.mu(), a + b * e.mu(), 1e-6);
      EXPECT_NEAR(f.sigma(), b * e.sigma(), 1e-6);
    }
  }
}

TEST(Estimator, RobustStart) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0, 100.0};
  const Theta t = robust_start(xs);
  EXPECT_DOUBLE_EQ(t.mu(), 3.0);
  EXPECT_DOUBLE_EQ(t.sigma(), 1.4826);
  EXPECT_THROW(robust_start(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(QuadraturePosterior, AgreesWithImportanceSamplingAtModerateN) {
  const auto xs = normal_sample(200, 21);
  const auto div = DivergenceSpec::gamma(0.5);
  const Theta est = minimum_divergence_estimate(div, xs);
  const Theta q = quadrature_posterior_mean(div, PriorSpec::uniform(), xs, est);
  const auto is = importance_posterior_mean(div, PriorSpec::uniform(), xs, 200000, 4);
  EXPECT_NEAR(q.mu(), is.mean.mu(), 4.0 * is.mc_standard_error[kMu]);
  EXPECT_NEAR(q.sigma(), is.mean.sigma(), 4.0 * is.mc_standard_error[kSigma]);
}

TEST(QuadraturePosterior, KlUniformMuIsSampleMean) {
  const auto xs = normal_sample(100, 22, 3.0, 2.0);
  const Theta est = minimum_divergence_estimate(DivergenceSpec::kl(), xs);
  const Theta q = quadrature_posterior_mean(DivergenceSpec::kl(), PriorSpec::uniform(), xs, est);
  EXPECT_NEAR(q.mu(), est.mu(), 1e-10);
}
