#include "robust_bayes/asymptotics.hpp"

#include <gtest/gtest.h>

using namespace robust_bayes;

TEST(NuValue, SelfOverlap) {
  const Theta t(0.0, 1.0);
  EXPECT_NEAR(nu_value(t, GaussianMixture::normal(0.0, 1.0), 1.0), 1.0 / (2.0 * std::sqrt(std::numbers::pi)), 1e-12);
}

TEST(NuValue, ClosedFormGaussianProduct) {
  // int N(x; 6, 1) N(x; 0, 1) dx = N(6; 0, 2).
  const double exact = std::exp(-36.0 / 4.0) / std::sqrt(4.0 * std::numbers::pi);
  EXPECT_NEAR(nu_value(Theta(0.0, 1.0), GaussianMixture::normal(6.0, 1.0), 1.0) / exact, 1.0, 1e-10);
}

TEST(NuValue, DecreasesAsContaminationMovesOut) {
  double prev = INFINITY;
  for (double nu : {2.0, 4.0, 6.0, 8.0, 10.0}) {
    const double v = nu_value(Theta(0.0, 1.0), GaussianMixture::normal(nu, 1.0), 1.5);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_THROW(nu_value(Theta(0.0, 1.0), GaussianMixture::normal(0.0, 1.0), 0.0), std::invalid_argument);
}

TEST(BiasLimit, MomentMatchingPriorGivesZeroLimit) {
  const Theta t(0.0, 1.0);
  for (double g : {0.3, 0.5, 1.0}) {
    const Vec2 lim = posterior_mean_bias_limit(DivergenceSpec::gamma(g), PriorSpec::moment_matching(), t, ContaminatedModel(0.0, 6.0));
    EXPECT_LT(lim.cwiseAbs().maxCoeff(), 1e-5);
  }
  const Vec2 kl = posterior_mean_bias_limit(DivergenceSpec::kl(), PriorSpec::moment_matching(), t, ContaminatedModel(0.0, 6.0));
  EXPECT_LT(kl.cwiseAbs().maxCoeff(), 1e-5);
}

TEST(BiasLimit, UniformPriorKl) {
  const Vec2 lim = posterior_mean_bias_limit(DivergenceSpec::kl(), PriorSpec::uniform(), Theta(0.0, 1.0), ContaminatedModel(0.0, 6.0));
  EXPECT_NEAR(lim[kMu], 0.0, 1e-12);
  // J = diag(1, 2) and u_sigma = 7, so the sigma limit is 7/4.
  EXPECT_NEAR(lim[kSigma], 1.75, 1e-9);
}

TEST(BiasLimit, OnlyLogPriorGradientEnters) {
  const Theta t(0.3, 1.2);
  const auto g = GaussianMixture::clean(t);
  const auto div = DivergenceSpec::gamma(0.5);
  const Vec2 a = posterior_mean_bias_limit(div, PriorSpec::reference(), t, g);
  const SandwichSet s = sandwich(div, t, g);
  const Vec2 manual = s.J.inverse() * (log_prior_gradient(PriorSpec::reference(), div, t) + 0.5 * moment_matching_drift(s));
  EXPECT_LT((a - manual).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BiasLimit, SymmetricSumEqualsCompactForm) {
  const Theta t(0.0, 1.0);
  const auto div = DivergenceSpec::density_power(0.4);
  const auto g = ContaminatedModel(0.1, 5.0).density();
  const SandwichSet s = sandwich(div, t, g);
  const Mat2 ji = s.J.inverse();
  Vec2 full = Vec2::Zero();
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          full[l] += s.g3(i, j, k) * (ji(i, j) * ji(k, l) + ji(i, k) * ji(j, l) + ji(i, l) * ji(j, k)) / 6.0;
  const Vec2 lim = posterior_mean_bias_limit(div, PriorSpec::uniform(), t, g);
  EXPECT_LT((lim - full).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Robustness, ZeroContaminationGivesZeroResidual) {
  const auto r = robustness_residual(DivergenceSpec::gamma(0.5), Theta(0.0, 1.0), 0.0, 6.0);
  EXPECT_EQ(r.max_abs(), 0.0);
  EXPECT_THROW(robustness_residual(DivergenceSpec::kl(), Theta(0.0, 1.0), 0.1, 6.0), std::invalid_argument);
}

TEST(Robustness, ResidualDecaysWithContaminationDistance) {
  const Theta t(0.0, 1.0);
  const double gamma = 0.5;
  const double eps = 0.2;
  double prev = INFINITY;
  double first_scaled = 0.0;
  for (double nu : {4.0, 6.0, 8.0, 10.0}) {
    const double r = robustness_residual(DivergenceSpec::gamma(gamma), t, eps, nu).J.cwiseAbs().maxCoeff();
    EXPECT_LT(r, prev);
    prev = r;
    const double scaled = r / (eps * std::pow(nu_value(t, GaussianMixture::normal(nu, 1.0), 1.0 + gamma), gamma));
    if (nu == 4.0) first_scaled = scaled;
    EXPECT_LE(scaled, 10.0 * first_scaled);
  }
}

TEST(Holder, AllBoundsHold) {
  const Theta t(0.0, 1.0);
  for (double g : {0.5, 1.0})
    for (double loc : {0.0, 6.0, 10.0}) {
      const auto checks = holder_bound_check(t, GaussianMixture::normal(loc, 1.0), g);
      EXPECT_EQ(checks.size(), 22u);
      for (const auto& c : checks) EXPECT_TRUE(c.holds()) << c.label << " " << c.lhs << " " << c.rhs;
    }
}

TEST(Holder, FirstBoundIsStrictlyPositiveForSymmetricDelta) {
  const auto checks = holder_bound_check(Theta(0.0, 1.0), GaussianMixture::normal(0.0, 1.0), 0.5);
  EXPECT_GT(checks.front().lhs, 0.0);
  EXPECT_GE(checks.front().rhs, checks.front().lhs);
}

TEST(Are, ReproducesPublishedTable) {
  EXPECT_EQ(format_fixed(are_h(0.01), 6), "0.951489");
  EXPECT_EQ(format_fixed(are_h(0.1), 7), "0.6222189");
  EXPECT_EQ(format_fixed(are_h(0.3), 7), "0.2731871");
  EXPECT_EQ(format_fixed(are_h(0.5), 7), "0.1359501");
  // h'(0) = -5, so 1 - h(gamma) ~ 5 gamma near zero.
  EXPECT_NEAR((1.0 - are_h(1e-6)) / 1e-6, 5.0, 1e-4);
  EXPECT_GT(are_h(1e-8), 0.9999999);
  EXPECT_DOUBLE_EQ(are_h(0.0), 1.0);
  EXPECT_THROW(are_h(-0.1), std::invalid_argument);
}

TEST(Are, StrictlyDecreasing) {
  for (int k = 1; k <= 150; ++k) EXPECT_LT(are_h(0.01 * k), are_h(0.01 * (k - 1)));
}

TEST(Are, SandwichRatioMatchesIndependentEvaluation) {
  // Oracles: 20-digit evaluation of J^{-1} I J^{-1} from the kernel definitions.
  EXPECT_NEAR(numerical_are(DivergenceSpec::gamma(0.1)), 0.98151354581845353, 1e-9);
  EXPECT_NEAR(numerical_are(DivergenceSpec::gamma(0.3)), 0.88462695588660713, 1e-9);
  EXPECT_NEAR(numerical_are(DivergenceSpec::gamma(0.5)), 0.76904970017546685, 1e-9);
}

TEST(Are, LocationVarianceIsClassical) {
  for (double g : {0.1, 0.5, 1.0}) {
    const Theta t(0.0, 1.0);
    const Mat2 v = sandwich_covariance(sandwich(DivergenceSpec::gamma(g), t, GaussianMixture::clean(t)));
    EXPECT_NEAR(v(0, 0), std::pow(1.0 + g, 3) / std::pow(1.0 + 2.0 * g, 1.5), 1e-10);
  }
}

TEST(PopulationRisk, CleanModelMinimiserIsTruth) {
  for (const auto& div : {DivergenceSpec::kl(), DivergenceSpec::density_power(0.5), DivergenceSpec::gamma(0.5)}) {
    const Theta m = population_risk_minimizer(div, GaussianMixture::normal(0.0, 1.0), Theta(0.3, 1.5));
    EXPECT_NEAR(m.mu(), 0.0, 1e-8) << div.to_string();
    EXPECT_NEAR(m.sigma(), 1.0, 1e-8) << div.to_string();
  }
}

TEST(PopulationRisk, KlUnderContaminationIsMixtureMoments) {
  const ContaminatedModel g(0.2, 6.0);
  const Theta m = population_risk_minimizer(DivergenceSpec::kl(), g.density(), Theta(1.0, 2.0));
  EXPECT_NEAR(m.mu(), 1.2, 1e-7);
  EXPECT_NEAR(m.sigma(), std::sqrt(1.0 + 0.2 * 0.8 * 36.0), 1e-7);
}

TEST(PopulationRisk, GammaIsNearlyUnaffectedByDistantContamination) {
  const Theta m = population_risk_minimizer(DivergenceSpec::gamma(0.5), ContaminatedModel(0.2, 10.0).density(), Theta(0.0, 1.0));
  EXPECT_NEAR(m.mu(), 0.0, 1e-3);
  EXPECT_NEAR(m.sigma(), 1.0, 1e-3);
}
