#include "robust_bayes/losses.hpp"
#include "verify.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <gtest/gtest.h>

#include <random>

using namespace robust_bayes;

namespace {

double boost_integral(const std::function<double(double)>& f) {
  return boost::math::quadrature::sinh_sinh<double>().integrate(f);
}

double gaussian_pdf(double x, double mu, double sigma) {
  return std::exp(-(x - mu) * (x - mu) / (2 * sigma * sigma)) / std::sqrt(2 * std::numbers::pi * sigma * sigma);
}

}  // namespace

TEST(DivergenceSpec, ParseAndPrint) {
  EXPECT_EQ(DivergenceSpec::parse("kl"), DivergenceSpec::kl());
  EXPECT_EQ(DivergenceSpec::parse("gamma:0.5"), DivergenceSpec::gamma(0.5));
  EXPECT_EQ(DivergenceSpec::parse("alpha:0.3").to_string(), "alpha:0.3");
  EXPECT_EQ(DivergenceSpec::parse(DivergenceSpec::gamma(0.7).to_string()), DivergenceSpec::gamma(0.7));
  EXPECT_THROW(DivergenceSpec::parse("gamma:0"), std::invalid_argument);
  EXPECT_THROW(DivergenceSpec::parse("gamma:-1"), std::invalid_argument);
  EXPECT_THROW(DivergenceSpec::parse("beta:0.5"), std::invalid_argument);
  EXPECT_THROW(DivergenceSpec::parse("gamma:abc"), std::invalid_argument);
}

TEST(Losses, KernelsMatchTheirDefinitions) {
  const Theta t(0.4, 1.3);
  for (double x : {-3.0, 0.0, 0.4, 2.2, 9.0}) {
    const double f = gaussian_pdf(x, 0.4, 1.3);
    EXPECT_NEAR(q_value(DivergenceSpec::kl(), x, t), std::log(f), 1e-12);
    for (double a : {0.2, 0.5, 1.0}) {
      const double p = boost_integral([&](double y) { return std::pow(gaussian_pdf(y, 0.4, 1.3), 1.0 + a); });
      EXPECT_NEAR(q_value(DivergenceSpec::density_power(a), x, t), std::pow(f, a) / a - p / (1.0 + a), 1e-12);
      EXPECT_NEAR(q_value(DivergenceSpec::gamma(a), x, t), std::pow(f, a) * std::pow(p, -a / (1.0 + a)) / a, 1e-12);
    }
  }
}

TEST(Losses, SumMatchesPointwise) {
  const std::vector<double> xs{-1.0, 0.3, 2.0, 7.5, -0.2};
  const Theta t(0.1, 0.9);
  for (const auto& div : {DivergenceSpec::kl(), DivergenceSpec::density_power(0.3), DivergenceSpec::gamma(0.7)}) {
    double s = 0.0;
    for (double x : xs) s += q_value(div, x, t);
    EXPECT_NEAR(sum_q(div, xs, t), s, 1e-12 * (1 + std::abs(s)));
    EXPECT_NEAR(empirical_risk(div, xs, t), -s / xs.size(), 1e-12 * (1 + std::abs(s)));
  }
  EXPECT_THROW(empirical_risk(DivergenceSpec::kl(), std::vector<double>{}, t), std::invalid_argument);
}

TEST(Losses, TiltedMomentsMatchBoost) {
  const Theta t(-0.5, 1.7);
  const double g = 0.6;
  const TiltedMoments m = tilted_moments(t, g);
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double lo = t.mu() - 40.0 * t.sigma();
  const double hi = t.mu() + 40.0 * t.sigma();
  const double first_sigma = GK::integrate(
      [&](double y) { return std::pow(density(y, t), 1.0 + g) * log_derivs(y, t).grad[1]; }, lo, hi, 15, 1e-14);
  const double second_ss = GK::integrate(
      [&](double y) {
        const LogDerivs d = log_derivs(y, t);
        return std::pow(density(y, t), 1.0 + g) * ((1.0 + g) * d.grad[1] * d.grad[1] + d.hess(1, 1));
      },
      lo, hi, 15, 1e-14);
  EXPECT_NEAR(m.first[1], first_sigma, 1e-12);
  EXPECT_NEAR(m.first[0], 0.0, 1e-13);
  EXPECT_NEAR(m.second(1, 1), second_ss, 1e-12);
  EXPECT_NEAR(m.power_integral, power_integral_quadrature(t, g), 1e-12);
}

TEST(Losses, DerivativesMatchFiniteDifferencesAlpha) {
  EXPECT_LT(verify::derivative_max_error(DivergenceSpec::Kind::DensityPower, 100, 11), 1e-5);
}

TEST(Losses, DerivativesMatchFiniteDifferencesGamma) {
  EXPECT_LT(verify::derivative_max_error(DivergenceSpec::Kind::Gamma, 100, 12), 1e-5);
}

TEST(Losses, KlDerivativesAreLogDensityDerivatives) {
  const Theta t(1.0, 2.0);
  const QDerivs q = q_derivs(DivergenceSpec::kl(), 0.3, t);
  const LogDerivs l = log_derivs(0.3, t);
  EXPECT_EQ(q.grad, l.grad);
  EXPECT_EQ(q.hess, l.hess);
}

TEST(Losses, GradientOfRiskIsConsistentWithRisk) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<double> xs(40);
  for (auto& x : xs) x = n01(rng);
  const Theta t(0.2, 1.1);
  const double h = 1e-6;
  for (const auto& div : {DivergenceSpec::density_power(0.5), DivergenceSpec::gamma(0.5)}) {
    const Vec2 g = empirical_risk_gradient(div, xs, t);
    const double dmu = (empirical_risk(div, xs, Theta(0.2 + h, 1.1)) - empirical_risk(div, xs, Theta(0.2 - h, 1.1))) / (2 * h);
    const double ds = (empirical_risk(div, xs, Theta(0.2, 1.1 + h)) - empirical_risk(div, xs, Theta(0.2, 1.1 - h))) / (2 * h);
    EXPECT_NEAR(g[0], dmu, 1e-8);
    EXPECT_NEAR(g[1], ds, 1e-8);
  }
}
