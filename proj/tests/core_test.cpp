#include "robust_bayes/core.hpp"
#include "robust_bayes/gauss_rules.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace robust_bayes;

TEST(Sym3, IndexingAndArithmetic) {
  Sym3 a;
  a(0, 1, 1) = 2.0;
  a(1, 1, 1) = -5.0;
  Sym3 b = 2.0 * a;
  EXPECT_DOUBLE_EQ(b(0, 1, 1), 4.0);
  EXPECT_DOUBLE_EQ((b - a)(1, 1, 1), -5.0);
  EXPECT_DOUBLE_EQ(b.max_abs(), 10.0);
  EXPECT_DOUBLE_EQ(a(1, 0, 1), 0.0);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.0, 1e22}) EXPECT_EQ(*parse_double(format_double(v)), v);
  EXPECT_EQ(format_double(0.2), "0.2");
  EXPECT_EQ(format_fixed(0.95148903, 6), "0.951489");
}

TEST(Parse, RejectsGarbage) {
  EXPECT_FALSE(parse_double("1.5x"));
  EXPECT_FALSE(parse_double(""));
  EXPECT_EQ(*parse_double("+2"), 2.0);
  EXPECT_EQ(*parse_integer("42"), 42);
  EXPECT_FALSE(parse_integer("4.2"));
}

TEST(GaussRules, LegendreIntegratesPolynomialsExactly) {
  const GaussRule r = gauss_legendre(10);
  for (int k = 0; k < 20; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    const double exact = k % 2 == 0 ? 2.0 / (k + 1) : 0.0;
    EXPECT_NEAR(s, exact, 1e-13) << "degree " << k;
  }
}

TEST(GaussRules, HermiteReproducesNormalMoments) {
  const GaussRule r = gauss_hermite_normal(24);
  double double_factorial = 1.0;
  for (int k = 0; k <= 20; k += 2) {
    if (k > 0) double_factorial *= (k - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], k);
    EXPECT_NEAR(s / double_factorial, 1.0, 1e-11) << "moment " << k;
  }
}
