#pragma once

// Objective priors for the (mu, sigma) normal model. Every prior here is
// improper and flat in mu; log-priors are defined up to an additive constant.

#include "robust_bayes/core.hpp"
#include "robust_bayes/gauss_rules.hpp"
#include "robust_bayes/losses.hpp"
#include "robust_bayes/sandwich.hpp"

#include <string>
#include <string_view>

namespace robust_bayes {

class PriorSpec {
 public:
  enum class Kind { Uniform, Reference, MomentMatching };

  constexpr PriorSpec() = default;
  constexpr explicit PriorSpec(Kind kind) : kind_(kind) {}

  static constexpr PriorSpec uniform() { return PriorSpec(Kind::Uniform); }
  static constexpr PriorSpec reference() { return PriorSpec(Kind::Reference); }
  static constexpr PriorSpec moment_matching() { return PriorSpec(Kind::MomentMatching); }

  /// Accepts "uniform", "reference" or "mm".
  static PriorSpec parse(std::string_view text) {
    if (text == "uniform") return uniform();
    if (text == "reference") return reference();
    if (text == "mm") return moment_matching();
    throw std::invalid_argument("unknown prior '" + std::string(text) + "'");
  }

  [[nodiscard]] constexpr Kind kind() const { return kind_; }

  [[nodiscard]] std::string to_string() const {
    switch (kind_) {
      case Kind::Uniform:
        return "uniform";
      case Kind::Reference:
        return "reference";
      case Kind::MomentMatching:
        return "mm";
    }
    return {};
  }

  friend constexpr bool operator==(const PriorSpec&, const PriorSpec&) = default;

 private:
  Kind kind_ = Kind::Uniform;
};

/// The constant C_M of the formal moment matching prior sigma^{C_M/2} for the
/// density power posterior.
inline double density_power_mm_constant(double alpha) {
  const double a = alpha;
  const double pi_term = std::pow(std::numbers::pi, a / 2.0);
  const double numerator = a * std::pow(1.0 + a, 3) * (2.0 + a) + (10.0 - a * a * (-2.0 + a * (5.0 + a * (3.0 + a)))) * pi_term;
  const double denominator = (1.0 + a) * (-a * (1.0 + a) * (1.0 + a) + (-2.0 + a + a * a + a * a * a) * pi_term);
  return -(2.0 + a * a) / (1.0 + a) + numerator / denominator;
}

/// Power e of sigma in the closed-form prior pi(mu, sigma) ∝ sigma^e.
inline double prior_sigma_exponent(const PriorSpec& prior, const DivergenceSpec& div) {
  const double t = div.tuning();
  switch (prior.kind()) {
    case PriorSpec::Kind::Uniform:
      return 0.0;
    case PriorSpec::Kind::Reference:
      switch (div.kind()) {
        case DivergenceSpec::Kind::KL:
          return -2.0;
        case DivergenceSpec::Kind::DensityPower:
          return -2.0 - t;
        case DivergenceSpec::Kind::Gamma:
          return -3.0 + 1.0 / (1.0 + t);
      }
      break;
    case PriorSpec::Kind::MomentMatching:
      switch (div.kind()) {
        case DivergenceSpec::Kind::KL:
          return -3.5;
        case DivergenceSpec::Kind::DensityPower:
          return density_power_mm_constant(t) / 2.0;
        case DivergenceSpec::Kind::Gamma:
          return -(t + 7.0) / (2.0 * (1.0 + t));
      }
      break;
  }
  return 0.0;
}

/// Unnormalised log prior of the closed forms for the normal model
/// (contamination set to zero, as used in simulation).
inline double log_prior_closed(const PriorSpec& prior, const DivergenceSpec& div, const Theta& theta) {
  const double e = prior_sigma_exponent(prior, div);
  return e == 0.0 ? 0.0 : e * std::log(theta.sigma());
}

inline Vec2 log_prior_gradient(const PriorSpec& prior, const DivergenceSpec& div, const Theta& theta) {
  return {0.0, prior_sigma_exponent(prior, div) / theta.sigma()};
}

/// 0.5 * log det J^(d)(theta) with J computed under g: the log reference prior
/// up to a constant. Throws NotPositiveDefinite when J is not.
template <Density D>
double reference_prior_generic(const DivergenceSpec& div, const Theta& theta, const D& g,
                               const QuadratureOptions& opts = {}) {
  const SandwichSet s = sandwich(div, theta, g, opts);
  return 0.5 * std::log(s.J.determinant());
}

/// u_l = sum_ij g_ijl J^{ij}: twice the moment matching drift.
inline Vec2 moment_matching_drift(const SandwichSet& s) {
  const Mat2 jinv = s.J.inverse();
  Vec2 u = Vec2::Zero();
  for (int l = 0; l < 2; ++l)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) u[l] += s.g3(i, j, l) * jinv(i, j);
  return u;
}

/// Left-hand side of the moment matching equation
///   d_l log pi(theta) + 1/2 sum_ij g_ijl(theta) J^{ij}(theta)
/// for l in {mu, sigma}. The prior gradient is taken by central differences.
template <class LogPrior, Density D>
Vec2 moment_matching_residual(LogPrior&& log_prior, const DivergenceSpec& div, const Theta& theta, const D& g,
                              const QuadratureOptions& opts = {}) {
  const SandwichSet s = sandwich(div, theta, g, opts);
  const Vec2 base = theta.as_vector();
  Vec2 grad;
  for (int l = 0; l < 2; ++l) {
    const double h = 1e-6 * std::max(1.0, std::abs(base[l]));
    Vec2 up = base;
    Vec2 down = base;
    up[l] += h;
    down[l] -= h;
    grad[l] = (log_prior(Theta::from_vector(up)) - log_prior(Theta::from_vector(down))) / (2.0 * h);
  }
  return grad + 0.5 * moment_matching_drift(s);
}

/// Power of sigma in the moment matching prior, obtained by integrating
///   d log pi / d sigma = -u_sigma(sigma) / 2
/// over sigma in [1, e] under the clean model (mu = 0). For the normal model
/// u_mu vanishes and u_sigma depends on sigma only, so the solution is a
/// power law and the integral equals its exponent.
inline double mm_prior_exponent_1d(const DivergenceSpec& div, const QuadratureOptions& opts = {}) {
  const GaussRule rule = gauss_legendre(10);
  const double lo = 1.0;
  const double hi = std::numbers::e;
  double integral = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double sigma = 0.5 * (hi + lo) + 0.5 * (hi - lo) * rule.nodes[k];
    const Theta theta(0.0, sigma);
    const SandwichSet s = sandwich(div, theta, GaussianMixture::clean(theta), opts);
    integral += 0.5 * (hi - lo) * rule.weights[k] * moment_matching_drift(s)[kSigma];
  }
  return -0.5 * integral;
}

}  // namespace robust_bayes
