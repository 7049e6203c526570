#pragma once

// Univariate normal model N(mu, sigma^2), parameterised by the standard
// deviation. Partials are with respect to (mu, sigma).

#include "robust_bayes/core.hpp"
#include "robust_bayes/quadrature.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace robust_bayes {

/// A point (mu, sigma) of the parameter space; sigma > 0, both finite.
class Theta {
 public:
  Theta(double mu, double sigma) : mu_(mu), sigma_(sigma) {
    if (!std::isfinite(mu) || !std::isfinite(sigma) || !(sigma > 0.0)) {
      std::ostringstream msg;
      msg << "invalid parameter point (mu=" << mu << ", sigma=" << sigma << ")";
      throw std::invalid_argument(msg.str());
    }
  }

  [[nodiscard]] double mu() const { return mu_; }
  [[nodiscard]] double sigma() const { return sigma_; }
  [[nodiscard]] Vec2 as_vector() const { return {mu_, sigma_}; }

  static Theta from_vector(const Vec2& v) { return {v[kMu], v[kSigma]}; }

  friend bool operator==(const Theta&, const Theta&) = default;

 private:
  double mu_;
  double sigma_;
};

/// log f_theta(x) and its partials up to third order.
struct LogDerivs {
  double l = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  Sym3 third;
};

inline double log_density(double x, const Theta& theta) {
  const double z = (x - theta.mu()) / theta.sigma();
  return -0.5 * kLog2Pi - std::log(theta.sigma()) - 0.5 * z * z;
}

inline double density(double x, const Theta& theta) { return std::exp(log_density(x, theta)); }

/// f_theta(x)^power, evaluated in the log domain.
inline double density_power(double x, const Theta& theta, double power) {
  return std::exp(power * log_density(x, theta));
}

inline LogDerivs log_derivs(double x, const Theta& theta) {
  const double s = theta.sigma();
  const double z = x - theta.mu();
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double s4 = s3 * s;
  const double s5 = s4 * s;
  const double z2 = z * z;

  LogDerivs d;
  d.l = log_density(x, theta);
  d.grad << z / s2, -1.0 / s + z2 / s3;
  d.hess << -1.0 / s2, -2.0 * z / s3, -2.0 * z / s3, 1.0 / s2 - 3.0 * z2 / s4;

  const double mms = 2.0 / s3;
  const double mss = 6.0 * z / s4;
  d.third(kMu, kMu, kMu) = 0.0;
  d.third(kMu, kMu, kSigma) = d.third(kMu, kSigma, kMu) = d.third(kSigma, kMu, kMu) = mms;
  d.third(kMu, kSigma, kSigma) = d.third(kSigma, kMu, kSigma) = d.third(kSigma, kSigma, kMu) = mss;
  d.third(kSigma, kSigma, kSigma) = -2.0 / s3 + 12.0 * z2 / s5;
  return d;
}

/// Half-width of the integration window for integrands weighted by
/// f_theta^{1+gamma}; the weight has standard deviation sigma/sqrt(1+gamma).
inline double tilted_half_width(const Theta& theta, double gamma) {
  return 12.0 * theta.sigma() / std::sqrt(std::min(1.0, 1.0 + gamma));
}

/// Closed form of the integral of f_theta^{1+gamma}: (2 pi sigma^2)^{-gamma/2} (1+gamma)^{-1/2}.
inline double power_integral(const Theta& theta, double gamma) {
  if (!(gamma > -1.0)) throw std::domain_error("power_integral: gamma must exceed -1");
  const double log_value =
      -0.5 * gamma * (kLog2Pi + 2.0 * std::log(theta.sigma())) - 0.5 * std::log1p(gamma);
  return std::exp(log_value);
}

/// Integral of f_theta(y)^{1+gamma} * integrand(y) over the real line, by
/// adaptive quadrature. The integrand may return a scalar or an Eigen vector.
template <class F>
auto tilted_expectation(const Theta& theta, double gamma, F&& integrand, const QuadratureOptions& opts = {}) {
  if (!(gamma > -1.0)) throw std::domain_error("tilted_expectation: gamma must exceed -1");
  const double w = tilted_half_width(theta, gamma);
  const std::array<double, 3> pts{theta.mu() - w, theta.mu(), theta.mu() + w};
  auto weighted = [&](double y) {
    using V = integrand_value_t<F>;
    return V(density_power(y, theta, 1.0 + gamma) * integrand(y));
  };
  return integrate(weighted, std::span<const double>(pts), opts);
}

/// Quadrature route for power_integral; used to cross-check the closed form.
inline double power_integral_quadrature(const Theta& theta, double gamma, const QuadratureOptions& opts = {}) {
  return tilted_expectation(theta, gamma, [](double) { return 1.0; }, opts);
}

}  // namespace robust_bayes
