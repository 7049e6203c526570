#pragma once

// Large-sample quantities: the posterior-mean bias limit, robustness residuals
// under contamination, the Hölder bounds behind them and asymptotic relative
// efficiency.

#include "robust_bayes/core.hpp"
#include "robust_bayes/losses.hpp"
#include "robust_bayes/model.hpp"
#include "robust_bayes/nelder_mead.hpp"
#include "robust_bayes/priors.hpp"
#include "robust_bayes/sandwich.hpp"

#include <string>
#include <vector>

namespace robust_bayes {

/// (∫ delta(x) f_theta(x)^gamma0 dx)^{1/gamma0}.
template <Density D>
double nu_value(const Theta& theta, const D& delta, double gamma0, const QuadratureOptions& opts = {}) {
  if (!(gamma0 > 0.0)) throw std::invalid_argument("nu_value: gamma0 must be positive");
  QuadratureOptions o = opts;
  o.abs_tol = 0.0;
  const double integral =
      expectation(delta, theta, [&](double x) { return density_power(x, theta, gamma0); }, o);
  return std::pow(integral, 1.0 / gamma0);
}

/// Limit in probability of n (posterior mean - minimum divergence estimate):
///   sum_i d_i log pi J^{il} + 1/2 sum_ijk g_ijk J^{ij} J^{kl}.
/// theta_g must minimise d(g, f_theta).
template <Density D>
Vec2 posterior_mean_bias_limit(const DivergenceSpec& div, const PriorSpec& prior, const Theta& theta_g, const D& g,
                                const QuadratureOptions& opts = {}) {
  const SandwichSet s = sandwich(div, theta_g, g, opts);
  const Mat2 jinv = s.J.inverse();
  const Vec2 half_u = 0.5 * moment_matching_drift(s);
  return jinv * (log_prior_gradient(prior, div, theta_g) + half_u);
}

inline Vec2 posterior_mean_bias_limit(const DivergenceSpec& div, const PriorSpec& prior, const Theta& theta_g,
                                       const ContaminatedModel& g, const QuadratureOptions& opts = {}) {
  return posterior_mean_bias_limit(div, prior, theta_g, g.density(), opts);
}

struct RobustnessResidual {
  Mat2 J = Mat2::Zero();
  Sym3 g3;
  [[nodiscard]] double max_abs() const { return std::max(J.cwiseAbs().maxCoeff(), g3.max_abs()); }
};

/// J(theta; g) - (1 - eps) h(theta) and g_ijk(theta; g) - (1 - eps) g~_ijk(theta)
/// for g = (1 - eps) N(0, 1) + eps N(nu, 1), where h and g~ are the
/// expectations under N(0, 1). Gamma divergence only.
inline RobustnessResidual robustness_residual(const DivergenceSpec& div, const Theta& theta, double eps, double nu,
                                              const QuadratureOptions& opts = {}) {
  if (div.kind() != DivergenceSpec::Kind::Gamma)
    throw std::invalid_argument("robustness_residual: defined for the gamma divergence only");
  const ContaminatedModel g(eps, nu);
  const LossKernel kernel(div, theta, opts);
  const SandwichSet mixed = sandwich_unchecked(kernel, g.density(), opts);
  const SandwichSet clean = sandwich_unchecked(kernel, GaussianMixture::normal(0.0, 1.0), opts);
  RobustnessResidual r;
  r.J = mixed.J - (1.0 - eps) * clean.J;
  r.g3 = mixed.g3 - (1.0 - eps) * clean.g3;
  return r;
}

struct HolderCheck {
  std::string label;
  double lhs = 0.0;
  double rhs = 0.0;
  [[nodiscard]] bool holds(double rel = 1e-8) const { return lhs <= rhs * (1.0 + rel); }
};

/// Both sides of the six Hölder/Lyapunov bounds
///   ∫ |delta f^gamma L| <= nu^gamma (∫ |L|^{1+gamma} delta)^{1/(1+gamma)}
/// for L in {l_i, l_i l_j, l_ij, l_ijk, l_ij l_k, l_i l_j l_k}, over every
/// index combination. nu is the functional with the given gamma0.
template <Density D>
std::vector<HolderCheck> holder_bound_check(const Theta& theta, const D& delta, double gamma, double gamma0,
                                            const QuadratureOptions& opts = {}) {
  if (!(gamma > 0.0)) throw std::invalid_argument("holder_bound_check: gamma must be positive");
  QuadratureOptions o = opts;
  o.abs_tol = 0.0;
  const double nu = nu_value(theta, delta, gamma0, o);
  const double nu_pow = std::pow(nu, gamma);
  const char* names[2] = {"mu", "sigma"};

  std::vector<HolderCheck> out;
  auto add = [&](std::string label, auto&& term) {
    using Packed = Eigen::Vector2d;
    const Packed sides = expectation(
        delta, theta,
        [&](double x) {
          const LogDerivs d = log_derivs(x, theta);
          const double v = std::abs(term(d));
          return Packed(density_power(x, theta, gamma) * v, std::pow(v, 1.0 + gamma));
        },
        o);
    out.push_back({std::move(label), sides[0], nu_pow * std::pow(sides[1], 1.0 / (1.0 + gamma))});
  };

  for (int i = 0; i < 2; ++i) add(std::string("l_") + names[i], [=](const LogDerivs& d) { return d.grad[i]; });
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      add(std::string("l_") + names[i] + " l_" + names[j],
          [=](const LogDerivs& d) { return d.grad[i] * d.grad[j]; });
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      add(std::string("l_") + names[i] + names[j], [=](const LogDerivs& d) { return d.hess(i, j); });
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      for (int k = j; k < 2; ++k)
        add(std::string("l_") + names[i] + names[j] + names[k],
            [=](const LogDerivs& d) { return d.third(i, j, k); });
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        add(std::string("l_") + names[i] + names[j] + " l_" + names[k],
            [=](const LogDerivs& d) { return d.hess(i, j) * d.grad[k]; });
  for (int i = 0; i < 2; ++i)
    for (int j = i; j < 2; ++j)
      for (int k = j; k < 2; ++k)
        add(std::string("l_") + names[i] + " l_" + names[j] + " l_" + names[k],
            [=](const LogDerivs& d) { return d.grad[i] * d.grad[j] * d.grad[k]; });
  return out;
}

template <Density D>
std::vector<HolderCheck> holder_bound_check(const Theta& theta, const D& delta, double gamma,
                                            const QuadratureOptions& opts = {}) {
  return holder_bound_check(theta, delta, gamma, 1.0 + gamma, opts);
}

/// Asymptotic relative efficiency of the gamma-posterior mean against the
/// standard posterior mean in the normal model.
inline double are_h(double gamma) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("are_h: gamma must be non-negative");
  const double g = gamma;
  return std::sqrt(2.0 / (std::pow(1.0 + g, 6) * (1.0 + 2.0 * g) * (2.0 + 4.0 * g + 3.0 * g * g)));
}

/// J^{-1} I J^{-1}.
inline Mat2 sandwich_covariance(const SandwichSet& s) {
  const Mat2 jinv = s.J.inverse();
  return jinv * s.I * jinv;
}

/// (det V_KL / det V_d)^{1/2} from quadrature sandwiches under the clean
/// model at theta.
inline double numerical_are(const DivergenceSpec& div, const Theta& theta = Theta(0.0, 1.0),
                            const QuadratureOptions& opts = {}) {
  const auto g = GaussianMixture::clean(theta);
  const Mat2 v_kl = sandwich_covariance(sandwich(DivergenceSpec::kl(), theta, g, opts));
  const Mat2 v_d = sandwich_covariance(sandwich(div, theta, g, opts));
  return std::sqrt(v_kl.determinant() / v_d.determinant());
}

/// E_g[q(X; theta)] and its gradient and Hessian in theta.
template <Density D>
double population_cross_entropy(const DivergenceSpec& div, const Theta& theta, const D& g,
                                const QuadratureOptions& opts = {}) {
  const LossKernel kernel(div, theta, opts);
  return expectation(g, theta, [&](double x) { return kernel.value(x); }, opts);
}

/// Minimiser of d(g, f_theta), i.e. maximiser of E_g[q]: simplex search over
/// (mu, log sigma), then Newton steps on the quadrature gradient.
template <Density D>
Theta population_risk_minimizer(const DivergenceSpec& div, const D& g, const Theta& init,
                                const QuadratureOptions& opts = {}) {
  auto objective = [&](const std::array<double, 2>& p) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || std::abs(p[1]) > 50.0)
      return std::numeric_limits<double>::infinity();
    return -population_cross_entropy(div, Theta(p[0], std::exp(p[1])), g, opts);
  };
  NelderMeadOptions nm_opts;
  nm_opts.simplex_tol = 1e-7;
  const auto nm = nelder_mead<2>(objective, {init.mu(), std::log(init.sigma())}, {0.5, 0.3}, nm_opts);
  Theta est(nm.x[0], std::exp(nm.x[1]));

  using Packed = Eigen::Matrix<double, 5, 1>;
  for (int it = 0; it < 10; ++it) {
    const LossKernel kernel(div, est, opts);
    const Packed p = expectation(
        g, est,
        [&](double x) {
          const QDerivs d = kernel.derivs(x);
          Packed v;
          v << d.grad[0], d.grad[1], d.hess(0, 0), d.hess(0, 1), d.hess(1, 1);
          return v;
        },
        opts);
    const Vec2 grad(p[0], p[1]);
    if (grad.norm() < 1e-12) break;
    Mat2 hess;
    hess << p[2], p[3], p[3], p[4];
    if (!is_positive_definite(-hess)) break;
    const Vec2 next = est.as_vector() - hess.ldlt().solve(grad);
    if (!next.allFinite() || !(next[kSigma] > 0.0)) break;
    est = Theta::from_vector(next);
  }
  return est;
}

}  // namespace robust_bayes
