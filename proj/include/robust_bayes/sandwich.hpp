#pragma once

// Data-generating densities and the sandwich quantities
//   I = E_g[dq dq^T],  J = -E_g[d d^T q],  g_ijk = E_g[d_i d_j d_k q]
// computed by quadrature.

#include "robust_bayes/core.hpp"
#include "robust_bayes/losses.hpp"
#include "robust_bayes/model.hpp"
#include "robust_bayes/quadrature.hpp"

#include <concepts>
#include <numeric>
#include <vector>

namespace robust_bayes {

/// Anything with a pdf and a list of points spanning its effective support
/// (sorted, first and last are the integration limits).
template <class D>
concept Density = requires(const D& d, double x) {
  { d.pdf(x) } -> std::convertible_to<double>;
  { d.breakpoints() } -> std::convertible_to<std::vector<double>>;
};

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double sd = 1.0;
};

class GaussianMixture {
 public:
  explicit GaussianMixture(std::vector<GaussianComponent> components) : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
    double total = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight >= 0.0) || !(c.sd > 0.0) || !std::isfinite(c.mean))
        throw std::invalid_argument("GaussianMixture: invalid component");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("GaussianMixture: weights must sum to one");
  }

  static GaussianMixture normal(double mean, double sd) { return GaussianMixture({{1.0, mean, sd}}); }
  static GaussianMixture clean(const Theta& theta) { return normal(theta.mu(), theta.sigma()); }

  [[nodiscard]] double pdf(double x) const {
    double p = 0.0;
    for (const auto& c : components_) p += c.weight * density(x, Theta(c.mean, c.sd));
    return p;
  }

  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> pts;
    for (const auto& c : components_) {
      pts.push_back(c.mean - 12.0 * c.sd);
      pts.push_back(c.mean);
      pts.push_back(c.mean + 12.0 * c.sd);
    }
    return make_breakpoints(std::move(pts));
  }

  [[nodiscard]] const std::vector<GaussianComponent>& components() const { return components_; }

 private:
  std::vector<GaussianComponent> components_;
};

/// g(x) = (1 - eps) N(0, 1) + eps N(nu, 1).
struct ContaminatedModel {
  double eps = 0.0;
  double nu = 0.0;

  ContaminatedModel(double eps_, double nu_) : eps(eps_), nu(nu_) {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("contamination ratio must lie in [0, 1)");
    if (!std::isfinite(nu)) throw std::invalid_argument("contamination location must be finite");
  }

  /// Zero-weight components are dropped, so eps = 0 is exactly the clean model.
  [[nodiscard]] GaussianMixture density() const {
    if (eps == 0.0) return GaussianMixture::normal(0.0, 1.0);
    return GaussianMixture({{1.0 - eps, 0.0, 1.0}, {eps, nu, 1.0}});
  }
  [[nodiscard]] double pdf(double x) const { return density().pdf(x); }
  [[nodiscard]] std::vector<double> breakpoints() const { return density().breakpoints(); }
};

namespace detail {

inline std::vector<double> with_theta_breaks(std::vector<double> pts, const Theta& theta) {
  pts.push_back(theta.mu() - 12.0 * theta.sigma());
  pts.push_back(theta.mu());
  pts.push_back(theta.mu() + 12.0 * theta.sigma());
  return make_breakpoints(std::move(pts));
}

}  // namespace detail

/// E_g[h(X)] by quadrature; `theta` adds breakpoints for integrands that
/// carry f_theta-shaped features. Gaussian mixtures are integrated one
/// component at a time over that component's range (linearity of E_g).
template <Density D, class F>
auto expectation(const D& g, const Theta& theta, F&& h, const QuadratureOptions& opts = {}) {
  using V = integrand_value_t<F>;
  if constexpr (requires { g.components(); }) {
    bool first = true;
    V total{};
    for (const auto& c : g.components()) {
      if (c.weight == 0.0) continue;
      const Theta comp(c.mean, c.sd);
      const auto pts = detail::with_theta_breaks({c.mean - 12.0 * c.sd, c.mean, c.mean + 12.0 * c.sd}, theta);
      auto weighted = [&](double x) { return V(density(x, comp) * h(x)); };
      V part = integrate(weighted, std::span<const double>(pts), opts);
      if (first) {
        total = c.weight * part;
        first = false;
      } else {
        total += c.weight * part;
      }
    }
    return total;
  } else {
    const auto pts = detail::with_theta_breaks(g.breakpoints(), theta);
    auto weighted = [&](double x) { return V(g.pdf(x) * h(x)); };
    return integrate(weighted, std::span<const double>(pts), opts);
  }
}

struct SandwichSet {
  Mat2 I = Mat2::Zero();
  Mat2 J = Mat2::Zero();
  Sym3 g3;
};

inline bool is_positive_definite(const Mat2& m) {
  return m(0, 0) > 0.0 && m(1, 1) > 0.0 && m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0) > 0.0;
}

/// I, J and g_ijk without the positive-definiteness check on J.
template <Density D>
SandwichSet sandwich_unchecked(const LossKernel& kernel, const D& g, const QuadratureOptions& opts = {}) {
  using Packed = Eigen::Matrix<double, 10, 1>;
  auto integrand = [&](double x) {
    const QDerivs d = kernel.derivs(x);
    Packed p;
    p << d.grad[0] * d.grad[0], d.grad[0] * d.grad[1], d.grad[1] * d.grad[1], d.hess(0, 0), d.hess(0, 1),
        d.hess(1, 1), d.third(0, 0, 0), d.third(0, 0, 1), d.third(0, 1, 1), d.third(1, 1, 1);
    return p;
  };
  const Packed p = expectation(g, kernel.theta(), integrand, opts);
  SandwichSet s;
  s.I << p[0], p[1], p[1], p[2];
  s.J << -p[3], -p[4], -p[4], -p[5];
  const std::array<double, 4> by_sigma_count{p[6], p[7], p[8], p[9]};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) s.g3(i, j, k) = by_sigma_count[static_cast<std::size_t>(i + j + k)];
  return s;
}

template <Density D>
SandwichSet sandwich(const DivergenceSpec& div, const Theta& theta, const D& g, const QuadratureOptions& opts = {}) {
  SandwichSet s = sandwich_unchecked(LossKernel(div, theta, opts), g, opts);
  if (!is_positive_definite(s.J)) throw NotPositiveDefinite("J is not positive definite at this (divergence, theta, g)");
  return s;
}

inline SandwichSet sandwich(const DivergenceSpec& div, const Theta& theta, const ContaminatedModel& g,
                            const QuadratureOptions& opts = {}) {
  return sandwich(div, theta, g.density(), opts);
}

}  // namespace robust_bayes
