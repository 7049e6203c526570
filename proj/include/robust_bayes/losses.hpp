#pragma once

// Loss kernels q^(d)(x; theta) whose sum over the sample is the exponent of
// the quasi-posterior. Additive constants in theta are dropped, so q^(KL) is
// the log-density, q^(alpha) = f^alpha/alpha - P_alpha/(1+alpha) and
// q^(gamma) = f^gamma P_gamma^{-gamma/(1+gamma)} / gamma, where P_t is the
// integral of f^{1+t}.

#include "robust_bayes/core.hpp"
#include "robust_bayes/model.hpp"

#include <span>
#include <string>
#include <string_view>

namespace robust_bayes {

class DivergenceSpec {
 public:
  enum class Kind { KL, DensityPower, Gamma };

  static DivergenceSpec kl() { return DivergenceSpec(Kind::KL, 0.0); }
  static DivergenceSpec density_power(double alpha) { return DivergenceSpec(Kind::DensityPower, alpha); }
  static DivergenceSpec gamma(double gamma) { return DivergenceSpec(Kind::Gamma, gamma); }

  /// Accepts "kl", "alpha:<x>" or "gamma:<x>".
  static DivergenceSpec parse(std::string_view text) {
    if (text == "kl") return kl();
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("unknown divergence '" + std::string(text) + "'");
    const auto name = text.substr(0, colon);
    const auto value = parse_double(text.substr(colon + 1));
    if (!value) throw std::invalid_argument("bad tuning parameter in '" + std::string(text) + "'");
    if (name == "alpha") return density_power(*value);
    if (name == "gamma") return gamma(*value);
    throw std::invalid_argument("unknown divergence '" + std::string(text) + "'");
  }

  [[nodiscard]] Kind kind() const { return kind_; }
  /// alpha or gamma; zero for KL.
  [[nodiscard]] double tuning() const { return tuning_; }

  [[nodiscard]] std::string name() const {
    switch (kind_) {
      case Kind::KL:
        return "kl";
      case Kind::DensityPower:
        return "alpha";
      case Kind::Gamma:
        return "gamma";
    }
    return {};
  }

  [[nodiscard]] std::string to_string() const {
    return kind_ == Kind::KL ? name() : name() + ":" + format_double(tuning_);
  }

  friend bool operator==(const DivergenceSpec&, const DivergenceSpec&) = default;

 private:
  DivergenceSpec(Kind kind, double tuning) : kind_(kind), tuning_(tuning) {
    if (kind != Kind::KL && !(tuning > 0.0 && std::isfinite(tuning)))
      throw std::invalid_argument("divergence tuning parameter must be positive and finite");
  }

  Kind kind_;
  double tuning_;
};

/// q and its partials in (mu, sigma) up to third order.
struct QDerivs {
  double q = 0.0;
  Vec2 grad = Vec2::Zero();
  Mat2 hess = Mat2::Zero();
  Sym3 third;
};

/// x-independent integrals against f^{1+t} that enter the derivatives of
/// q^(alpha) (t = alpha) and q^(gamma) (t = gamma):
///   first(i)       = int f^{1+t} l_i
///   second(i,j)    = int f^{1+t} s_ij,  s_ij = (1+t) l_i l_j + l_ij
///   third(i,j,k)   = int f^{1+t} [(1+t)^2 l_i l_j l_k + s_ijk + l_ijk],
///                    s_ijk = (1+t)(l_ij l_k + l_ik l_j + l_jk l_i)
/// Each is the corresponding theta-derivative of P_t divided by (1+t).
struct TiltedMoments {
  double power_integral = 0.0;
  Vec2 first = Vec2::Zero();
  Mat2 second = Mat2::Zero();
  Sym3 third;
};

inline TiltedMoments tilted_moments(const Theta& theta, double t, const QuadratureOptions& opts = {}) {
  using Packed = Eigen::Matrix<double, 9, 1>;
  const double a = 1.0 + t;
  auto integrand = [&](double y) {
    const LogDerivs d = log_derivs(y, theta);
    const auto& l = d.grad;
    const auto& h = d.hess;
    auto t3 = [&](int i, int j, int k) {
      return a * a * l[i] * l[j] * l[k] + a * (h(i, j) * l[k] + h(i, k) * l[j] + h(j, k) * l[i]) + d.third(i, j, k);
    };
    Packed p;
    p << l[0], l[1], a * l[0] * l[0] + h(0, 0), a * l[0] * l[1] + h(0, 1), a * l[1] * l[1] + h(1, 1), t3(0, 0, 0),
        t3(0, 0, 1), t3(0, 1, 1), t3(1, 1, 1);
    return p;
  };
  const Packed p = tilted_expectation(theta, t, integrand, opts);

  TiltedMoments m;
  m.power_integral = power_integral(theta, t);
  m.first << p[0], p[1];
  m.second << p[2], p[3], p[3], p[4];
  const std::array<double, 4> by_sigma_count{p[5], p[6], p[7], p[8]};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) m.third(i, j, k) = by_sigma_count[static_cast<std::size_t>(i + j + k)];
  return m;
}

/// A loss kernel bound to one (divergence, theta) pair. The tilted moments
/// are x-independent, so they are computed once here and shared by every
/// derivs() call on this object.
class LossKernel {
 public:
  LossKernel(const DivergenceSpec& div, const Theta& theta, const QuadratureOptions& opts = {})
      : div_(div), theta_(theta) {
    if (div_.kind() != DivergenceSpec::Kind::KL) moments_ = tilted_moments(theta_, div_.tuning(), opts);
  }

  [[nodiscard]] const DivergenceSpec& divergence() const { return div_; }
  [[nodiscard]] const Theta& theta() const { return theta_; }
  [[nodiscard]] const TiltedMoments& moments() const { return moments_; }

  [[nodiscard]] double value(double x) const { return q_value_unchecked(div_, x, theta_); }

  [[nodiscard]] QDerivs derivs(double x) const {
    switch (div_.kind()) {
      case DivergenceSpec::Kind::KL:
        return kl_derivs(x);
      case DivergenceSpec::Kind::DensityPower:
        return density_power_derivs(x);
      case DivergenceSpec::Kind::Gamma:
        return gamma_derivs(x);
    }
    return {};
  }

  static double q_value_unchecked(const DivergenceSpec& div, double x, const Theta& theta) {
    const double lf = log_density(x, theta);
    const double t = div.tuning();
    switch (div.kind()) {
      case DivergenceSpec::Kind::KL:
        return lf;
      case DivergenceSpec::Kind::DensityPower:
        return std::exp(t * lf) / t - power_integral(theta, t) / (1.0 + t);
      case DivergenceSpec::Kind::Gamma:
        return std::exp(t * lf - t / (1.0 + t) * std::log(power_integral(theta, t))) / t;
    }
    return 0.0;
  }

 private:
  [[nodiscard]] QDerivs kl_derivs(double x) const {
    const LogDerivs d = log_derivs(x, theta_);
    return {d.l, d.grad, d.hess, d.third};
  }

  [[nodiscard]] QDerivs density_power_derivs(double x) const {
    const double alpha = div_.tuning();
    const LogDerivs d = log_derivs(x, theta_);
    const double fa = std::exp(alpha * d.l);
    const auto& l = d.grad;
    const auto& h = d.hess;

    QDerivs out;
    out.q = fa / alpha - moments_.power_integral / (1.0 + alpha);
    out.grad = fa * l - moments_.first;
    out.hess = fa * (alpha * l * l.transpose() + h) - moments_.second;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          out.third(i, j, k) = fa * (alpha * alpha * l[i] * l[j] * l[k] +
                                     alpha * (h(i, j) * l[k] + h(i, k) * l[j] + h(j, k) * l[i]) + d.third(i, j, k)) -
                               moments_.third(i, j, k);
    return out;
  }

  // Product rule on (1/gamma) f^gamma * P^{-gamma/(1+gamma)}. With
  // N = P^{1/(1+gamma)} (the L_{1+gamma} norm of f), c_m = N^{-(m + (m+1) gamma)}.
  [[nodiscard]] QDerivs gamma_derivs(double x) const {
    const double g = div_.tuning();
    const LogDerivs d = log_derivs(x, theta_);
    const auto& l = d.grad;
    const auto& h = d.hess;
    const auto& S = moments_.first;
    const auto& SS = moments_.second;
    const auto& T = moments_.third;

    const double log_p = std::log(moments_.power_integral);
    const double fg = std::exp(g * d.l);
    const double c0 = fg * std::exp(-g / (1.0 + g) * log_p);
    const double c1 = fg * std::exp(-(1.0 + 2.0 * g) / (1.0 + g) * log_p);
    const double c2 = fg * std::exp(-(2.0 + 3.0 * g) / (1.0 + g) * log_p);
    const double c3 = fg * std::exp(-(3.0 + 4.0 * g) / (1.0 + g) * log_p);

    QDerivs out;
    out.q = c0 / g;
    out.grad = c0 * l - c1 * S;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.hess(i, j) = c0 * (g * l[i] * l[j] + h(i, j)) - g * c1 * (l[j] * S[i] + l[i] * S[j]) +
                         (1.0 + 2.0 * g) * c2 * S[i] * S[j] - c1 * SS(i, j);

    const double g2 = g * g;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          double v = c0 * (g2 * l[i] * l[j] * l[k] + g * (h(i, j) * l[k] + h(i, k) * l[j] + h(j, k) * l[i]) +
                           d.third(i, j, k));
          v -= c1 * ((g2 * l[j] * l[k] + g * h(j, k)) * S[i] + (g2 * l[i] * l[k] + g * h(i, k)) * S[j] +
                     (g2 * l[i] * l[j] + g * h(i, j)) * S[k]);
          v += g * (1.0 + 2.0 * g) * c2 * (l[k] * S[i] * S[j] + l[j] * S[i] * S[k] + l[i] * S[j] * S[k]);
          v += (1.0 + 2.0 * g) * c2 * (S[k] * SS(i, j) + S[j] * SS(i, k) + S[i] * SS(j, k));
          v -= g * c1 * (l[k] * SS(i, j) + l[j] * SS(i, k) + l[i] * SS(j, k));
          v -= (1.0 + 2.0 * g) * (2.0 + 3.0 * g) * c3 * S[i] * S[j] * S[k];
          v -= c1 * T(i, j, k);
          out.third(i, j, k) = v;
        }
      }
    }
    return out;
  }

  DivergenceSpec div_;
  Theta theta_;
  TiltedMoments moments_;
};

inline double q_value(const DivergenceSpec& div, double x, const Theta& theta) {
  return LossKernel::q_value_unchecked(div, x, theta);
}

inline QDerivs q_derivs(const DivergenceSpec& div, double x, const Theta& theta) {
  return LossKernel(div, theta).derivs(x);
}

/// Sum of q over the sample: the quasi-log-likelihood. Uses the closed-form
/// power integral and one pass over the data.
inline double sum_q(const DivergenceSpec& div, std::span<const double> sample, const Theta& theta) {
  const double mu = theta.mu();
  const double sigma = theta.sigma();
  const double n = static_cast<double>(sample.size());
  const double t = div.tuning();
  const double inv2s2 = 0.5 / (sigma * sigma);
  switch (div.kind()) {
    case DivergenceSpec::Kind::KL: {
      double ss = 0.0;
      for (double x : sample) ss += (x - mu) * (x - mu);
      return -n * (0.5 * kLog2Pi + std::log(sigma)) - ss * inv2s2;
    }
    case DivergenceSpec::Kind::DensityPower: {
      double acc = 0.0;
      const double c = -t * inv2s2;
      for (double x : sample) acc += std::exp(c * (x - mu) * (x - mu));
      const double norm = std::exp(-t * (0.5 * kLog2Pi + std::log(sigma)));
      return norm * acc / t - n * power_integral(theta, t) / (1.0 + t);
    }
    case DivergenceSpec::Kind::Gamma: {
      double acc = 0.0;
      const double c = -t * inv2s2;
      for (double x : sample) acc += std::exp(c * (x - mu) * (x - mu));
      const double log_scale =
          -t * (0.5 * kLog2Pi + std::log(sigma)) - t / (1.0 + t) * std::log(power_integral(theta, t));
      return std::exp(log_scale) * acc / t;
    }
  }
  return 0.0;
}

/// -(1/n) sum_i q(x_i; theta): the empirical cross entropy up to theta-free constants.
inline double empirical_risk(const DivergenceSpec& div, std::span<const double> sample, const Theta& theta) {
  if (sample.empty()) throw std::invalid_argument("empirical_risk: empty sample");
  return -sum_q(div, sample, theta) / static_cast<double>(sample.size());
}

/// Gradient of empirical_risk with respect to (mu, sigma).
inline Vec2 empirical_risk_gradient(const DivergenceSpec& div, std::span<const double> sample, const Theta& theta) {
  if (sample.empty()) throw std::invalid_argument("empirical_risk_gradient: empty sample");
  const LossKernel kernel(div, theta);
  Vec2 g = Vec2::Zero();
  for (double x : sample) g -= kernel.derivs(x).grad;
  return g / static_cast<double>(sample.size());
}

}  // namespace robust_bayes
