#pragma once

// Quasi-posterior evaluation, posterior means and minimum-divergence point
// estimation.

#include "robust_bayes/core.hpp"
#include "robust_bayes/gauss_rules.hpp"
#include "robust_bayes/losses.hpp"
#include "robust_bayes/nelder_mead.hpp"
#include "robust_bayes/priors.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace robust_bayes {

/// sum_i q(x_i; theta) + log pi(theta), unnormalised.
inline double quasi_log_posterior(const DivergenceSpec& div, const PriorSpec& prior, std::span<const double> sample,
                                  const Theta& theta) {
  if (sample.empty()) throw std::invalid_argument("quasi_log_posterior: empty sample");
  return sum_q(div, sample, theta) + log_prior_closed(prior, div, theta);
}

struct SampleMoments {
  double mean = 0.0;
  double sd = 0.0;  // (n-1) denominator
};

inline SampleMoments sample_moments(std::span<const double> sample) {
  if (sample.size() < 2) throw std::invalid_argument("sample_moments: need at least two observations");
  const double n = static_cast<double>(sample.size());
  double mean = 0.0;
  for (double x : sample) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : sample) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

struct WeightedDraws {
  std::vector<Theta> draws;
  std::vector<double> log_weights;  // max-subtracted: the largest is 0
  double ess = 0.0;
};

struct WeightedMean {
  Theta mean{0.0, 1.0};
  Vec2 mc_standard_error = Vec2::Zero();
  double ess = 0.0;
};

/// Self-normalised weighted mean of the draws. Log-weights are shifted by
/// their maximum before exponentiation, so adding a constant to all of them
/// leaves the result unchanged.
inline WeightedMean self_normalized_mean(std::span<const Theta> draws, std::span<const double> log_weights) {
  if (draws.empty() || draws.size() != log_weights.size())
    throw std::invalid_argument("self_normalized_mean: draws and weights must be non-empty and equal length");
  double top = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights)
    if (std::isfinite(lw)) top = std::max(top, lw);
  if (!std::isfinite(top)) throw NumericalError("importance sampling: no finite log-weight");

  double sw = 0.0;
  double sw2 = 0.0;
  Vec2 acc = Vec2::Zero();
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const double w = std::isfinite(log_weights[k]) ? std::exp(log_weights[k] - top) : 0.0;
    sw += w;
    sw2 += w * w;
    acc += w * draws[k].as_vector();
  }
  const Vec2 mean = acc / sw;
  Vec2 var = Vec2::Zero();
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const double w = std::isfinite(log_weights[k]) ? std::exp(log_weights[k] - top) : 0.0;
    const Vec2 d = draws[k].as_vector() - mean;
    var += (w * w) * d.cwiseProduct(d);
  }
  WeightedMean out;
  out.mean = Theta::from_vector(mean);
  out.mc_standard_error = var.cwiseSqrt() / sw;
  out.ess = sw * sw / sw2;
  return out;
}

struct ImportanceResult {
  Theta mean{0.0, 1.0};
  Vec2 mc_standard_error = Vec2::Zero();
  WeightedDraws weighted;
  /// Set when the effective sample size is below 5% of the draws.
  bool low_ess = false;
};

inline constexpr double kInverseGammaShape = 6.0;
inline constexpr double kInverseGammaScaleFactor = 5.0;
inline constexpr int kDefaultDraws = 10000;

/// Seeds an mt19937_64 from (seed, stream) through seed_seq.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu), static_cast<std::uint32_t>(seed >> 32), stream};
  return std::mt19937_64(seq);
}

/// Posterior mean by importance sampling with independent proposals
/// mu ~ N(xbar, s^2) and sigma ~ InverseGamma(shape 6, scale 5 s), whose
/// density is proportional to sigma^{-7} exp(-5 s / sigma). Deterministic given seed.
inline ImportanceResult importance_posterior_mean(const DivergenceSpec& div, const PriorSpec& prior,
                                                  std::span<const double> sample, int n_draws, std::uint64_t seed) {
  if (sample.size() < 2) throw std::invalid_argument("importance_posterior_mean: need at least two observations");
  if (n_draws < 1) throw std::invalid_argument("importance_posterior_mean: need at least one draw");
  const SampleMoments m = sample_moments(sample);
  if (!(m.sd > 0.0)) throw NumericalError("importance_posterior_mean: sample has zero variance");

  const double shape = kInverseGammaShape;
  const double scale = kInverseGammaScaleFactor * m.sd;
  const double log_ig_const = shape * std::log(scale) - std::lgamma(shape);
  const double log_normal_const = -0.5 * kLog2Pi - std::log(m.sd);

  auto rng = make_rng(seed, 1);
  std::normal_distribution<double> normal(m.mean, m.sd);
  std::gamma_distribution<double> gamma(shape, 1.0);

  ImportanceResult out;
  auto& draws = out.weighted.draws;
  auto& lws = out.weighted.log_weights;
  draws.reserve(static_cast<std::size_t>(n_draws));
  lws.reserve(static_cast<std::size_t>(n_draws));
  for (int k = 0; k < n_draws; ++k) {
    const double mu = normal(rng);
    const double sigma = scale / gamma(rng);
    const Theta theta(mu, sigma);
    const double zm = (mu - m.mean) / m.sd;
    const double log_proposal =
        log_normal_const - 0.5 * zm * zm + log_ig_const - (shape + 1.0) * std::log(sigma) - scale / sigma;
    draws.push_back(theta);
    lws.push_back(quasi_log_posterior(div, prior, sample, theta) - log_proposal);
  }

  const WeightedMean wm = self_normalized_mean(draws, lws);
  const double top = *std::max_element(lws.begin(), lws.end(), [](double a, double b) {
    return (std::isfinite(a) ? a : -INFINITY) < (std::isfinite(b) ? b : -INFINITY);
  });
  for (auto& lw : lws) lw -= top;
  out.mean = wm.mean;
  out.mc_standard_error = wm.mc_standard_error;
  out.weighted.ess = wm.ess;
  out.low_ess = wm.ess < 0.05 * n_draws;
  return out;
}

/// (median, 1.4826 * MAD), falling back to the sample standard deviation when
/// the MAD is zero.
inline Theta robust_start(std::span<const double> sample) {
  if (sample.size() < 2) throw std::invalid_argument("robust_start: need at least two observations");
  std::vector<double> v(sample.begin(), sample.end());
  auto median_of = [](std::vector<double>& w) {
    const std::size_t n = w.size();
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n / 2), w.end());
    double med = w[n / 2];
    if (n % 2 == 0) med = 0.5 * (med + *std::max_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(n / 2)));
    return med;
  };
  const double med = median_of(v);
  for (auto& x : v) x = std::abs(x - med);
  double scale = 1.4826 * median_of(v);
  if (!(scale > 0.0)) scale = sample_moments(sample).sd;
  if (!(scale > 0.0)) throw NumericalError("robust_start: sample has zero spread");
  return {med, scale};
}

/// Local minimiser of the empirical risk: Nelder–Mead over (mu, log sigma)
/// followed by Newton polishing with the analytic Hessian. Throws
/// ConvergenceError if the gradient norm cannot be brought below 1e-6.
inline Theta minimum_divergence_estimate(const DivergenceSpec& div, std::span<const double> sample,
                                         const Theta& init, const NelderMeadOptions& opts = {}) {
  if (sample.size() < 2) throw std::invalid_argument("minimum_divergence_estimate: need at least two observations");
  auto objective = [&](const std::array<double, 2>& p) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || std::abs(p[1]) > 700.0)
      return std::numeric_limits<double>::infinity();
    return empirical_risk(div, sample, Theta(p[0], std::exp(p[1])));
  };
  const auto nm = nelder_mead<2>(objective, {init.mu(), std::log(init.sigma())}, {0.5 * init.sigma(), 0.3}, opts);
  if (!nm.converged) throw ConvergenceError("minimum_divergence_estimate: simplex search hit the iteration cap");

  Theta est(nm.x[0], std::exp(nm.x[1]));
  const double n = static_cast<double>(sample.size());
  for (int it = 0; it < 20; ++it) {
    const LossKernel kernel(div, est);
    Vec2 grad = Vec2::Zero();
    Mat2 hess = Mat2::Zero();
    for (double x : sample) {
      const QDerivs d = kernel.derivs(x);
      grad -= d.grad;
      hess -= d.hess;
    }
    grad /= n;
    hess /= n;
    if (grad.norm() < 1e-12) break;
    if (!is_positive_definite(hess)) break;
    const Vec2 next = est.as_vector() - hess.ldlt().solve(grad);
    if (!(next[kSigma] > 0.0) || !next.allFinite()) break;
    const Theta cand = Theta::from_vector(next);
    if (empirical_risk(div, sample, cand) > empirical_risk(div, sample, est) + 1e-14) break;
    est = cand;
  }
  if (empirical_risk_gradient(div, sample, est).norm() >= 1e-6)
    throw ConvergenceError("minimum_divergence_estimate: gradient did not vanish at the solution");
  return est;
}

inline Theta minimum_divergence_estimate(const DivergenceSpec& div, std::span<const double> sample) {
  return minimum_divergence_estimate(div, sample, robust_start(sample));
}

/// Quasi-posterior mean by tensor Gauss–Hermite quadrature in coordinates
/// standardised by the Laplace approximation at `centre` (typically the
/// minimum-divergence estimate). Accurate when the posterior is close to
/// normal, i.e. for moderate to large n.
inline Theta quadrature_posterior_mean(const DivergenceSpec& div, const PriorSpec& prior,
                                       std::span<const double> sample, const Theta& centre, int nodes = 24) {
  const LossKernel kernel(div, centre);
  Mat2 precision = Mat2::Zero();
  for (double x : sample) precision -= kernel.derivs(x).hess;
  precision(kSigma, kSigma) += prior_sigma_exponent(prior, div) / (centre.sigma() * centre.sigma());
  if (!is_positive_definite(precision)) throw NotPositiveDefinite("quadrature_posterior_mean: Hessian not positive definite");
  const Mat2 cov = precision.inverse();
  const Mat2 chol = cov.llt().matrixL();

  const GaussRule rule = gauss_hermite_normal(nodes);
  const double base = quasi_log_posterior(div, prior, sample, centre);
  double sw = 0.0;
  Vec2 acc = Vec2::Zero();
  for (std::size_t a = 0; a < rule.nodes.size(); ++a) {
    for (std::size_t b = 0; b < rule.nodes.size(); ++b) {
      const Vec2 t(rule.nodes[a], rule.nodes[b]);
      const Vec2 p = centre.as_vector() + chol * t;
      if (!(p[kSigma] > 0.0)) continue;
      const double lw = quasi_log_posterior(div, prior, sample, Theta::from_vector(p)) - base + 0.5 * t.squaredNorm();
      const double w = rule.weights[a] * rule.weights[b] * std::exp(lw);
      sw += w;
      acc += w * p;
    }
  }
  return Theta::from_vector(acc / sw);
}

}  // namespace robust_bayes
