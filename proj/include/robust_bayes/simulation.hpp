#pragma once

// Contaminated-data generation and the bias/MSE replication harness.

#include "robust_bayes/core.hpp"
#include "robust_bayes/inference.hpp"
#include "robust_bayes/losses.hpp"
#include "robust_bayes/priors.hpp"
#include "robust_bayes/sandwich.hpp"

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace robust_bayes {

/// n iid draws from (1 - eps) N(0, 1) + eps N(nu, 1). Deterministic per seed.
inline std::vector<double> generate_sample(const ContaminatedModel& g, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("generate_sample: n must be at least 1");
  auto rng = make_rng(seed, 0);
  std::bernoulli_distribution outlier(g.eps);
  std::normal_distribution<double> standard(0.0, 1.0);
  std::vector<double> out(n);
  for (auto& x : out) {
    const bool contaminated = outlier(rng);
    x = standard(rng) + (contaminated ? g.nu : 0.0);
  }
  return out;
}

struct ExperimentConfig {
  double eps = 0.0;
  double nu = 6.0;
  int n = 100;
  DivergenceSpec divergence = DivergenceSpec::kl();
  PriorSpec prior = PriorSpec::uniform();
  int n_replicates = 2000;
  int n_draws = kDefaultDraws;
  std::uint64_t base_seed = 1;

  void validate() const {
    if (!(eps >= 0.0 && eps < 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1)");
    if (!std::isfinite(nu)) throw std::invalid_argument("nu must be finite");
    if (n < 2) throw std::invalid_argument("n must be at least 2");
    if (n_replicates < 1) throw std::invalid_argument("replicates must be at least 1");
    if (n_draws < 1) throw std::invalid_argument("draws must be at least 1");
  }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct SummaryTable {
  double bias_mu = 0.0;
  double bias_sigma = 0.0;
  double mse_mu = 0.0;
  double mse_sigma = 0.0;
  /// Monte Carlo standard errors of the bias estimates.
  double mc_se_mu = 0.0;
  double mc_se_sigma = 0.0;
  /// Monte Carlo standard errors of the MSE estimates.
  double mse_se_mu = 0.0;
  double mse_se_sigma = 0.0;
  double mean_ess = 0.0;
  int replicates = 0;
  int failed_replicates = 0;
  int low_ess_replicates = 0;

  friend bool operator==(const SummaryTable&, const SummaryTable&) = default;
};

/// Raised when more than 1% of the replicates of an experiment fail.
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ReplicateOutcome {
  bool ok = false;
  Vec2 error = Vec2::Zero();  // posterior mean - true theta
  double ess = 0.0;
  bool low_ess = false;
};

inline ReplicateOutcome run_replicate(const ExperimentConfig& config, const Theta& true_theta, int r) {
  const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(r);
  ReplicateOutcome out;
  try {
    const auto sample = generate_sample(ContaminatedModel(config.eps, config.nu), static_cast<std::size_t>(config.n), seed);
    const ImportanceResult res = importance_posterior_mean(config.divergence, config.prior, sample, config.n_draws, seed);
    out.error = res.mean.as_vector() - true_theta.as_vector();
    out.ess = res.weighted.ess;
    out.low_ess = res.low_ess;
    out.ok = out.error.allFinite();
  } catch (const NumericalError&) {
    out.ok = false;
  }
  return out;
}

/// Calls body(r) for r in [0, count) on up to `threads` workers.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int r = 0; r < count; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int r = next++; r < count; r = next++) body(r);
    });
}

/// Bias and MSE of the importance-sampling posterior mean over replicates.
/// Replicate r uses seed base_seed + r; results are reduced in replicate
/// order, so the table does not depend on the thread count.
inline SummaryTable run_experiment(const ExperimentConfig& config, const Theta& true_theta = Theta(0.0, 1.0),
                                   int threads = 1) {
  config.validate();
  std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(config.n_replicates));
  parallel_for(config.n_replicates, threads,
               [&](int r) { outcomes[static_cast<std::size_t>(r)] = run_replicate(config, true_theta, r); });

  SummaryTable t;
  Vec2 sum = Vec2::Zero();
  Vec2 sum_sq = Vec2::Zero();
  Vec2 sum_4th = Vec2::Zero();
  double ess = 0.0;
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++t.failed_replicates;
      continue;
    }
    ++t.replicates;
    const Vec2 e2 = o.error.cwiseProduct(o.error);
    sum += o.error;
    sum_sq += e2;
    sum_4th += e2.cwiseProduct(e2);
    ess += o.ess;
    if (o.low_ess) ++t.low_ess_replicates;
  }
  if (100 * t.failed_replicates > config.n_replicates || t.replicates == 0)
    throw ExperimentError("experiment failed: " + std::to_string(t.failed_replicates) + " of " +
                          std::to_string(config.n_replicates) + " replicates failed");

  const double m = t.replicates;
  const Vec2 bias = sum / m;
  const Vec2 mse = sum_sq / m;
  // Unbiased variance of the errors and of the squared errors.
  const double denom = std::max(1.0, m - 1.0);
  const Vec2 var = ((sum_sq - m * bias.cwiseProduct(bias)) / denom).cwiseMax(0.0);
  const Vec2 var_sq = ((sum_4th - m * mse.cwiseProduct(mse)) / denom).cwiseMax(0.0);
  t.bias_mu = bias[kMu];
  t.bias_sigma = bias[kSigma];
  t.mse_mu = mse[kMu];
  t.mse_sigma = mse[kSigma];
  t.mc_se_mu = std::sqrt(var[kMu] / m);
  t.mc_se_sigma = std::sqrt(var[kSigma] / m);
  t.mse_se_mu = std::sqrt(var_sq[kMu] / m);
  t.mse_se_sigma = std::sqrt(var_sq[kSigma] / m);
  t.mean_ess = ess / m;
  return t;
}

struct SweepEntry {
  ExperimentConfig config;
  std::optional<SummaryTable> table;
  std::string error;  // empty on success
};

/// run_experiment over each config in order; a failing config records its
/// error and the sweep continues.
inline std::vector<SweepEntry> sweep(const std::vector<ExperimentConfig>& configs,
                                     const Theta& true_theta = Theta(0.0, 1.0), int threads = 1) {
  if (configs.empty()) throw std::invalid_argument("sweep: no configurations");
  std::vector<SweepEntry> out;
  out.reserve(configs.size());
  for (const auto& c : configs) {
    SweepEntry e{c, std::nullopt, {}};
    try {
      e.table = run_experiment(c, true_theta, threads);
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace robust_bayes
