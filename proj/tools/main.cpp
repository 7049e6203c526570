// robust-bayes: command-line front end.

#include "robust_bayes.hpp"
#include "verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace rb = robust_bayes;
namespace fs = std::filesystem;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum Exit : int { kOk = 0, kVerifyFailed = 1, kUsage = 2, kRuntime = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> parse_real_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = rb::parse_double(rb::detail::trim(item));
    if (!v || !std::isfinite(*v)) throw UsageError(std::string("malformed ") + what + " list: '" + text + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

std::vector<double> read_data_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read data file '" + path + "'");
  std::vector<double> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = rb::detail::trim(line);
    if (text.empty()) continue;
    const auto v = rb::parse_double(text);
    if (!v || !std::isfinite(*v))
      throw UsageError(path + ":" + std::to_string(line_no) + ": not a number: '" + std::string(text) + "'");
    out.push_back(*v);
  }
  return out;
}

struct SimulateArgs {
  std::string config;
  std::string out = ".";
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::optional<int> draws;
  int threads = 1;
};

int cmd_simulate(SimulateArgs args) {
  if (!args.manifest.empty()) {
    std::ifstream in(args.manifest);
    if (!in) throw UsageError("cannot read manifest '" + args.manifest + "'");
    nlohmann::json m;
    try {
      in >> m;
      if (args.config.empty()) args.config = m.at("config_path").get<std::string>();
      if (!args.seed) args.seed = m.at("seed").get<std::uint64_t>();
      if (!args.replicates && m.contains("replicates_override") && !m["replicates_override"].is_null())
        args.replicates = m["replicates_override"].get<int>();
      if (!args.draws && m.contains("draws_override") && !m["draws_override"].is_null())
        args.draws = m["draws_override"].get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("malformed manifest: ") + e.what());
    }
  }
  if (args.config.empty()) throw UsageError("simulate needs --config or --manifest");

  rb::ConfigFile cfg;
  try {
    cfg = rb::load_config(args.config, args.seed);
  } catch (const rb::ConfigError& e) {
    throw UsageError(args.config + ": " + e.what());
  }
  for (auto& c : cfg.experiments) {
    if (args.replicates) c.n_replicates = *args.replicates;
    if (args.draws) c.n_draws = *args.draws;
  }
  if (args.replicates && *args.replicates < 1) throw UsageError("--replicates must be positive");
  if (args.draws && *args.draws < 1) throw UsageError("--draws must be positive");

  const fs::path out_dir(args.out);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + args.out + "': " + ec.message());

  const std::string started = utc_now();
  const auto results = rb::sweep(cfg.experiments, rb::Theta(0.0, 1.0), args.threads);

  std::string csv(rb::kSummaryHeader);
  csv += '\n';
  bool any_failed = false;
  for (const auto& r : results) {
    csv += rb::summary_row(r.config, r.table) + '\n';
    if (!r.error.empty()) {
      any_failed = true;
      std::cerr << "experiment " << rb::summary_row(r.config, std::nullopt) << " failed: " << r.error << '\n';
    }
  }
  {
    std::ofstream out(out_dir / "summary.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / "summary.csv").string());
    out << csv;
  }

  nlohmann::ordered_json manifest;
  manifest["config_path"] = fs::absolute(args.config).string();
  manifest["output_dir"] = fs::absolute(out_dir).string();
  manifest["started"] = started;
  manifest["finished"] = utc_now();
  manifest["seed"] = cfg.root_seed;
  manifest["tool_version"] = kToolVersion;
  manifest["replicates_override"] = args.replicates ? nlohmann::json(*args.replicates) : nlohmann::json(nullptr);
  manifest["draws_override"] = args.draws ? nlohmann::json(*args.draws) : nlohmann::json(nullptr);
  manifest["experiments"] = cfg.experiments.size();
  std::ofstream(out_dir / "manifest.json", std::ios::binary) << manifest.dump(2) << '\n';

  std::cerr << "wrote " << results.size() << " rows to " << (out_dir / "summary.csv").string() << '\n';
  return any_failed ? kRuntime : kOk;
}

int cmd_are(const std::string& gammas) {
  const auto list = parse_real_list(gammas, "gamma");
  for (double g : list)
    if (g < 0.0) throw UsageError("gamma must be non-negative");
  std::cout << "gamma,are\n";
  for (double g : list) std::cout << rb::format_double(g) << ',' << rb::format_fixed(rb::are_h(g), 7) << '\n';
  return kOk;
}

int cmd_priors(const std::string& div_text, const std::string& mus, const std::string& sigmas) {
  rb::DivergenceSpec div = rb::DivergenceSpec::kl();
  try {
    div = rb::DivergenceSpec::parse(div_text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto mu_list = parse_real_list(mus, "mu");
  const auto sigma_list = parse_real_list(sigmas, "sigma");
  for (double s : sigma_list)
    if (!(s > 0.0)) throw UsageError("sigma values must be positive");
  std::cout << "divergence,tuning,prior,sigma_exponent,mu,sigma,log_prior\n";
  for (const auto& prior : {rb::PriorSpec::uniform(), rb::PriorSpec::reference(), rb::PriorSpec::moment_matching()})
    for (double mu : mu_list)
      for (double s : sigma_list) {
        const rb::Theta theta(mu, s);
        std::cout << div.name() << ',' << rb::format_double(div.tuning()) << ',' << prior.to_string() << ','
                  << rb::format_double(rb::prior_sigma_exponent(prior, div)) << ',' << rb::format_double(mu) << ','
                  << rb::format_double(s) << ',' << rb::format_double(rb::log_prior_closed(prior, div, theta) + 0.0) << '\n';
      }
  return kOk;
}

int cmd_estimate(const std::string& data, const std::string& div_text, const std::string& prior_text, int draws,
                 std::uint64_t seed) {
  rb::DivergenceSpec div = rb::DivergenceSpec::kl();
  rb::PriorSpec prior;
  try {
    div = rb::DivergenceSpec::parse(div_text);
    prior = rb::PriorSpec::parse(prior_text);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (draws < 1) throw UsageError("--draws must be positive");
  const auto sample = read_data_file(data);
  if (sample.size() < 2) throw UsageError("need at least two observations");
  const rb::Theta point = rb::minimum_divergence_estimate(div, sample);
  const auto post = rb::importance_posterior_mean(div, prior, sample, draws, seed);
  std::cout << "quantity,mu,sigma\n";
  std::cout << "minimum_divergence," << rb::format_double(point.mu()) << ',' << rb::format_double(point.sigma()) << '\n';
  std::cout << "posterior_mean," << rb::format_double(post.mean.mu()) << ',' << rb::format_double(post.mean.sigma())
            << '\n';
  std::cout << "mc_standard_error," << rb::format_double(post.mc_standard_error[rb::kMu]) << ','
            << rb::format_double(post.mc_standard_error[rb::kSigma]) << '\n';
  std::cerr << "effective sample size " << rb::format_fixed(post.weighted.ess, 1) << " of " << draws << " draws";
  if (post.low_ess) std::cerr << " (low: below 5% of draws)";
  std::cerr << '\n';
  return kOk;
}

int cmd_verify(const std::string& fault, std::uint64_t seed) {
  rb::verify::VerifyOptions opts;
  opts.seed = seed;
  if (fault == "mm-exponent")
    opts.mm_exponent_shift = 0.05;
  else if (!fault.empty())
    throw UsageError("unknown fault '" + fault + "' (known: mm-exponent)");
  bool ok = true;
  int gated = 0;
  int failed = 0;
  for (const auto& r : rb::verify::run_all(opts)) {
    std::cout << rb::verify::format_result(r) << '\n';
    if (r.gated) {
      ++gated;
      if (!r.passed) {
        ok = false;
        ++failed;
      }
    }
  }
  std::cout << (ok ? "verify: all " + std::to_string(gated) + " checks passed"
                   : "verify: " + std::to_string(failed) + " of " + std::to_string(gated) + " checks failed")
            << '\n';
  return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust quasi-Bayesian estimation for the normal model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs sim;
  std::uint64_t seed_value = 0;
  int replicates_value = 0;
  int draws_value = 0;
  auto* simulate = app.add_subcommand("simulate", "Run the experiments of a config file and write summary.csv");
  simulate->add_option("--config", sim.config, "Experiment config file");
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();
  simulate->add_option("--manifest", sim.manifest, "Re-run from a manifest.json written by a previous run");
  auto* seed_opt = simulate->add_option("--seed", seed_value, "Root seed (overrides the config)");
  auto* rep_opt = simulate->add_option("--replicates", replicates_value, "Replicates per experiment (override)");
  auto* draws_opt = simulate->add_option("--draws", draws_value, "Importance sampling draws (override)");
  simulate->add_option("--threads", sim.threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  std::string gammas = "0.01,0.1,0.3,0.5";
  auto* are = app.add_subcommand("are", "Asymptotic relative efficiency h(gamma) as CSV");
  are->add_option("--gamma", gammas, "Comma-separated gamma values")->capture_default_str();

  std::string prior_div = "gamma:0.5";
  std::string mus = "0";
  std::string sigmas = "0.5,1,2";
  auto* priors = app.add_subcommand("priors", "Tabulate the closed-form log priors over a theta grid");
  priors->add_option("--divergence", prior_div, "kl | alpha:<x> | gamma:<x>")->capture_default_str();
  priors->add_option("--mu", mus, "Comma-separated mu values")->capture_default_str();
  priors->add_option("--sigma", sigmas, "Comma-separated sigma values")->capture_default_str();

  std::string data;
  std::string est_div = "gamma:0.5";
  std::string est_prior = "uniform";
  int est_draws = rb::kDefaultDraws;
  std::uint64_t est_seed = 1;
  auto* estimate = app.add_subcommand("estimate", "Point estimate and posterior mean for a data file");
  estimate->add_option("data", data, "One number per line; '#' starts a comment")->required();
  estimate->add_option("--divergence", est_div, "kl | alpha:<x> | gamma:<x>")->capture_default_str();
  estimate->add_option("--prior", est_prior, "uniform | reference | mm")->capture_default_str();
  estimate->add_option("--draws", est_draws, "Importance sampling draws")->capture_default_str();
  estimate->add_option("--seed", est_seed, "Seed")->capture_default_str();

  std::string fault;
  std::uint64_t verify_seed = 12345;
  auto* verify = app.add_subcommand("verify", "Run the oracle checks");
  verify->add_option("--inject-fault", fault, "Deliberately break a component (mm-exponent)");
  verify->add_option("--seed", verify_seed, "Seed for randomised checks")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) {
      if (*seed_opt) sim.seed = seed_value;
      if (*rep_opt) sim.replicates = replicates_value;
      if (*draws_opt) sim.draws = draws_value;
      return cmd_simulate(sim);
    }
    if (*are) return cmd_are(gammas);
    if (*priors) return cmd_priors(prior_div, mus, sigmas);
    if (*estimate) return cmd_estimate(data, est_div, est_prior, est_draws, est_seed);
    if (*verify) return cmd_verify(fault, verify_seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
