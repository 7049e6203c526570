#pragma once

// Experiment configuration files and summary CSV rows.
//
// Format: `key = value` lines, `#` comments, and `[experiment]` section
// headers. Keys before the first section are defaults for every section.
// Keys: epsilon, nu, n, divergence (kl | alpha:<x> | gamma:<x>),
// prior (uniform | reference | mm), replicates, draws, seed.
// epsilon, nu, n, divergence and prior accept comma-separated lists; a
// section expands to their cartesian product with prior outermost, then
// epsilon, n, nu, and divergence innermost.
//
// Seeds: config k of the file (in expansion order) gets root + k * 1000003,
// where root is the top-level seed. A section with its own seed instead
// numbers its configs from 0 against that seed.

#include "robust_bayes/core.hpp"
#include "robust_bayes/simulation.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace robust_bayes {

inline constexpr std::uint64_t kSeedStride = 1000003;
inline constexpr std::uint64_t kDefaultRootSeed = 20240101;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

using Section = std::map<std::string, std::pair<std::string, int>>;  // key -> (raw value, line)

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{"epsilon", "nu", "n", "divergence", "prior", "replicates", "draws", "seed"};
  return keys;
}

[[noreturn]] inline void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

template <class T, class Parse>
std::vector<T> parse_values(const Section& s, const Section& defaults, const std::string& key, T fallback,
                            Parse&& parse, bool list_ok) {
  const std::pair<std::string, int>* entry = nullptr;
  if (const auto i = s.find(key); i != s.end())
    entry = &i->second;
  else if (const auto j = defaults.find(key); j != defaults.end())
    entry = &j->second;
  if (entry == nullptr) return {fallback};
  const auto& [raw, line] = *entry;
  const auto items = split_list(raw);
  if (!list_ok && items.size() != 1) fail(line, "'" + key + "' takes a single value");
  std::vector<T> out;
  for (const auto& item : items) {
    try {
      out.push_back(parse(item));
    } catch (const std::exception& e) {
      fail(line, "bad value for '" + key + "': " + e.what());
    }
  }
  return out;
}

inline double parse_real(const std::string& s) {
  const auto v = parse_double(s);
  if (!v || !std::isfinite(*v)) throw std::invalid_argument("'" + s + "' is not a number");
  return *v;
}

inline long long parse_int(const std::string& s) {
  const auto v = parse_integer(s);
  if (!v) throw std::invalid_argument("'" + s + "' is not an integer");
  return *v;
}

}  // namespace detail

struct ConfigFile {
  std::vector<ExperimentConfig> experiments;
  std::uint64_t root_seed = kDefaultRootSeed;
};

/// Parses configuration text. `seed_override`, if set, replaces the
/// top-level seed.
inline ConfigFile parse_config(std::string_view text, std::optional<std::uint64_t> seed_override = std::nullopt) {
  using detail::Section;
  Section defaults;
  std::vector<Section> sections;
  Section* current = &defaults;

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[experiment]") detail::fail(line_no, "unknown section " + std::string(line));
      sections.emplace_back();
      current = &sections.back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) detail::fail(line_no, "expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    const auto& keys = detail::known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) detail::fail(line_no, "unknown key '" + key + "'");
    if (value.empty()) detail::fail(line_no, "empty value for '" + key + "'");
    if (current->count(key)) detail::fail(line_no, "duplicate key '" + key + "'");
    (*current)[key] = {value, line_no};
  }
  if (sections.empty()) {
    if (defaults.empty()) throw ConfigError("configuration contains no experiments");
    sections.emplace_back();
  }

  ConfigFile file;
  if (defaults.count("seed")) {
    const auto& [raw, line] = defaults.at("seed");
    try {
      const long long s = detail::parse_int(raw);
      if (s < 0) throw std::invalid_argument("seed must be non-negative");
      file.root_seed = static_cast<std::uint64_t>(s);
    } catch (const std::exception& e) {
      detail::fail(line, e.what());
    }
  }
  if (seed_override) file.root_seed = *seed_override;

  const Section empty;
  std::uint64_t global_index = 0;
  for (const auto& s : sections) {
    auto positive_int = [](const std::string& v) {
      const long long x = detail::parse_int(v);
      if (x < 1 || x > std::numeric_limits<int>::max()) throw std::invalid_argument("must be a positive integer");
      return static_cast<int>(x);
    };
    const auto priors = detail::parse_values<PriorSpec>(s, defaults, "prior", PriorSpec::uniform(),
                                                        [](const std::string& v) { return PriorSpec::parse(v); }, true);
    const auto epsilons = detail::parse_values<double>(s, defaults, "epsilon", 0.0, detail::parse_real, true);
    const auto ns = detail::parse_values<int>(s, defaults, "n", 100, positive_int, true);
    const auto nus = detail::parse_values<double>(s, defaults, "nu", 6.0, detail::parse_real, true);
    const auto divs = detail::parse_values<DivergenceSpec>(
        s, defaults, "divergence", DivergenceSpec::kl(), [](const std::string& v) { return DivergenceSpec::parse(v); },
        true);
    const int replicates = detail::parse_values<int>(s, defaults, "replicates", 2000, positive_int, false).front();
    const int draws = detail::parse_values<int>(s, defaults, "draws", kDefaultDraws, positive_int, false).front();

    std::optional<std::uint64_t> section_seed;
    if (s.count("seed")) {
      const auto seeds = detail::parse_values<long long>(s, empty, "seed", 0, detail::parse_int, false);
      if (seeds.front() < 0) detail::fail(s.at("seed").second, "seed must be non-negative");
      section_seed = static_cast<std::uint64_t>(seeds.front());
    }

    std::uint64_t local_index = 0;
    for (const auto& prior : priors)
      for (double eps : epsilons)
        for (int n : ns)
          for (double nu : nus)
            for (const auto& div : divs) {
              ExperimentConfig c;
              c.prior = prior;
              c.eps = eps;
              c.n = n;
              c.nu = nu;
              c.divergence = div;
              c.n_replicates = replicates;
              c.n_draws = draws;
              c.base_seed = section_seed ? *section_seed + local_index * kSeedStride
                                         : file.root_seed + global_index * kSeedStride;
              try {
                c.validate();
              } catch (const std::exception& e) {
                throw ConfigError(std::string("invalid experiment: ") + e.what());
              }
              file.experiments.push_back(c);
              ++local_index;
              ++global_index;
            }
  }
  return file;
}

inline ConfigFile load_config(const std::string& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), seed_override);
}

/// One [experiment] section per config, each with an explicit seed, so that
/// parse_config(serialize_config(c)) reproduces c exactly.
inline std::string serialize_config(const std::vector<ExperimentConfig>& configs) {
  std::string out;
  for (const auto& c : configs) {
    out += "[experiment]\n";
    out += "epsilon = " + format_double(c.eps) + "\n";
    out += "nu = " + format_double(c.nu) + "\n";
    out += "n = " + std::to_string(c.n) + "\n";
    out += "divergence = " + c.divergence.to_string() + "\n";
    out += "prior = " + c.prior.to_string() + "\n";
    out += "replicates = " + std::to_string(c.n_replicates) + "\n";
    out += "draws = " + std::to_string(c.n_draws) + "\n";
    out += "seed = " + std::to_string(c.base_seed) + "\n\n";
  }
  return out;
}

inline constexpr std::string_view kSummaryHeader =
    "epsilon,nu,n,divergence,tuning,prior,bias_mu,bias_sigma,mse_mu,mse_sigma,mc_se_mu,mc_se_sigma,mean_ess,"
    "failed_replicates";

/// A summary row; numbers in shortest round-trip form. A failed experiment
/// leaves the statistic columns empty.
inline std::string summary_row(const ExperimentConfig& c, const std::optional<SummaryTable>& t) {
  std::string row = format_double(c.eps) + "," + format_double(c.nu) + "," + std::to_string(c.n) + "," +
                    c.divergence.name() + "," + format_double(c.divergence.tuning()) + "," + c.prior.to_string();
  if (t) {
    for (double v : {t->bias_mu, t->bias_sigma, t->mse_mu, t->mse_sigma, t->mc_se_mu, t->mc_se_sigma, t->mean_ess})
      row += "," + format_double(v);
    row += "," + std::to_string(t->failed_replicates);
  } else {
    row += ",,,,,,,,";
  }
  return row;
}

}  // namespace robust_bayes
