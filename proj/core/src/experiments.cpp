#include "semibvm/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "semibvm/errors.hpp"
#include "semibvm/stats.hpp"

namespace semibvm {

ReportFormat parse_format(const std::string& name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  throw ConfigError("unknown format '" + name + "' (expected csv or json)");
}

std::string format_name(ReportFormat format) {
  return format == ReportFormat::csv ? "csv" : "json";
}

NuisanceFunction Eta0Spec::build() const {
  const double amp = amplitude;
  if (family == "sin") {
    return NuisanceFunction::tabulate(
        grid_size, [amp](double v) { return amp * std::sin(2.0 * std::numbers::pi * v); });
  }
  if (family == "cos") {
    return NuisanceFunction::tabulate(
        grid_size, [amp](double v) { return amp * std::cos(2.0 * std::numbers::pi * v); });
  }
  if (family == "zero") return NuisanceFunction::zero(grid_size);
  throw ConfigError("unknown eta0 family '" + family + "' (expected sin, cos or zero)");
}

void ExperimentConfig::validate() const {
  if (!(sigma_w > 0.0 && sigma_w <= 1.0)) throw ConfigError("sigma_w must lie in (0, 1]");
  if (!std::isfinite(theta0)) throw ConfigError("theta0 must be finite");
  if (eta0.grid_size < 2) throw ConfigError("eta0_grid_size must be >= 2");
  if (eta0.family != "sin" && eta0.family != "cos" && eta0.family != "zero") {
    throw ConfigError("eta0 must be one of sin, cos, zero");
  }
  if (k < 0) throw ConfigError("k must be >= 0");
  if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale must be positive");
  if (!(theta_prior_var > 0.0)) throw ConfigError("theta_prior_var must be positive or inf");
  if (n_ladder.empty()) throw ConfigError("n_ladder must not be empty");
  for (std::size_t i = 0; i < n_ladder.size(); ++i) {
    if (n_ladder[i] == 0) throw ConfigError("n_ladder entries must be >= 1");
    if (i > 0 && n_ladder[i] <= n_ladder[i - 1]) {
      throw ConfigError("n_ladder must be strictly increasing");
    }
  }
  if (seeds == 0) throw ConfigError("seeds must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
  if (jobs == 0) throw ConfigError("jobs must be >= 1");
}

CovariateLaw ExperimentConfig::law() const { return make_covariate_law(sigma_w); }

ModelPoint ExperimentConfig::truth() const { return {theta0, eta0.build()}; }

GpPriorSpec ExperimentConfig::prior_spec() const {
  GpPriorSpec spec;
  spec.k = k;
  spec.grid_size = grid_size;
  spec.scale = scale;
  return spec;
}

namespace {

std::string trim(const std::string& s) {
  auto begin = std::find_if_not(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
  auto end = std::find_if_not(s.rbegin(), s.rend(), [](unsigned char c) { return std::isspace(c); });
  if (begin >= end.base()) return {};
  return std::string(begin, end.base());
}

double parse_real(const std::string& key, const std::string& value) {
  if (value == "inf" || value == "infinity") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double x = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a real number");
  }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t x = 0;
  const auto* first = value.data();
  const auto* last = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': '" + value + "' is not a nonnegative integer");
  }
  return x;
}

std::vector<std::size_t> parse_ladder(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::string token;
  std::istringstream in(value);
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (token.empty()) continue;
    out.push_back(static_cast<std::size_t>(parse_unsigned(key, token)));
  }
  return out;
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "sigma_w") cfg.sigma_w = parse_real(key, value);
  else if (key == "theta0") cfg.theta0 = parse_real(key, value);
  else if (key == "eta0") cfg.eta0.family = value;
  else if (key == "eta0_amplitude") cfg.eta0.amplitude = parse_real(key, value);
  else if (key == "eta0_grid_size") cfg.eta0.grid_size = parse_unsigned(key, value);
  else if (key == "k") cfg.k = static_cast<int>(parse_unsigned(key, value));
  else if (key == "grid_size") cfg.grid_size = parse_unsigned(key, value);
  else if (key == "scale") cfg.scale = parse_real(key, value);
  else if (key == "theta_prior_var") cfg.theta_prior_var = parse_real(key, value);
  else if (key == "n_ladder") cfg.n_ladder = parse_ladder(key, value);
  else if (key == "seeds") cfg.seeds = parse_unsigned(key, value);
  else if (key == "level") cfg.level = parse_real(key, value);
  else if (key == "output_path") cfg.output_path = value;
  else if (key == "format") cfg.format = parse_format(value);
  else if (key == "master_seed") cfg.master_seed = parse_unsigned(key, value);
  else if (key == "jobs") cfg.jobs = parse_unsigned(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

void parallel_for(std::size_t count, std::size_t jobs,
                  const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

CellResult run_cell(const ExperimentConfig& cfg, std::size_t n, std::size_t replication) {
  const std::uint64_t seed = cell_seed(cfg.master_seed, n, replication);
  try {
    const CovariateLaw law = cfg.law();
    const ModelPoint truth = cfg.truth();
    const Dataset ds = sample_dataset(law, truth, n, seed);
    const MarginalThetaPosterior mp =
        marginal_theta(conjugate_joint_posterior(ds, cfg.prior_spec(), cfg.theta_prior_var));
    const double info = law.efficient_information();
    CellResult out;
    out.row.replication = replication;
    out.row.seed = seed;
    out.row.diagnostics = bvm_gap(mp, delta_n(ds, law, truth), info, n, cfg.theta0);
    out.posterior = mp;
    return out;
  } catch (const NumericError& e) {
    std::ostringstream msg;
    msg << e.what() << " [cell n=" << n << " replication=" << replication << " seed=" << seed
        << "]";
    throw NumericError(msg.str());
  }
}

namespace {

std::vector<CellResult> run_cells(const ExperimentConfig& cfg, std::size_t per_n) {
  std::vector<CellResult> cells(cfg.n_ladder.size() * per_n);
  parallel_for(cells.size(), cfg.jobs, [&](std::size_t idx) {
    cells[idx] = run_cell(cfg, cfg.n_ladder[idx / per_n], idx % per_n);
  });
  return cells;
}

std::vector<Aggregate> aggregate(const std::vector<std::size_t>& ladder,
                                 const std::vector<ReportRow>& rows) {
  std::vector<Aggregate> out;
  for (std::size_t n : ladder) {
    std::vector<double> gaps, means, vars;
    for (const ReportRow& r : rows) {
      if (r.diagnostics.n != n) continue;
      gaps.push_back(r.diagnostics.tv_gap);
      means.push_back(r.diagnostics.localized_post_mean);
      vars.push_back(r.diagnostics.localized_post_var);
    }
    if (gaps.empty()) continue;
    Aggregate a;
    a.n = n;
    a.median_tv_gap = median(gaps);
    a.tv_gap_q25 = quantile(gaps, 0.25);
    a.tv_gap_q75 = quantile(gaps, 0.75);
    a.median_localized_post_mean = median(means);
    a.median_localized_post_var = median(vars);
    out.push_back(a);
  }
  return out;
}

}  // namespace

RunReport run_bvm_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  RunReport report;
  report.config = cfg;
  for (CellResult& c : run_cells(cfg, cfg.seeds)) report.rows.push_back(c.row);
  report.aggregates = aggregate(cfg.n_ladder, report.rows);
  return report;
}

RunReport run_coverage(const ExperimentConfig& cfg, std::size_t replications) {
  cfg.validate();
  if (replications == 0) throw ConfigError("replications must be >= 1");
  RunReport report;
  report.config = cfg;
  const std::vector<CellResult> cells = run_cells(cfg, replications);
  for (std::size_t i = 0; i < cfg.n_ladder.size(); ++i) {
    std::size_t hits = 0;
    for (std::size_t r = 0; r < replications; ++r) {
      const CellResult& c = cells[i * replications + r];
      if (credible_interval(c.posterior, cfg.level).contains(cfg.theta0)) ++hits;
      report.rows.push_back(c.row);
    }
    CoverageRow row;
    row.n = cfg.n_ladder[i];
    row.replications = replications;
    row.level = cfg.level;
    row.coverage = static_cast<double>(hits) / static_cast<double>(replications);
    row.binomial_se =
        std::sqrt(row.coverage * (1.0 - row.coverage) / static_cast<double>(replications));
    report.coverage.push_back(row);
  }
  report.aggregates = aggregate(cfg.n_ladder, report.rows);
  return report;
}

BvmDiagnostics run_parametric_baseline(std::size_t n, double theta0, double prior_var,
                                       std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("run_parametric_baseline: n must be >= 1");
  if (!(prior_var > 0.0)) throw std::invalid_argument("run_parametric_baseline: prior_var > 0");
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += theta0 + rng.normal();
  const double nn = static_cast<double>(n);
  const double xbar = sum / nn;

  MarginalThetaPosterior mp{xbar, 1.0 / nn};
  if (!std::isinf(prior_var)) {
    const double denom = nn * prior_var + 1.0;
    mp = {nn * xbar * prior_var / denom, prior_var / denom};
  }
  const double delta = std::sqrt(nn) * (xbar - theta0);
  return bvm_gap(mp, delta, 1.0, n, theta0);
}

}  // namespace semibvm
