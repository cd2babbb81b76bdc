// Command-line front end: covariance dumps, simulated datasets, one-shot
// posterior diagnostics, BvM scans, coverage studies and the parametric baseline.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "semibvm/asymptotics.hpp"
#include "semibvm/errors.hpp"
#include "semibvm/experiments.hpp"
#include "semibvm/gp_prior.hpp"
#include "semibvm/model.hpp"
#include "semibvm/posterior.hpp"
#include "semibvm/report_io.hpp"

namespace {

using namespace semibvm;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> format;
  std::optional<std::size_t> jobs;
  std::vector<std::string> overrides;
};

ExperimentConfig resolve_config(const CommonOptions& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = load_config(opts.config_path);
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) cfg.master_seed = *opts.seed;
  if (opts.format) cfg.format = parse_format(*opts.format);
  if (opts.jobs) cfg.jobs = *opts.jobs;
  if (!opts.out.empty()) cfg.output_path = opts.out;
  cfg.validate();
  return cfg;
}

// Writes text to cfg.output_path, or stdout when none is given.
void emit(const ExperimentConfig& cfg, const std::string& text) {
  if (cfg.output_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output_path);
  if (!out) throw std::runtime_error("cannot open '" + cfg.output_path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + cfg.output_path + "' failed");
}

void emit_report(const ExperimentConfig& cfg, const RunReport& report) {
  if (!cfg.output_path.empty()) {
    write_report(report, cfg.output_path, cfg.format);
    return;
  }
  if (cfg.format == ReportFormat::json) {
    std::cout << report_to_json(report) << '\n';
  } else {
    write_rows_csv(std::cout, report);
  }
}

json real_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiparametric Bernstein-von Mises laboratory for the partial linear model"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOptions opts;
  app.add_option("--config", opts.config_path, "key = value configuration file");
  app.add_option("--seed", opts.seed, "master seed");
  app.add_option("--out", opts.out, "output path (stdout when omitted)");
  app.add_option("--format", opts.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", opts.jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--set", opts.overrides, "override a config key (key=value), repeatable");

  std::size_t n = 200;
  std::size_t replications = 1000;
  std::size_t replication = 0;
  double prior_var = 100.0;
  double rho = 0.2;
  double h = 1.0;
  std::size_t mc_reps = 10000;
  std::string chain_path;
  std::size_t iterations = 11000;
  std::size_t burn_in = 1000;

  auto* kernel = app.add_subcommand("kernel", "dump the discretized prior covariance as CSV");
  auto* sample = app.add_subcommand("sample", "simulate a dataset (CSV columns u,v,y,e)");
  sample->add_option("--n", n, "sample size");
  auto* posterior = app.add_subcommand("posterior", "one-shot posterior diagnostics (JSON)");
  posterior->add_option("--n", n, "sample size");
  posterior->add_option("--replication", replication, "replication index of the cell");
  posterior->add_option("--chain", chain_path, "also run the Gibbs sampler and write its CSV");
  posterior->add_option("--iterations", iterations, "Gibbs iterations");
  posterior->add_option("--burn-in", burn_in, "Gibbs burn-in");
  auto* scan = app.add_subcommand("bvm-scan", "TV gap to the efficient normal limit across n_ladder");
  auto* coverage = app.add_subcommand("coverage", "frequentist coverage of credible intervals");
  coverage->add_option("--replications", replications, "replications per n");
  auto* baseline = app.add_subcommand("baseline", "parametric normal-location baseline (JSON)");
  baseline->add_option("--n", n, "sample size");
  baseline->add_option("--prior-var", prior_var, "prior variance (inf for flat)");
  auto* diagnostics =
      app.add_subcommand("diagnostics", "K(rho), U_n, LAN remainder and integral LAN (JSON)");
  diagnostics->add_option("--n", n, "sample size");
  diagnostics->add_option("--rho", rho, "Hellinger radius");
  diagnostics->add_option("--local-h", h, "local parameter");
  diagnostics->add_option("--reps", mc_reps, "Monte-Carlo replications for U_n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const ExperimentConfig cfg = resolve_config(opts);

    if (kernel->parsed()) {
      std::ostringstream out;
      write_matrix_csv(out, prior_covariance(cfg.prior_spec()).matrix());
      emit(cfg, out.str());
    } else if (sample->parsed()) {
      const Dataset ds = sample_dataset(cfg.law(), cfg.truth(), n, cfg.master_seed);
      std::ostringstream out;
      write_dataset_csv(out, ds);
      emit(cfg, out.str());
    } else if (posterior->parsed()) {
      const CellResult cell = run_cell(cfg, n, replication);
      const Interval ci = credible_interval(cell.posterior, cfg.level);
      json doc = json::parse(diagnostics_to_json(cell.row.diagnostics));
      doc["seed"] = cell.row.seed;
      doc["replication"] = cell.row.replication;
      doc["posterior_mean"] = cell.posterior.mean;
      doc["posterior_variance"] = cell.posterior.variance;
      doc["credible_interval"] = {ci.lower, ci.upper};
      doc["level"] = cfg.level;
      doc["h_ball_mass_log_n"] = posterior_mass_h_ball(
          cell.posterior, cfg.theta0, std::log(static_cast<double>(n)), n);
      if (!chain_path.empty()) {
        const Dataset ds = sample_dataset(cfg.law(), cfg.truth(), n, cell.row.seed);
        const GibbsChain chain =
            gibbs_chain(ds, cfg.prior_spec(), cfg.theta_prior_var, iterations, burn_in,
                        cell.row.seed ^ 0x5851F42D4C957F2DULL);
        std::ofstream out(chain_path);
        if (!out) throw std::runtime_error("cannot open '" + chain_path + "' for writing");
        write_chain_csv(out, chain);
        const auto draws = chain.theta_draws();
        doc["gibbs_theta_mean"] = mean_estimate(draws).value;
        doc["gibbs_theta_ess"] = effective_sample_size(draws);
      }
      emit(cfg, doc.dump(2) + "\n");
    } else if (scan->parsed()) {
      emit_report(cfg, run_bvm_scan(cfg));
    } else if (coverage->parsed()) {
      const RunReport report = run_coverage(cfg, replications);
      emit_report(cfg, report);
      for (const CoverageRow& c : report.coverage) {
        std::cerr << "n=" << c.n << " coverage=" << c.coverage << " se=" << c.binomial_se << '\n';
      }
    } else if (baseline->parsed()) {
      const BvmDiagnostics d = run_parametric_baseline(n, cfg.theta0, prior_var, cfg.master_seed);
      json doc = json::parse(diagnostics_to_json(d));
      doc["prior_var"] = real_json(prior_var);
      emit(cfg, doc.dump(2) + "\n");
    } else if (diagnostics->parsed()) {
      const CovariateLaw law = cfg.law();
      const ModelPoint truth = cfg.truth();
      const GpPriorSpec spec = cfg.prior_spec();
      const Dataset ds = sample_dataset(law, truth, n, cfg.master_seed);
      const double root_n = std::sqrt(static_cast<double>(n));

      const JointGaussianPosterior jp = conjugate_joint_posterior(ds, spec, cfg.theta_prior_var);
      const Eigen::VectorXd eta_mean = jp.mean().tail(static_cast<Eigen::Index>(cfg.grid_size));
      const NuisanceFunction eta_hat(std::vector<double>(eta_mean.data(),
                                                         eta_mean.data() + eta_mean.size()));
      const KlNeighborhoodStats k_stats =
          kl_neighborhood_stats(eta_hat, truth, law, 100000, cfg.master_seed + 1);
      const LanCoefficients lan = integral_lan_coefficients(ds, spec, cfg.theta0);
      const double remainder = lan_remainder(ds, h, NuisanceFunction::zero(2), truth, law);

      const std::vector<NuisanceFunction> probes{
          NuisanceFunction::zero(2),
          NuisanceFunction::tabulate(cfg.grid_size, [](double v) { return 0.1 * v; }),
          NuisanceFunction::tabulate(cfg.grid_size,
                                     [](double v) { return 0.1 * std::cos(6.283185307179586 * v); })};
      const DominationEstimate u_fixed =
          estimate_Un(law, truth, probes, rho, h, n, mc_reps, cfg.master_seed + 2);
      const DominationEstimate u_plugin =
          estimate_Un(law, truth, probes, rho, PlugInDirection{2.0}, n, mc_reps, cfg.master_seed + 3);
      const double mass = conditional_nuisance_mass(ds, spec, cfg.theta0 + h / root_n, truth, law,
                                                    rho, 1000, cfg.master_seed + 4);

      auto per_zeta = [](const DominationEstimate& d) {
        json arr = json::array();
        for (const McEstimate& e : d.per_zeta) arr.push_back({{"value", e.value}, {"se", e.std_error}});
        return arr;
      };
      json doc{{"n", n},
               {"seed", cfg.master_seed},
               {"rho", rho},
               {"h", h},
               {"kl_neighborhood",
                {{"kl", k_stats.kl.value},
                 {"kl_se", k_stats.kl.std_error},
                 {"second_moment", k_stats.second_moment.value},
                 {"second_moment_se", k_stats.second_moment.std_error},
                 {"member", k_stats.member(rho)}}},
               {"lan_remainder", remainder},
               {"integral_lan", {{"linear", lan.linear}, {"quadratic", lan.quadratic}}},
               {"info_tilde", law.efficient_information()},
               {"U_n_fixed_h", {{"max", u_fixed.value}, {"per_zeta", per_zeta(u_fixed)}}},
               {"U_n_plug_in_h", {{"max", u_plugin.value}, {"per_zeta", per_zeta(u_plugin)}}},
               {"conditional_nuisance_mass", mass}};
      emit(cfg, doc.dump(2) + "\n");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
