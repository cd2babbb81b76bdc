#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "semibvm/asymptotics.hpp"
#include "semibvm/gp_prior.hpp"
#include "semibvm/model.hpp"
#include "semibvm/posterior.hpp"

namespace semibvm {

enum class ReportFormat { csv, json };

ReportFormat parse_format(const std::string& name);
std::string format_name(ReportFormat format);

// Truth nuisance eta0, tabulated on its own fine grid.
struct Eta0Spec {
  std::string family = "sin";  // sin | cos | zero
  double amplitude = 0.5;
  std::size_t grid_size = 1001;

  NuisanceFunction build() const;
  friend bool operator==(const Eta0Spec&, const Eta0Spec&) = default;
};

struct ExperimentConfig {
  double sigma_w = 0.8;
  double theta0 = 1.0;
  Eta0Spec eta0;
  int k = 1;
  std::size_t grid_size = 50;
  double scale = 5.0;
  double theta_prior_var = kDefaultThetaPriorVar;
  std::vector<std::size_t> n_ladder{50, 200, 800};
  std::size_t seeds = 100;
  double level = 0.95;
  std::string output_path;
  ReportFormat format = ReportFormat::json;
  std::uint64_t master_seed = 20101;
  std::size_t jobs = 1;

  /// Throws ConfigError.
  void validate() const;

  CovariateLaw law() const;
  ModelPoint truth() const;
  GpPriorSpec prior_spec() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Parses `key = value` lines ('#' starts a comment). Unknown keys and bad
/// values raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
/// Applies one `key = value` assignment.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct ReportRow {
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  BvmDiagnostics diagnostics;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Aggregate {
  std::size_t n = 0;
  double median_tv_gap = 0.0;
  double tv_gap_q25 = 0.0;
  double tv_gap_q75 = 0.0;
  double median_localized_post_mean = 0.0;
  double median_localized_post_var = 0.0;

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct CoverageRow {
  std::size_t n = 0;
  std::size_t replications = 0;
  double level = 0.0;
  double coverage = 0.0;
  double binomial_se = 0.0;

  friend bool operator==(const CoverageRow&, const CoverageRow&) = default;
};

struct RunReport {
  ExperimentConfig config;
  std::vector<ReportRow> rows;
  std::vector<Aggregate> aggregates;
  std::vector<CoverageRow> coverage;

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

/// Everything computed for one (n, replication) cell.
struct CellResult {
  ReportRow row;
  MarginalThetaPosterior posterior;
};

CellResult run_cell(const ExperimentConfig& cfg, std::size_t n, std::size_t replication);

RunReport run_bvm_scan(const ExperimentConfig& cfg);
RunReport run_coverage(const ExperimentConfig& cfg, std::size_t replications);

/// Gaussian location model N(theta, 1) with a N(0, prior_var) prior; the
/// posterior is compared with N(xbar, 1/n). prior_var = kFlatThetaPrior gives
/// the flat prior.
BvmDiagnostics run_parametric_baseline(std::size_t n, double theta0, double prior_var,
                                       std::uint64_t seed);

/// Runs body(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& body);

}  // namespace semibvm
