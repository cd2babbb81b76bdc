#include "semibvm/report_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace semibvm {

using nlohmann::json;

namespace {

json real_to_json(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double real_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("report JSON: unexpected string '" + s + "' for a real");
  }
  return j.get<double>();
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"sigma_w", c.sigma_w},
              {"theta0", c.theta0},
              {"eta0", c.eta0.family},
              {"eta0_amplitude", c.eta0.amplitude},
              {"eta0_grid_size", c.eta0.grid_size},
              {"k", c.k},
              {"grid_size", c.grid_size},
              {"scale", c.scale},
              {"theta_prior_var", real_to_json(c.theta_prior_var)},
              {"n_ladder", c.n_ladder},
              {"seeds", c.seeds},
              {"level", c.level},
              {"output_path", c.output_path},
              {"format", format_name(c.format)},
              {"master_seed", c.master_seed},
              {"jobs", c.jobs}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.sigma_w = j.at("sigma_w").get<double>();
  c.theta0 = j.at("theta0").get<double>();
  c.eta0.family = j.at("eta0").get<std::string>();
  c.eta0.amplitude = j.at("eta0_amplitude").get<double>();
  c.eta0.grid_size = j.at("eta0_grid_size").get<std::size_t>();
  c.k = j.at("k").get<int>();
  c.grid_size = j.at("grid_size").get<std::size_t>();
  c.scale = j.at("scale").get<double>();
  c.theta_prior_var = real_from_json(j.at("theta_prior_var"));
  c.n_ladder = j.at("n_ladder").get<std::vector<std::size_t>>();
  c.seeds = j.at("seeds").get<std::size_t>();
  c.level = j.at("level").get<double>();
  c.output_path = j.at("output_path").get<std::string>();
  c.format = parse_format(j.at("format").get<std::string>());
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<std::size_t>();
  return c;
}

json diagnostics_json(const BvmDiagnostics& d) {
  return json{{"n", d.n},
              {"delta_n", d.delta_n},
              {"info_tilde", d.info_tilde},
              {"localized_post_mean", d.localized_post_mean},
              {"localized_post_var", d.localized_post_var},
              {"tv_gap", d.tv_gap}};
}

BvmDiagnostics diagnostics_from_json(const json& j) {
  BvmDiagnostics d;
  d.n = j.at("n").get<std::size_t>();
  d.delta_n = j.at("delta_n").get<double>();
  d.info_tilde = j.at("info_tilde").get<double>();
  d.localized_post_mean = j.at("localized_post_mean").get<double>();
  d.localized_post_var = j.at("localized_post_var").get<double>();
  d.tv_gap = j.at("tv_gap").get<double>();
  return d;
}

void set_precision(std::ostream& out) {
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
}

}  // namespace

std::string diagnostics_to_json(const BvmDiagnostics& d) { return diagnostics_json(d).dump(2); }

std::string report_to_json(const RunReport& report) {
  json rows = json::array();
  for (const ReportRow& r : report.rows) {
    json row = diagnostics_json(r.diagnostics);
    row["replication"] = r.replication;
    row["seed"] = r.seed;
    rows.push_back(std::move(row));
  }
  json aggregates = json::array();
  for (const Aggregate& a : report.aggregates) {
    aggregates.push_back(json{{"n", a.n},
                              {"median_tv_gap", a.median_tv_gap},
                              {"tv_gap_q25", a.tv_gap_q25},
                              {"tv_gap_q75", a.tv_gap_q75},
                              {"median_localized_post_mean", a.median_localized_post_mean},
                              {"median_localized_post_var", a.median_localized_post_var}});
  }
  json doc{{"config", config_to_json(report.config)}, {"rows", rows}, {"aggregates", aggregates}};
  if (!report.coverage.empty()) {
    json coverage = json::array();
    for (const CoverageRow& c : report.coverage) {
      coverage.push_back(json{{"n", c.n},
                              {"replications", c.replications},
                              {"level", c.level},
                              {"coverage", c.coverage},
                              {"binomial_se", c.binomial_se}});
    }
    doc["coverage"] = std::move(coverage);
  }
  return doc.dump(2);
}

RunReport report_from_json(const std::string& text) {
  const json doc = json::parse(text);
  RunReport report;
  report.config = config_from_json(doc.at("config"));
  for (const json& row : doc.at("rows")) {
    ReportRow r;
    r.diagnostics = diagnostics_from_json(row);
    r.replication = row.at("replication").get<std::size_t>();
    r.seed = row.at("seed").get<std::uint64_t>();
    report.rows.push_back(r);
  }
  for (const json& a : doc.at("aggregates")) {
    Aggregate g;
    g.n = a.at("n").get<std::size_t>();
    g.median_tv_gap = a.at("median_tv_gap").get<double>();
    g.tv_gap_q25 = a.at("tv_gap_q25").get<double>();
    g.tv_gap_q75 = a.at("tv_gap_q75").get<double>();
    g.median_localized_post_mean = a.at("median_localized_post_mean").get<double>();
    g.median_localized_post_var = a.at("median_localized_post_var").get<double>();
    report.aggregates.push_back(g);
  }
  if (doc.contains("coverage")) {
    for (const json& c : doc.at("coverage")) {
      CoverageRow row;
      row.n = c.at("n").get<std::size_t>();
      row.replications = c.at("replications").get<std::size_t>();
      row.level = c.at("level").get<double>();
      row.coverage = c.at("coverage").get<double>();
      row.binomial_se = c.at("binomial_se").get<double>();
      report.coverage.push_back(row);
    }
  }
  return report;
}

void write_rows_csv(std::ostream& out, const RunReport& report) {
  set_precision(out);
  out << "replication,seed,n,delta_n,info_tilde,localized_post_mean,localized_post_var,tv_gap\n";
  for (const ReportRow& r : report.rows) {
    const BvmDiagnostics& d = r.diagnostics;
    out << r.replication << ',' << r.seed << ',' << d.n << ',' << d.delta_n << ',' << d.info_tilde
        << ',' << d.localized_post_mean << ',' << d.localized_post_var << ',' << d.tv_gap << '\n';
  }
}

void write_aggregates_csv(std::ostream& out, const RunReport& report) {
  set_precision(out);
  out << "n,median_tv_gap,tv_gap_q25,tv_gap_q75,median_localized_post_mean,"
         "median_localized_post_var\n";
  for (const Aggregate& a : report.aggregates) {
    out << a.n << ',' << a.median_tv_gap << ',' << a.tv_gap_q25 << ',' << a.tv_gap_q75 << ','
        << a.median_localized_post_mean << ',' << a.median_localized_post_var << '\n';
  }
}

void write_coverage_csv(std::ostream& out, const RunReport& report) {
  set_precision(out);
  out << "n,replications,level,coverage,binomial_se\n";
  for (const CoverageRow& c : report.coverage) {
    out << c.n << ',' << c.replications << ',' << c.level << ',' << c.coverage << ','
        << c.binomial_se << '\n';
  }
}

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

void check_written(std::ostream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace

void write_report(const RunReport& report, const std::string& path, ReportFormat format) {
  if (format == ReportFormat::json) {
    auto out = open_output(path);
    out << report_to_json(report) << '\n';
    check_written(out, path);
    return;
  }
  {
    auto out = open_output(path);
    write_rows_csv(out, report);
    check_written(out, path);
  }
  {
    const std::string agg_path = path + ".aggregates.csv";
    auto out = open_output(agg_path);
    write_aggregates_csv(out, report);
    check_written(out, agg_path);
  }
  if (!report.coverage.empty()) {
    const std::string cov_path = path + ".coverage.csv";
    auto out = open_output(cov_path);
    write_coverage_csv(out, report);
    check_written(out, cov_path);
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  set_precision(out);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_dataset_csv(std::ostream& out, const Dataset& ds) {
  set_precision(out);
  out << "u,v,y,e\n";
  for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
    out << ds.u[i] << ',' << ds.v[i] << ',' << ds.y[i] << ',';
    if (ds.noise) out << (*ds.noise)[i];
    out << '\n';
  }
}

void write_chain_csv(std::ostream& out, const GibbsChain& chain) {
  set_precision(out);
  const Eigen::Index m = chain.draws.cols() - 1;
  out << "iter,theta";
  for (Eigen::Index j = 0; j < m; ++j) out << ",eta_" << j;
  out << '\n';
  for (Eigen::Index t = 0; t < chain.draws.rows(); ++t) {
    out << t;
    for (Eigen::Index j = 0; j <= m; ++j) out << ',' << chain.draws(t, j);
    out << '\n';
  }
}

}  // namespace semibvm
