#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Dense>

#include "semibvm/experiments.hpp"
#include "semibvm/posterior.hpp"

namespace semibvm {

std::string report_to_json(const RunReport& report);
RunReport report_from_json(const std::string& text);

std::string diagnostics_to_json(const BvmDiagnostics& d);

/// Rows as CSV with header replication,seed,n,delta_n,info_tilde,...
void write_rows_csv(std::ostream& out, const RunReport& report);
void write_aggregates_csv(std::ostream& out, const RunReport& report);
void write_coverage_csv(std::ostream& out, const RunReport& report);

/// Writes the report to `path` (JSON, or CSV rows plus `<path>.aggregates.csv`
/// or `<path>.coverage.csv`). Throws std::runtime_error on I/O failure.
void write_report(const RunReport& report, const std::string& path, ReportFormat format);

/// Full matrix, row-major, comma separated, round-trip precision.
void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
/// Columns u,v,y,e (e empty when the dataset has no noise record).
void write_dataset_csv(std::ostream& out, const Dataset& ds);
/// Columns iter,theta,eta_0..eta_{m-1}.
void write_chain_csv(std::ostream& out, const GibbsChain& chain);

}  // namespace semibvm
