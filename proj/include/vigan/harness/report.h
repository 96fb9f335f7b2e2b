#ifndef VIGAN_HARNESS_REPORT_H_
#define VIGAN_HARNESS_REPORT_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace vigan::harness {

// One table cell: the final evaluation return of a method on an
// environment with a given number of demonstrations.
struct ReportEntry {
  std::string env;
  std::size_t n_traj = 0;
  std::string method;
  double eval_return = 0.0;

  friend bool operator==(const ReportEntry&, const ReportEntry&) = default;
};

// Averages entries sharing (env, n_traj, method), rounds returns to the 4
// decimals the CSV keeps, and sorts by env, n_traj and method order.
std::vector<ReportEntry> Consolidate(const std::vector<ReportEntry>& entries);

// Each input is a run directory holding summary.csv or a report CSV written
// by ReportCsv. A run without a summary row raises an Error naming it.
std::vector<ReportEntry> LoadReportInputs(const std::vector<std::string>& inputs);

// Long format: env,n_traj,method,eval_return.
std::string ReportCsv(const std::vector<ReportEntry>& entries);
std::vector<ReportEntry> ParseReportCsv(std::string_view csv);

// Rows (env, n_traj), one column per method. The best video method of each
// row (vigan, pixel or tcn) is marked with '*'.
std::string ReportTable(const std::vector<ReportEntry>& entries);

}  // namespace vigan::harness

#endif  // VIGAN_HARNESS_REPORT_H_
