#include "vigan/harness/report.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "vigan/common/error.h"
#include "vigan/harness/config.h"
#include "vigan/harness/runner.h"

namespace vigan::harness {
namespace {

constexpr const char* kCsvHeader = "env,n_traj,method,eval_return";

// Known methods sort in their declaration order, anything else after them.
int MethodRank(const std::string& method) {
  try {
    return static_cast<int>(ParseMethodId(method));
  } catch (const ConfigError&) {
    return 1000;
  }
}

std::string Fixed(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

bool IsVideo(const std::string& method) {
  const int rank = MethodRank(method);
  return rank != 1000 && IsVideoMethod(static_cast<MethodId>(rank));
}

double Round4(double v) { return std::stod(Fixed("%.4f", v)); }

}  // namespace

std::vector<ReportEntry> Consolidate(const std::vector<ReportEntry>& entries) {
  using Key = std::tuple<std::string, std::size_t, int, std::string>;
  std::map<Key, std::pair<double, int>> sums;
  for (const ReportEntry& e : entries) {
    auto& [sum, count] = sums[Key{e.env, e.n_traj, MethodRank(e.method), e.method}];
    sum += e.eval_return;
    ++count;
  }
  std::vector<ReportEntry> out;
  for (const auto& [key, acc] : sums) {
    out.push_back({std::get<0>(key), std::get<1>(key), std::get<3>(key), Round4(acc.first / acc.second)});
  }
  return out;
}

std::vector<ReportEntry> LoadReportInputs(const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw Error("report needs at least one run");
  std::vector<ReportEntry> entries;
  for (const std::string& input : inputs) {
    if (std::filesystem::is_regular_file(input)) {
      std::ifstream in(input, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      try {
        for (auto& e : ParseReportCsv(buf.str())) entries.push_back(std::move(e));
      } catch (const Error& e) {
        throw Error(input + ": " + e.what());
      }
      continue;
    }
    const RunSummary s = ReadSummary(input);
    entries.push_back({s.env, s.n_traj, s.method, s.eval_mean});
  }
  return Consolidate(entries);
}

std::string ReportCsv(const std::vector<ReportEntry>& entries) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const ReportEntry& e : Consolidate(entries)) {
    out += e.env + "," + std::to_string(e.n_traj) + "," + e.method + "," + Fixed("%.4f", e.eval_return) + "\n";
  }
  return out;
}

std::vector<ReportEntry> ParseReportCsv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error("not a report CSV (bad header)");
  std::vector<ReportEntry> entries;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) throw Error("report CSV line " + std::to_string(line_no) + " is malformed");
    try {
      entries.push_back({cells[0], std::stoul(cells[1]), cells[2], std::stod(cells[3])});
    } catch (const std::logic_error&) {
      throw Error("report CSV line " + std::to_string(line_no) + " is malformed");
    }
  }
  return entries;
}

std::string ReportTable(const std::vector<ReportEntry>& raw) {
  const std::vector<ReportEntry> entries = Consolidate(raw);
  std::vector<std::string> methods;
  for (const ReportEntry& e : entries) {
    if (std::find(methods.begin(), methods.end(), e.method) == methods.end()) methods.push_back(e.method);
  }
  std::stable_sort(methods.begin(), methods.end(),
                   [](const std::string& a, const std::string& b) { return MethodRank(a) < MethodRank(b); });

  // Rows in first-appearance order, which Consolidate already sorted.
  std::vector<std::pair<std::string, std::size_t>> rows;
  std::map<std::pair<std::string, std::size_t>, std::map<std::string, double>> cells;
  for (const ReportEntry& e : entries) {
    const auto key = std::make_pair(e.env, e.n_traj);
    if (!cells.count(key)) rows.push_back(key);
    cells[key][e.method] = e.eval_return;
  }

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"env", "#traj"};
  header.insert(header.end(), methods.begin(), methods.end());
  grid.push_back(header);
  for (const auto& key : rows) {
    const auto& row = cells[key];
    double best = -1e300;
    bool any_video = false;
    for (const auto& [m, v] : row) {
      if (IsVideo(m)) {
        best = std::max(best, v);
        any_video = true;
      }
    }
    std::vector<std::string> line{key.first, std::to_string(key.second)};
    for (const std::string& m : methods) {
      auto it = row.find(m);
      if (it == row.end()) {
        line.push_back("-");
        continue;
      }
      std::string cell = Fixed("%.1f", it->second);
      if (any_video && IsVideo(m) && it->second == best) cell += "*";
      line.push_back(cell);
    }
    grid.push_back(line);
  }

  std::vector<std::size_t> widths(grid.front().size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    std::string text;
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      const std::string& s = grid[r][c];
      const std::string pad(widths[c] - s.size(), ' ');
      text += (c < 2 ? s + pad : pad + s);
      if (c + 1 < grid[r].size()) text += "  ";
    }
    out += text + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      out += std::string(total - 2, '-') + "\n";
    }
  }
  out += "* best of vigan, pixel and tcn in the row\n";
  return out;
}

}  // namespace vigan::harness
