#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stgcn/csv.hpp"
#include "stgcn/errors.hpp"
#include "stgcn/runner.hpp"

namespace stgcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kMethodOrder{"rs", "hb", "pbt", "st", "pst"};

struct RunInfo {
  std::string dir;
  std::string dataset;
  int layers = 0;
  std::string method;
  double test_acc = 0.0;
  bool valid = false;        // summary readable and series non-empty
  bool has_series = false;
};

RunInfo read_run(const std::string& dir) {
  RunInfo info;
  info.dir = dir;
  const fs::path summary_path = fs::path(dir) / "summary.json";
  std::ifstream in(summary_path);
  if (!in) return info;
  try {
    json summary = json::parse(in);
    info.dataset = summary.at("dataset").get<std::string>();
    info.layers = summary.at("layers").get<int>();
    info.method = summary.at("method").get<std::string>();
    info.test_acc = summary.at("test_acc").get<double>();
  } catch (const json::exception&) {
    return info;
  }
  // A run with an empty epoch series is incomplete; render it as missing.
  const fs::path series_path = fs::path(dir) / "series.csv";
  std::ifstream series(series_path);
  if (series) {
    std::string header, first_row;
    std::getline(series, header);
    info.has_series = static_cast<bool>(std::getline(series, first_row)) && !first_row.empty();
  }
  info.valid = !fs::exists(series_path) || info.has_series;
  return info;
}

}  // namespace

void write_report(const std::vector<std::string>& run_dirs, const std::string& out_path,
                  const ReportOptions& opts) {
  if (run_dirs.empty()) throw ConfigError("report: need at least one run directory");
  std::vector<RunInfo> runs;
  for (const auto& dir : run_dirs) runs.push_back(read_run(dir));

  std::set<std::string> datasets;
  for (const auto& r : runs) {
    if (r.valid) datasets.insert(r.dataset);
  }
  if (datasets.size() > 1 && !opts.allow_mixed) {
    std::string names;
    for (const auto& d : datasets) names += (names.empty() ? "" : ", ") + d;
    throw ConfigError("report: runs mix datasets (" + names +
                      "); pass the mixed flag to combine them");
  }

  // Matrix keyed by (dataset, layers) x method. Later runs of the same cell
  // overwrite earlier ones.
  std::map<std::pair<std::string, int>, std::map<std::string, std::string>> cells;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const auto key = r.valid ? std::make_pair(r.dataset, r.layers)
                             : std::make_pair(std::string("unknown"), 0);
    const std::string method = r.valid ? r.method : "?";
    cells[key][method] = r.valid ? csv::fmt(r.test_acc) : "missing";
  }

  std::ostringstream table;
  table << std::left << std::setw(14) << "dataset" << std::setw(7) << "layer";
  for (const auto& m : kMethodOrder) table << std::setw(10) << m;
  table << "\n";
  csv::Writer matrix(out_path + ".csv");
  std::vector<std::string> header{"dataset", "layers"};
  header.insert(header.end(), kMethodOrder.begin(), kMethodOrder.end());
  matrix.row(header);
  for (const auto& [key, row] : cells) {
    table << std::left << std::setw(14) << key.first << std::setw(7) << key.second;
    std::vector<std::string> csv_row{key.first, std::to_string(key.second)};
    for (const auto& m : kMethodOrder) {
      auto it = row.find(m);
      const std::string cell = it == row.end() ? "-" : it->second;
      table << std::setw(10) << (cell.size() > 9 ? cell.substr(0, 9) : cell);
      csv_row.push_back(it == row.end() ? "" : it->second);
    }
    table << "\n";
    matrix.row(csv_row);
  }

  std::ofstream text(out_path, std::ios::binary);
  if (!text) throw IoError("cannot write report: " + out_path);
  text << table.str();

  // Re-emit per-run epoch series for plotting; skip runs without one.
  int emitted = 0;
  for (const auto& r : runs) {
    if (!r.valid || !r.has_series) continue;
    std::ifstream in(fs::path(r.dir) / "series.csv", std::ios::binary);
    if (!in) continue;
    std::ofstream out(out_path + ".series-" + std::to_string(emitted++) + ".csv",
                      std::ios::binary);
    out << in.rdbuf();
  }
}

}  // namespace stgcn
