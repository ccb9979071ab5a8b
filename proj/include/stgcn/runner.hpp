#pragma once

#include <string>
#include <vector>

#include "stgcn/config.hpp"

namespace stgcn {

/// Executes the configured experiment and writes the run directory
/// (config snapshot, per-epoch CSVs, leaderboards or trial logs, series.csv
/// and summary.json). Returns the run directory path.
std::string run_experiment(const ExperimentConfig& config);

struct ReportOptions {
  bool allow_mixed = false;  // permit mixing datasets in one table
};

/// Aggregates run directories into a dataset x layer x method accuracy
/// matrix (text at `out_path`, CSV at `out_path`.csv) and re-emits each
/// run's epoch series (`out_path`.series-<k>.csv with columns epoch,
/// val_acc, val_loss). Runs with missing summaries or empty series render
/// as "missing" cells.
void write_report(const std::vector<std::string>& run_dirs, const std::string& out_path,
                  const ReportOptions& opts = {});

/// Default output root: $STGCN_OUT_ROOT when set, else "runs".
std::string default_out_root();

}  // namespace stgcn
