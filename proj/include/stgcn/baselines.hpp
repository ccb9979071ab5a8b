#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgcn/graph.hpp"
#include "stgcn/pbt.hpp"
#include "stgcn/trainer.hpp"

namespace stgcn {

/// One fixed-configuration trial: the hyperparameters never move during
/// training (self-tuning disabled, hypernet embeddings frozen at zero, no
/// HyperTraining) so the run is a plain GCN + DropEdge through the exact
/// same code path as the self-tuning model.
struct Trial {
  int id = 0;
  int bracket = -1;               // Hyperband only
  Vector lambda;                  // constrained, fixed for the whole trial
  int budget_epochs = 0;          // epochs actually consumed
  double best_val_acc = 0.0;      // best-epoch validation accuracy
  double test_acc = 0.0;          // test accuracy at the best epoch
  bool dead = false;
};

struct BaselineConfig {
  std::vector<int> dims;
  TrainOptions train;             // plain-mode flags are forced internally
  double init_sigma = 0.5;
  int workers = 1;
};

/// Plain-mode copy of `base`: no lambda sampling, no HyperTraining, response
/// parameters frozen.
TrainOptions plain_options(TrainOptions base);

/// A resumable plain trial (Hyperband rungs pick these up from where the
/// previous rung stopped).
struct TrialRun {
  TrainState state;
  Trial trial;
  std::vector<EpochRecord> history;

  /// Trains `epochs` more; per epoch refreshes best-epoch bookkeeping
  /// (validation accuracy plus the test accuracy at that epoch). A diverged
  /// trial is marked dead with accuracy 0 and stops consuming budget.
  void advance(const Graph& graph, const NormalizedAdjacency& full_adj, int epochs);
};

/// Starts a plain trial at the given constrained hyperparameters.
TrialRun start_plain_trial(const HyperSpace& space, const BaselineConfig& config,
                           const Vector& lambda, int trial_id, std::uint64_t root_seed);

struct RandomSearchResult {
  std::vector<Trial> trials;
  int best_index = -1;
  long total_epochs = 0;
};

/// Random search: n_trials independent draws of lambda, uniform in
/// unconstrained bounds (log-uniform in constrained space), each trained for
/// budget_epochs. Winner by best-epoch validation accuracy, ties to the
/// lower trial id.
RandomSearchResult random_search(const HyperSpace& space, const Graph& graph,
                                 const NormalizedAdjacency& full_adj,
                                 const BaselineConfig& config, int n_trials, int budget_epochs,
                                 std::uint64_t seed);

struct HbBracket {
  int s = 0;          // bracket index
  int n0 = 0;         // initial number of configurations
  int r0 = 0;         // initial per-config budget (epochs)
};

/// Bracket plan: s = s_max..0 with n = ceil((s_max+1)/(s+1) * eta^s) and
/// r = max_budget * eta^{-s}.
std::vector<HbBracket> hyperband_brackets(int max_budget, int eta);

struct HbRungLog {
  int bracket = 0;
  int rung = 0;
  int n_configs = 0;
  int budget = 0;     // cumulative per-config epochs at this rung
  std::vector<int> survivors;
};

struct HyperbandResult {
  std::vector<Trial> trials;
  int best_index = -1;
  long total_epochs = 0;
  std::vector<HbRungLog> rungs;
};

/// Hyperband with successive halving: each rung keeps the top ceil(n/eta)
/// by validation accuracy (ties by trial id) and resumes survivors from
/// their live state rather than retraining.
HyperbandResult hyperband(const HyperSpace& space, const Graph& graph,
                          const NormalizedAdjacency& full_adj, const BaselineConfig& config,
                          int max_budget_epochs, int eta, std::uint64_t seed);

struct PbtBaselineResult {
  Trial best;
  PopulationRun run;
};

/// Population based training over fixed-lambda plain GCNs: exploit/explore
/// exactly as in the self-tuning population, but no HyperTraining; each
/// agent's lambda is a point value moved only by explore.
PbtBaselineResult pbt_baseline(const Graph& graph, const NormalizedAdjacency& full_adj,
                               const BaselineConfig& config, int population, int step_epochs,
                               int warmup_epochs, int total_epochs, std::uint64_t seed);

/// Trial log CSV: trial_id, bracket, budget, lambda columns, best_val_acc,
/// test_acc.
void write_trials_csv(const std::string& path, const std::vector<Trial>& trials,
                      const HyperSpace& space);

}  // namespace stgcn
