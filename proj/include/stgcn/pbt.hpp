#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stgcn/graph.hpp"
#include "stgcn/trainer.hpp"

namespace stgcn {

enum class AgentStatus { Running, Ready, Dead };

/// One population member: a full training state plus scheduler bookkeeping.
struct Agent {
  int id = 0;
  TrainState state;
  int step_count = 0;
  double last_val_acc = 0.0;
  AgentStatus status = AgentStatus::Running;
  std::string diagnostic;
  std::vector<EpochRecord> history;
};

struct PopulationConfig {
  int size = 20;
  std::vector<int> dims;          // model layer dimensions (F, hidden..., C)
  TrainOptions train;
  double init_sigma = 0.5;
  int step_epochs = 1;            // one training epoch per step after warmup
  int warmup_epochs = 200;
  int total_epochs = 400;         // per agent, warmup included
  double top_fraction = 1.0 / 3.0;
  double bottom_fraction = 1.0 / 3.0;
  bool exploit_enabled = true;
  bool explore_enabled = true;
  int workers = 1;
  PerturbOptions perturb;
  std::string checkpoint_dir;     // agents/<id>/step_<n> containers when set
  int checkpoint_every = 0;       // steps between checkpoints; 0 disables
};

struct LeaderboardRow {
  int step = 0;
  int agent_id = 0;
  double val_acc = 0.0;
  std::string tier;    // top | middle | bottom
  std::string action;  // none | exploited_from:<id> | explored
};

struct PopulationRun {
  std::vector<Agent> agents;
  int best_index = -1;
  std::vector<LeaderboardRow> leaderboard;
  long trained_epochs = 0;
};

/// Top/bottom tier sizes for n ranked agents: ceil(n*top) and
/// floor(n*bottom), clamped so every tier is representable.
std::pair<int, int> tier_sizes(int n, double top_fraction, double bottom_fraction);

/// Agent indices ranked by last validation accuracy, descending; ties broken
/// by lower agent id. Dead agents are excluded.
std::vector<int> rank_agents(const std::vector<Agent>& agents);

/// Exploitation barrier: every bottom-tier agent receives a full copy of
/// model, distribution and optimizer state from a uniformly chosen top
/// agent. Returns (bottom_id, source_id) assignments; empty (with a warning
/// on the diagnostics of none) when fewer than 3 agents are alive.
std::vector<std::pair<int, int>> exploit(std::vector<Agent>& agents, double top_fraction,
                                         double bottom_fraction, rng::Stream& stream);

/// Exploration: perturbs (mu, sigma) of one agent and refreshes its
/// validation accuracy. Model parameters are untouched.
void explore(Agent& agent, const PerturbOptions& opts, rng::Stream& stream, const Graph& graph,
             const NormalizedAdjacency& full_adj);

/// Advances one agent by `step_epochs` epochs of the alternate schedule,
/// then refreshes last_val_acc. Marks the agent dead on a training abort.
void training_step(Agent& agent, const Graph& graph, const NormalizedAdjacency& full_adj,
                   int step_epochs);

/// Algorithm-2 style population run: warmup without exploit/explore, then
/// repeated (train step, barrier, exploit, explore) until each live agent
/// has consumed total_epochs. Reproducible for any worker count: randomness
/// is confined to per-agent streams plus one scheduler stream consumed in
/// agent-id order at barriers.
PopulationRun run_population(const PopulationConfig& config, const Graph& graph,
                             const NormalizedAdjacency& full_adj, std::uint64_t root_seed);

void write_leaderboard_csv(const std::string& path, const std::vector<LeaderboardRow>& rows);

}  // namespace stgcn
