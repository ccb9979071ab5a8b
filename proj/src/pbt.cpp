#include "stgcn/pbt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <thread>

#include "stgcn/csv.hpp"
#include "stgcn/errors.hpp"

namespace stgcn {

namespace {

void parallel_over(std::vector<Agent*>& work, int workers, const std::function<void(Agent&)>& fn) {
  if (workers <= 1 || work.size() <= 1) {
    for (Agent* a : work) fn(*a);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= work.size()) return;
      fn(*work[i]);
    }
  };
  std::vector<std::thread> threads;
  const int n = std::min<int>(workers, static_cast<int>(work.size()));
  threads.reserve(n);
  for (int w = 0; w < n; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
}

std::vector<Agent*> live_agents(std::vector<Agent>& agents) {
  std::vector<Agent*> out;
  for (auto& a : agents)
    if (a.status != AgentStatus::Dead) out.push_back(&a);
  return out;
}

void checkpoint_agent(const PopulationConfig& config, const Agent& agent, int step) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(config.checkpoint_dir) / "agents" / std::to_string(agent.id);
  fs::create_directories(dir);
  save_checkpoint((dir / ("step_" + std::to_string(step))).string(), agent.state.to_arrays());
}

}  // namespace

std::pair<int, int> tier_sizes(int n, double top_fraction, double bottom_fraction) {
  int n_top = static_cast<int>(std::ceil(n * top_fraction));
  int n_bottom = static_cast<int>(std::floor(n * bottom_fraction));
  n_top = std::clamp(n_top, 1, n);
  n_bottom = std::clamp(n_bottom, 1, n - n_top);
  return {n_top, n_bottom};
}

std::vector<int> rank_agents(const std::vector<Agent>& agents) {
  std::vector<int> order;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].status != AgentStatus::Dead) order.push_back(static_cast<int>(i));
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (agents[a].last_val_acc != agents[b].last_val_acc)
      return agents[a].last_val_acc > agents[b].last_val_acc;
    return agents[a].id < agents[b].id;
  });
  return order;
}

std::vector<std::pair<int, int>> exploit(std::vector<Agent>& agents, double top_fraction,
                                         double bottom_fraction, rng::Stream& stream) {
  const std::vector<int> order = rank_agents(agents);
  if (order.size() < 3) return {};  // exploitation skipped; population too small
  const auto [n_top, n_bottom] = tier_sizes(static_cast<int>(order.size()), top_fraction,
                                            bottom_fraction);
  std::vector<int> bottom(order.end() - n_bottom, order.end());
  // Copies are assigned in agent-id order so the draw sequence does not
  // depend on how the ranking shuffled equal accuracies.
  std::sort(bottom.begin(), bottom.end(),
            [&](int a, int b) { return agents[a].id < agents[b].id; });
  std::vector<std::pair<int, int>> assignments;
  for (int idx : bottom) {
    const int src = order[static_cast<int>(stream.below(static_cast<std::uint64_t>(n_top)))];
    agents[idx].state.copy_learned_state(agents[src].state);
    agents[idx].last_val_acc = agents[src].last_val_acc;
    assignments.emplace_back(agents[idx].id, agents[src].id);
  }
  return assignments;
}

void explore(Agent& agent, const PerturbOptions& opts, rng::Stream& stream, const Graph& graph,
             const NormalizedAdjacency& full_adj) {
  agent.state.dist = perturb(agent.state.dist, stream, opts);
  agent.last_val_acc = evaluate(agent.state.params, agent.state.dist, agent.state.space, graph,
                                full_adj, MaskKind::Val)
                           .accuracy;
}

void training_step(Agent& agent, const Graph& graph, const NormalizedAdjacency& full_adj,
                   int step_epochs) {
  if (agent.status == AgentStatus::Dead) return;
  agent.status = AgentStatus::Running;
  try {
    LoopResult res = run_alternate(agent.state, graph, full_adj, step_epochs);
    agent.history.insert(agent.history.end(), res.history.begin(), res.history.end());
    if (res.aborted) {
      agent.status = AgentStatus::Dead;
      agent.diagnostic = res.diagnostic;
      return;
    }
    agent.last_val_acc = evaluate(agent.state.params, agent.state.dist, agent.state.space,
                                  graph, full_adj, MaskKind::Val)
                             .accuracy;
    ++agent.step_count;
    agent.status = AgentStatus::Ready;
  } catch (const std::exception& e) {
    agent.status = AgentStatus::Dead;
    agent.diagnostic = e.what();
  }
}

PopulationRun run_population(const PopulationConfig& config, const Graph& graph,
                             const NormalizedAdjacency& full_adj, std::uint64_t root_seed) {
  if (config.size < 1) throw ConfigError("run_population: population size must be positive");
  if (config.warmup_epochs > config.total_epochs)
    throw ConfigError("run_population: warmup exceeds total epochs");

  PopulationRun run;
  run.agents.reserve(config.size);
  for (int k = 0; k < config.size; ++k) {
    Agent agent;
    agent.id = k;
    agent.state = TrainState::make(config.dims, HyperSpace::for_layers(
                                       static_cast<int>(config.dims.size()) - 1),
                                   config.train, root_seed, static_cast<std::uint64_t>(k),
                                   config.init_sigma);
    run.agents.push_back(std::move(agent));
  }
  rng::Stream scheduler_stream(rng::derive_seed(root_seed, "pbt"));

  auto live = live_agents(run.agents);
  if (config.warmup_epochs > 0) {
    parallel_over(live, config.workers, [&](Agent& a) {
      try {
        LoopResult res = run_alternate(a.state, graph, full_adj, config.warmup_epochs);
        a.history.insert(a.history.end(), res.history.begin(), res.history.end());
        if (res.aborted) {
          a.status = AgentStatus::Dead;
          a.diagnostic = res.diagnostic;
          return;
        }
        a.last_val_acc = evaluate(a.state.params, a.state.dist, a.state.space, graph, full_adj,
                                  MaskKind::Val)
                             .accuracy;
        a.status = AgentStatus::Ready;
      } catch (const std::exception& e) {
        a.status = AgentStatus::Dead;
        a.diagnostic = e.what();
      }
    });
  }

  const int stepped = config.total_epochs - config.warmup_epochs;
  const int steps = config.step_epochs > 0 ? stepped / config.step_epochs : 0;
  for (int step = 1; step <= steps; ++step) {
    live = live_agents(run.agents);
    if (live.empty()) break;
    parallel_over(live, config.workers, [&](Agent& a) {
      training_step(a, graph, full_adj, config.step_epochs);
    });

    // Barrier: every live agent is ready here. Rank once, record the
    // leaderboard at the measured accuracies, then exploit/explore.
    const auto order = rank_agents(run.agents);
    const auto [n_top, n_bottom] =
        order.size() >= 3 ? tier_sizes(static_cast<int>(order.size()), config.top_fraction,
                                       config.bottom_fraction)
                          : std::pair<int, int>{static_cast<int>(order.size()), 0};
    const std::size_t first_row = run.leaderboard.size();
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const Agent& a = run.agents[order[pos]];
      LeaderboardRow row;
      row.step = step;
      row.agent_id = a.id;
      row.val_acc = a.last_val_acc;
      row.tier = pos < static_cast<std::size_t>(n_top) ? "top"
                 : pos >= order.size() - static_cast<std::size_t>(n_bottom) ? "bottom"
                                                                            : "middle";
      row.action = "none";
      run.leaderboard.push_back(std::move(row));
    }
    auto set_action = [&](int agent_id, const std::string& action) {
      for (std::size_t r = first_row; r < run.leaderboard.size(); ++r) {
        if (run.leaderboard[r].agent_id == agent_id) run.leaderboard[r].action = action;
      }
    };

    std::vector<std::pair<int, int>> assignments;
    if (config.exploit_enabled) {
      assignments = exploit(run.agents, config.top_fraction, config.bottom_fraction,
                            scheduler_stream);
      for (const auto& [bottom_id, src] : assignments) {
        set_action(bottom_id, "exploited_from:" + std::to_string(src));
      }
    }
    if (config.explore_enabled) {
      if (!assignments.empty()) {
        for (const auto& [bottom_id, src] : assignments) {
          explore(run.agents[bottom_id], config.perturb, scheduler_stream, graph, full_adj);
        }
      } else if (!config.exploit_enabled && order.size() >= 3) {
        // Ablation mode: perturb the bottom tier in place without copying.
        std::vector<int> bottom(order.end() - n_bottom, order.end());
        std::sort(bottom.begin(), bottom.end());
        for (int idx : bottom) {
          explore(run.agents[idx], config.perturb, scheduler_stream, graph, full_adj);
          set_action(run.agents[idx].id, "explored");
        }
      }
    }

    if (!config.checkpoint_dir.empty() && config.checkpoint_every > 0 &&
        step % config.checkpoint_every == 0) {
      for (const auto& a : run.agents) {
        if (a.status != AgentStatus::Dead) checkpoint_agent(config, a, step);
      }
    }
  }
  run.trained_epochs = 0;
  for (const auto& a : run.agents) run.trained_epochs += static_cast<long>(a.history.size());

  double best = -1.0;
  for (std::size_t i = 0; i < run.agents.size(); ++i) {
    const Agent& a = run.agents[i];
    if (a.status == AgentStatus::Dead) continue;
    if (a.last_val_acc > best) {
      best = a.last_val_acc;
      run.best_index = static_cast<int>(i);
    }
  }
  if (run.best_index < 0) {
    std::string diag = "all agents dead:";
    for (const auto& a : run.agents) diag += " [" + std::to_string(a.id) + "] " + a.diagnostic;
    throw NumericError(diag);
  }
  return run;
}

void write_leaderboard_csv(const std::string& path, const std::vector<LeaderboardRow>& rows) {
  csv::Writer out(path);
  out.row({"step", "agent_id", "val_acc", "tier", "action"});
  for (const auto& r : rows) {
    out.row({std::to_string(r.step), std::to_string(r.agent_id), csv::fmt(r.val_acc), r.tier,
             r.action});
  }
}

}  // namespace stgcn
