#include "stgcn/baselines.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "stgcn/csv.hpp"
#include "stgcn/errors.hpp"

namespace stgcn {

TrainOptions plain_options(TrainOptions base) {
  base.sample_hyper = false;
  base.hyper_training = false;
  base.train_hypernet = false;
  return base;
}

TrialRun start_plain_trial(const HyperSpace& space, const BaselineConfig& config,
                           const Vector& lambda, int trial_id, std::uint64_t root_seed) {
  TrialRun run;
  run.state = TrainState::make(config.dims, space, plain_options(config.train), root_seed,
                               static_cast<std::uint64_t>(trial_id), config.init_sigma,
                               space.unconstrain(lambda));
  run.trial.id = trial_id;
  run.trial.lambda = lambda;
  return run;
}

void TrialRun::advance(const Graph& graph, const NormalizedAdjacency& full_adj, int epochs) {
  if (trial.dead) return;
  for (int e = 0; e < epochs; ++e) {
    LoopResult res = run_alternate(state, graph, full_adj, 1);
    if (res.aborted) {
      trial.dead = true;
      trial.best_val_acc = 0.0;
      trial.test_acc = 0.0;
      return;
    }
    history.insert(history.end(), res.history.begin(), res.history.end());
    ++trial.budget_epochs;
    const double val_acc = res.history.back().val_acc;
    if (val_acc > trial.best_val_acc) {
      trial.best_val_acc = val_acc;
      trial.test_acc = evaluate(state.params, state.dist, state.space, graph, full_adj,
                                MaskKind::Test)
                           .accuracy;
    }
  }
}

namespace {

void parallel_trials(std::vector<TrialRun>& runs, int workers,
                     const std::function<void(TrialRun&)>& fn) {
  if (workers <= 1 || runs.size() <= 1) {
    for (auto& r : runs) fn(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto body = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      fn(runs[i]);
    }
  };
  std::vector<std::thread> threads;
  const int n = std::min<int>(workers, static_cast<int>(runs.size()));
  for (int w = 0; w < n; ++w) threads.emplace_back(body);
  for (auto& t : threads) t.join();
}

int best_trial_index(const std::vector<Trial>& trials) {
  int best = -1;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].dead) continue;
    if (best < 0 || trials[i].best_val_acc > trials[best].best_val_acc) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

RandomSearchResult random_search(const HyperSpace& space, const Graph& graph,
                                 const NormalizedAdjacency& full_adj,
                                 const BaselineConfig& config, int n_trials, int budget_epochs,
                                 std::uint64_t seed) {
  if (n_trials < 1) throw ConfigError("random_search: need at least one trial");
  std::vector<TrialRun> runs;
  runs.reserve(n_trials);
  for (int t = 0; t < n_trials; ++t) {
    rng::Stream draw(rng::derive_seed(seed, "search", static_cast<std::uint64_t>(t)));
    const Vector lambda = space.constrain(space.draw_initial(draw));
    runs.push_back(start_plain_trial(space, config, lambda, t, seed));
  }
  parallel_trials(runs, config.workers,
                  [&](TrialRun& r) { r.advance(graph, full_adj, budget_epochs); });

  RandomSearchResult result;
  for (auto& r : runs) {
    result.total_epochs += r.trial.budget_epochs;
    result.trials.push_back(std::move(r.trial));
  }
  result.best_index = best_trial_index(result.trials);
  return result;
}

std::vector<HbBracket> hyperband_brackets(int max_budget, int eta) {
  if (eta < 2) throw ConfigError("hyperband: eta must be at least 2");
  if (max_budget < eta) throw ConfigError("hyperband: max budget must be at least eta");
  int s_max = 0;
  long power = 1;
  while (power * eta <= max_budget) {
    power *= eta;
    ++s_max;
  }
  std::vector<HbBracket> brackets;
  for (int s = s_max; s >= 0; --s) {
    long eta_s = 1;
    for (int k = 0; k < s; ++k) eta_s *= eta;
    HbBracket b;
    b.s = s;
    b.n0 = static_cast<int>(((s_max + 1) * eta_s + s) / (s + 1));  // ceil
    b.r0 = static_cast<int>(max_budget / eta_s);
    brackets.push_back(b);
  }
  return brackets;
}

HyperbandResult hyperband(const HyperSpace& space, const Graph& graph,
                          const NormalizedAdjacency& full_adj, const BaselineConfig& config,
                          int max_budget_epochs, int eta, std::uint64_t seed) {
  HyperbandResult result;
  int next_id = 0;
  for (const HbBracket& bracket : hyperband_brackets(max_budget_epochs, eta)) {
    std::vector<TrialRun> runs;
    runs.reserve(bracket.n0);
    for (int c = 0; c < bracket.n0; ++c) {
      const int id = next_id++;
      rng::Stream draw(rng::derive_seed(seed, "search", static_cast<std::uint64_t>(id)));
      const Vector lambda = space.constrain(space.draw_initial(draw));
      runs.push_back(start_plain_trial(space, config, lambda, id, seed));
      runs.back().trial.bracket = bracket.s;
    }
    std::vector<int> alive(runs.size());
    for (std::size_t i = 0; i < runs.size(); ++i) alive[i] = static_cast<int>(i);

    for (int rung = 0; rung <= bracket.s; ++rung) {
      long target = bracket.r0;
      for (int k = 0; k < rung; ++k) target *= eta;
      // Advance survivors in parallel up to the rung's cumulative budget.
      std::atomic<std::size_t> cursor{0};
      auto body = [&]() {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= alive.size()) return;
          TrialRun& r = runs[alive[i]];
          const int add = static_cast<int>(target) - r.trial.budget_epochs;
          if (add > 0) r.advance(graph, full_adj, add);
        }
      };
      if (config.workers <= 1 || alive.size() <= 1) {
        body();
      } else {
        std::vector<std::thread> threads;
        const int n = std::min<int>(config.workers, static_cast<int>(alive.size()));
        for (int w = 0; w < n; ++w) threads.emplace_back(body);
        for (auto& t : threads) t.join();
      }

      HbRungLog log;
      log.bracket = bracket.s;
      log.rung = rung;
      log.n_configs = static_cast<int>(alive.size());
      log.budget = static_cast<int>(target);
      if (rung < bracket.s) {
        // Keep the top ceil(n/eta) by validation accuracy, ties by trial id.
        std::sort(alive.begin(), alive.end(), [&](int a, int b) {
          if (runs[a].trial.best_val_acc != runs[b].trial.best_val_acc)
            return runs[a].trial.best_val_acc > runs[b].trial.best_val_acc;
          return runs[a].trial.id < runs[b].trial.id;
        });
        const int keep = (static_cast<int>(alive.size()) + eta - 1) / eta;
        alive.resize(keep);
        std::sort(alive.begin(), alive.end());
      }
      for (int idx : alive) log.survivors.push_back(runs[idx].trial.id);
      result.rungs.push_back(std::move(log));
    }
    for (auto& r : runs) {
      result.total_epochs += r.trial.budget_epochs;
      result.trials.push_back(std::move(r.trial));
    }
  }
  result.best_index = best_trial_index(result.trials);
  return result;
}

PbtBaselineResult pbt_baseline(const Graph& graph, const NormalizedAdjacency& full_adj,
                               const BaselineConfig& config, int population, int step_epochs,
                               int warmup_epochs, int total_epochs, std::uint64_t seed) {
  PopulationConfig pop;
  pop.size = population;
  pop.dims = config.dims;
  pop.train = plain_options(config.train);
  pop.init_sigma = config.init_sigma;
  pop.step_epochs = step_epochs;
  pop.warmup_epochs = warmup_epochs;
  pop.total_epochs = total_epochs;
  pop.workers = config.workers;

  PbtBaselineResult result;
  result.run = run_population(pop, graph, full_adj, seed);
  const Agent& best = result.run.agents[result.run.best_index];
  result.best.id = best.id;
  result.best.lambda = center(best.state.dist, best.state.space).lambda;
  result.best.budget_epochs = static_cast<int>(best.history.size());
  result.best.best_val_acc = best.last_val_acc;
  result.best.test_acc = evaluate(best.state.params, best.state.dist, best.state.space, graph,
                                  full_adj, MaskKind::Test)
                             .accuracy;
  return result;
}

void write_trials_csv(const std::string& path, const std::vector<Trial>& trials,
                      const HyperSpace& space) {
  csv::Writer out(path);
  std::vector<std::string> header{"trial_id", "bracket", "budget"};
  for (const auto& d : space.dims()) header.push_back(d.name);
  header.push_back("best_val_acc");
  header.push_back("test_acc");
  out.row(header);
  for (const auto& t : trials) {
    std::vector<std::string> cells{std::to_string(t.id), std::to_string(t.bracket),
                                   std::to_string(t.budget_epochs)};
    for (int i = 0; i < t.lambda.size(); ++i) cells.push_back(csv::fmt(t.lambda[i]));
    cells.push_back(csv::fmt(t.best_val_acc));
    cells.push_back(csv::fmt(t.test_acc));
    out.row(cells);
  }
}

}  // namespace stgcn
