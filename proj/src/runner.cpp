#include "stgcn/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "stgcn/baselines.hpp"
#include "stgcn/csv.hpp"
#include "stgcn/errors.hpp"
#include "stgcn/pbt.hpp"
#include "stgcn/synthetic.hpp"

namespace stgcn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_series_csv(const std::string& path, const std::vector<EpochRecord>& history) {
  csv::Writer out(path);
  out.row({"epoch", "val_acc", "val_loss"});
  for (const auto& rec : history) {
    out.row({std::to_string(rec.epoch), csv::fmt(rec.val_acc), csv::fmt(rec.val_loss)});
  }
}

std::vector<int> model_dims(const ExperimentConfig& cfg, const Graph& graph) {
  std::vector<int> dims{graph.feature_dim()};
  for (int l = 0; l < cfg.layers - 1; ++l) dims.push_back(cfg.hidden);
  dims.push_back(graph.num_classes);
  return dims;
}

}  // namespace

std::string default_out_root() {
  if (const char* env = std::getenv("STGCN_OUT_ROOT")) return env;
  return "runs";
}

std::string run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  // Dataset: load or generate, then split. All data randomness comes from
  // the "data" stream of the root seed.
  const std::uint64_t data_seed = rng::derive_seed(config.seed, "data");
  Graph graph;
  double oracle_acc = -1.0;
  if (config.dataset.kind == DatasetConfig::Kind::Files) {
    graph = load_citation_raw(config.dataset.content_path, config.dataset.cites_path);
  } else {
    SyntheticResult synth = generate_synthetic(config.dataset.synthetic, config.seed);
    graph = std::move(synth.graph);
    oracle_acc = synth.oracle_acc;
  }
  graph = split_nodes(graph,
                      SplitPolicy::fractions(config.dataset.split_train, config.dataset.split_val,
                                             config.dataset.split_test),
                      data_seed);
  const NormalizedAdjacency full_adj = normalize(graph);
  const std::vector<int> dims = model_dims(config, graph);
  const HyperSpace space = HyperSpace::for_layers(config.layers);

  const std::string root = config.out_root.empty() ? default_out_root() : config.out_root;
  const std::string run_name = config.method + "_" + config.dataset.name() + "_L" +
                               std::to_string(config.layers) + "_seed" +
                               std::to_string(config.seed);
  const fs::path run_dir = fs::path(root) / run_name;
  fs::create_directories(run_dir);
  {
    std::ofstream snapshot(run_dir / "config.snapshot");
    snapshot << config.to_ini();
  }

  double best_val_acc = 0.0, test_acc = 0.0;
  long epoch_budget = 0;

  if (config.method == "st") {
    TrainState state = TrainState::make(dims, space, config.train, config.seed, 0,
                                        config.init_sigma);
    LoopResult res = run_alternate(state, graph, full_adj, config.method_params.max_epochs);
    write_history_csv((run_dir / "history.csv").string(), res.history, space);
    write_series_csv((run_dir / "series.csv").string(), res.history);
    if (res.aborted) throw NumericError("st run aborted: " + res.diagnostic);
    best_val_acc =
        evaluate(state.params, state.dist, state.space, graph, full_adj, MaskKind::Val).accuracy;
    test_acc =
        evaluate(state.params, state.dist, state.space, graph, full_adj, MaskKind::Test).accuracy;
    epoch_budget = static_cast<long>(res.history.size());
  } else if (config.method == "pst" || config.method == "pbt") {
    PopulationConfig pop;
    pop.size = config.method_params.population;
    pop.dims = dims;
    pop.train = config.method == "pbt" ? plain_options(config.train) : config.train;
    pop.init_sigma = config.init_sigma;
    pop.step_epochs = config.method_params.step_epochs;
    pop.warmup_epochs = config.method_params.warmup_epochs;
    pop.total_epochs = config.method_params.total_epochs;
    pop.workers = config.workers;
    PopulationRun run = run_population(pop, graph, full_adj, config.seed);
    write_leaderboard_csv((run_dir / "leaderboard.csv").string(), run.leaderboard);
    for (const auto& agent : run.agents) {
      const fs::path agent_dir = run_dir / "agents" / std::to_string(agent.id);
      fs::create_directories(agent_dir);
      write_history_csv((agent_dir / "history.csv").string(), agent.history, space);
    }
    const Agent& best = run.agents[run.best_index];
    write_series_csv((run_dir / "series.csv").string(), best.history);
    best_val_acc = best.last_val_acc;
    test_acc = evaluate(best.state.params, best.state.dist, best.state.space, graph, full_adj,
                        MaskKind::Test)
                   .accuracy;
    epoch_budget = run.trained_epochs;
  } else if (config.method == "rs") {
    BaselineConfig base{dims, config.train, config.init_sigma, config.workers};
    RandomSearchResult res =
        random_search(space, graph, full_adj, base, config.method_params.trials,
                      config.method_params.budget_epochs, config.seed);
    write_trials_csv((run_dir / "trials.csv").string(), res.trials, space);
    if (res.best_index < 0) throw NumericError("random search: every trial diverged");
    best_val_acc = res.trials[res.best_index].best_val_acc;
    test_acc = res.trials[res.best_index].test_acc;
    epoch_budget = res.total_epochs;
  } else if (config.method == "hb") {
    BaselineConfig base{dims, config.train, config.init_sigma, config.workers};
    HyperbandResult res = hyperband(space, graph, full_adj, base,
                                    config.method_params.hb_max_budget,
                                    config.method_params.hb_eta, config.seed);
    write_trials_csv((run_dir / "trials.csv").string(), res.trials, space);
    {
      csv::Writer rungs((run_dir / "hb_rungs.csv").string());
      rungs.row({"bracket", "rung", "n_configs", "budget"});
      for (const auto& r : res.rungs) {
        rungs.row({std::to_string(r.bracket), std::to_string(r.rung),
                   std::to_string(r.n_configs), std::to_string(r.budget)});
      }
    }
    if (res.best_index < 0) throw NumericError("hyperband: every trial diverged");
    best_val_acc = res.trials[res.best_index].best_val_acc;
    test_acc = res.trials[res.best_index].test_acc;
    epoch_budget = res.total_epochs;
  } else {
    throw ConfigError("unknown method '" + config.method + "'");
  }

  const double wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  json summary{{"method", config.method},
               {"dataset", config.dataset.name()},
               {"layers", config.layers},
               {"best_val_acc", best_val_acc},
               {"test_acc", test_acc},
               {"wall_time_s", wall_seconds},
               {"epoch_budget", epoch_budget},
               {"seed", config.seed}};
  if (oracle_acc >= 0.0) summary["oracle_acc"] = oracle_acc;
  std::ofstream out(run_dir / "summary.json");
  out << summary.dump(2) << "\n";
  return run_dir.string();
}

}  // namespace stgcn
