#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stgcn/adam.hpp"
#include "stgcn/checkpoint.hpp"
#include "stgcn/graph.hpp"
#include "stgcn/hyper.hpp"
#include "stgcn/model.hpp"

namespace stgcn {

struct TrainOptions {
  double lr_theta = 0.0005;   // model parameters
  double lr_mu = 0.01;        // distribution centers
  double lr_sigma = 0.01;     // distribution half-widths
  double tau = 0.001;         // entropy regularization weight
  int t_trn = 2;              // ModelTraining epochs per cycle
  int t_val = 1;              // HyperTraining epochs per cycle
  /// Draw lambda ~ P(lambda|eps) each epoch; when false the exact center is
  /// used and no noise is consumed (plain GCN + DropEdge behavior).
  bool sample_hyper = true;
  /// Run HyperTraining epochs at all; when false every epoch is a
  /// ModelTraining epoch.
  bool hyper_training = true;
  /// Update the response parameters (W_lambda, b_lambda, e_W, e_b) during
  /// ModelTraining; frozen (with zero embeddings) the model is a plain GCN.
  bool train_hypernet = true;
  double dropout_temperature = 0.5;
  /// Test hook forwarded to backward().
  bool dropout_rate_grad = true;
  /// Half-width clamp of the hyperparameter distribution.
  double sigma_min = 0.01;
  double sigma_max = 2.0;
};

enum class Phase : char { Model = 'M', Hyper = 'H' };

struct EpochRecord {
  int epoch = 0;
  Phase phase = Phase::Model;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
  Vector lambda;  // constrained snapshot at the end of the epoch
};

/// One agent's complete training state: model, hyperparameter distribution,
/// optimizer states, schedule position and private random streams.
struct TrainState {
  ModelParams params;
  HyperDistribution dist;
  HyperSpace space;
  AdamState opt_theta;
  AdamState opt_mu;
  AdamState opt_sigma;
  TrainOptions opts;
  int epoch = 0;
  double last_train_loss = 0.0;
  rng::Stream hyper_stream{0};
  rng::Stream dropout_stream{0};

  /// Fresh state: Glorot model init from the init stream, mu drawn uniformly
  /// in the reference box (or supplied), sigma at init_sigma.
  static TrainState make(const std::vector<int>& dims, const HyperSpace& space,
                         const TrainOptions& opts, std::uint64_t root_seed,
                         std::uint64_t agent_id, double init_sigma = 0.5,
                         const std::optional<Vector>& mu0 = std::nullopt);

  /// Copies model, distribution and optimizer state from `src` (exploit
  /// semantics); schedule position and random streams stay this agent's own.
  void copy_learned_state(const TrainState& src);

  std::vector<NamedArray> to_arrays() const;
  void restore_arrays(const std::vector<NamedArray>& arrays);
};

enum class EpochStatus { Ok, Diverged };

struct EpochResult {
  EpochStatus status = EpochStatus::Ok;
  double loss = 0.0;
};

/// ModelTraining: sample lambda, DropEdge at the sampled rate, one Adam step
/// of every elementary parameter on the training loss. (mu, sigma) untouched.
EpochResult model_training_epoch(TrainState& state, const Graph& graph);

/// HyperTraining: sample lambda with recorded noise, evaluate the validation
/// loss (no decay term) minus tau * entropy, one Adam step of mu and sigma
/// through the response function, relaxed dropout and the reparameterized
/// sampler. Elementary parameters untouched.
EpochResult hyper_training_epoch(TrainState& state, const Graph& graph);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

enum class MaskKind { Train, Val, Test };

/// Deterministic evaluation at the distribution center: full adjacency, no
/// dropout, lambda = constrain(mu).
EvalResult evaluate(const ModelParams& params, const HyperDistribution& dist,
                    const HyperSpace& space, const Graph& graph,
                    const NormalizedAdjacency& full_adj, MaskKind kind);

struct LoopResult {
  std::vector<EpochRecord> history;
  bool aborted = false;
  std::string diagnostic;
};

/// The alternate schedule of Algorithm-style training: t_trn ModelTraining
/// epochs then t_val HyperTraining epochs, repeated until `max_epochs` total
/// (both kinds count). Each epoch appends a record with the deterministic
/// center evaluation on the validation split. A diverged epoch is retried
/// once with a fresh sample; a second consecutive failure aborts.
LoopResult run_alternate(TrainState& state, const Graph& graph,
                         const NormalizedAdjacency& full_adj, int max_epochs);

/// Writes the per-epoch history CSV: epoch, phase, train_loss, val_loss,
/// val_acc, then one column per constrained hyperparameter.
void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history,
                       const HyperSpace& space);

}  // namespace stgcn
