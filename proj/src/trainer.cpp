#include "stgcn/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "stgcn/csv.hpp"
#include "stgcn/errors.hpp"

namespace stgcn {

namespace {

const std::vector<std::uint8_t>& mask_of(const Graph& graph, MaskKind kind) {
  switch (kind) {
    case MaskKind::Train: return graph.train_mask;
    case MaskKind::Val: return graph.val_mask;
    default: return graph.test_mask;
  }
}

HyperSample draw(TrainState& state) {
  if (state.opts.sample_hyper) {
    return sample(state.dist, state.space, state.hyper_stream);
  }
  return HyperSample{center(state.dist, state.space), Vector::Zero(state.space.size())};
}

void zero_hypernet(ModelGrads& grads) {
  for (auto& l : grads.layers) {
    l.W_lambda.setZero();
    l.b_lambda.setZero();
    l.e_W.setZero();
    l.e_b.setZero();
  }
}

}  // namespace

TrainState TrainState::make(const std::vector<int>& dims, const HyperSpace& space,
                            const TrainOptions& opts, std::uint64_t root_seed,
                            std::uint64_t agent_id, double init_sigma,
                            const std::optional<Vector>& mu0) {
  TrainState state;
  state.space = space;
  state.opts = opts;
  rng::Stream init_stream(rng::derive_seed(root_seed, "init", agent_id));
  state.params = ModelParams::init(dims, space.size(), init_stream);
  state.dist.mu = mu0 ? *mu0 : space.draw_initial(init_stream);
  state.dist.sigma = Vector::Constant(space.size(), init_sigma);
  state.dist.sigma_min = opts.sigma_min;
  state.dist.sigma_max = opts.sigma_max;
  state.dist.clamp_sigma();
  state.hyper_stream = rng::Stream(rng::derive_seed(root_seed, "hyper", agent_id));
  state.dropout_stream = rng::Stream(rng::derive_seed(root_seed, "dropout", agent_id));
  return state;
}

void TrainState::copy_learned_state(const TrainState& src) {
  params = src.params;
  dist = src.dist;
  opt_theta = src.opt_theta;
  opt_mu = src.opt_mu;
  opt_sigma = src.opt_sigma;
}

std::vector<NamedArray> TrainState::to_arrays() const {
  std::vector<NamedArray> arrays;
  auto add_matrix = [&](const std::string& name, const Matrix& m) {
    arrays.push_back(NamedArray{name, {m.rows(), m.cols()},
                                std::vector<double>(m.data(), m.data() + m.size())});
  };
  auto add_vector = [&](const std::string& name, const Vector& v) {
    arrays.push_back(
        NamedArray{name, {v.size()}, std::vector<double>(v.data(), v.data() + v.size())});
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const auto& layer = params.layers[l];
    const std::string prefix = "layers/" + std::to_string(l) + "/";
    add_matrix(prefix + "W", layer.W);
    add_matrix(prefix + "W_lambda", layer.W_lambda);
    add_vector(prefix + "b", layer.b);
    add_vector(prefix + "b_lambda", layer.b_lambda);
    add_matrix(prefix + "e_W", layer.e_W);
    add_matrix(prefix + "e_b", layer.e_b);
  }
  add_vector("hyper/mu", dist.mu);
  add_vector("hyper/sigma", dist.sigma);
  arrays.push_back(NamedArray{"hyper/sigma_bounds", {2}, {dist.sigma_min, dist.sigma_max}});
  auto add_opt = [&](const std::string& name, const AdamState& opt) {
    add_vector(name + "/m", opt.m());
    add_vector(name + "/v", opt.v());
    arrays.push_back(NamedArray{name + "/t", {1}, {static_cast<double>(opt.timestep())}});
  };
  add_opt("opt/theta", opt_theta);
  add_opt("opt/mu", opt_mu);
  add_opt("opt/sigma", opt_sigma);
  arrays.push_back(NamedArray{"epoch", {1}, {static_cast<double>(epoch)}});
  return arrays;
}

void TrainState::restore_arrays(const std::vector<NamedArray>& arrays) {
  auto find = [&](const std::string& name) -> const NamedArray& {
    for (const auto& a : arrays)
      if (a.name == name) return a;
    throw IoError("checkpoint missing array: " + name);
  };
  auto to_matrix = [&](const NamedArray& a) {
    if (a.shape.size() != 2) throw ShapeError("checkpoint array '" + a.name + "' is not 2-d");
    Matrix m(a.shape[0], a.shape[1]);
    std::copy(a.data.begin(), a.data.end(), m.data());
    return m;
  };
  auto to_vector = [&](const NamedArray& a) {
    Vector v(static_cast<long>(a.data.size()));
    std::copy(a.data.begin(), a.data.end(), v.data());
    return v;
  };
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    auto& layer = params.layers[l];
    const std::string prefix = "layers/" + std::to_string(l) + "/";
    layer.W = to_matrix(find(prefix + "W"));
    layer.W_lambda = to_matrix(find(prefix + "W_lambda"));
    layer.b = to_vector(find(prefix + "b"));
    layer.b_lambda = to_vector(find(prefix + "b_lambda"));
    layer.e_W = to_matrix(find(prefix + "e_W"));
    layer.e_b = to_matrix(find(prefix + "e_b"));
  }
  dist.mu = to_vector(find("hyper/mu"));
  dist.sigma = to_vector(find("hyper/sigma"));
  const auto& bounds = find("hyper/sigma_bounds");
  dist.sigma_min = bounds.data.at(0);
  dist.sigma_max = bounds.data.at(1);
  auto restore_opt = [&](const std::string& name, AdamState& opt) {
    opt.restore(to_vector(find(name + "/m")), to_vector(find(name + "/v")),
                static_cast<long>(find(name + "/t").data.at(0)));
  };
  restore_opt("opt/theta", opt_theta);
  restore_opt("opt/mu", opt_mu);
  restore_opt("opt/sigma", opt_sigma);
  epoch = static_cast<int>(find("epoch").data.at(0));
}

EpochResult model_training_epoch(TrainState& state, const Graph& graph) {
  if (graph.train_mask.empty()) throw ConfigError("model_training_epoch: no train mask");
  HyperSample hs = draw(state);
  const std::uint64_t edge_seed = state.dropout_stream.next_u64();
  const std::uint64_t mask_seed = state.dropout_stream.next_u64();
  const double edge_rate = hs.value.lambda[state.space.edge_rate_dim()];
  const double wd = hs.value.lambda[state.space.weight_decay_dim()];
  const ForwardOptions fwd_opts{state.opts.dropout_temperature};
  try {
    NormalizedAdjacency adj = drop_edge(graph, edge_rate, edge_seed);
    ForwardTrace trace = forward(state.params, adj, graph.features, hs.value, state.space,
                                 Mode::Train, mask_seed, fwd_opts);
    LossSpec spec;
    spec.labels = &graph.labels;
    spec.mask = &graph.train_mask;
    spec.weight_decay = wd;
    spec.include_decay = true;
    spec.dropout_rate_grad = state.opts.dropout_rate_grad;
    BackwardResult back = backward(trace, state.params, state.space, spec, fwd_opts);
    if (!std::isfinite(back.loss) || !back.grads.all_finite()) {
      return EpochResult{EpochStatus::Diverged, back.loss};
    }
    if (!state.opts.train_hypernet) zero_hypernet(back.grads);
    state.opt_theta.step(tensor_refs(state.params), tensor_refs(back.grads),
                         state.opts.lr_theta);
    state.last_train_loss = back.loss;
    return EpochResult{EpochStatus::Ok, back.loss};
  } catch (const NumericError&) {
    return EpochResult{EpochStatus::Diverged, std::nan("")};
  }
}

EpochResult hyper_training_epoch(TrainState& state, const Graph& graph) {
  if (graph.val_mask.empty()) throw ConfigError("hyper_training_epoch: no val mask");
  HyperSample hs = draw(state);
  const std::uint64_t edge_seed = state.dropout_stream.next_u64();
  const std::uint64_t mask_seed = state.dropout_stream.next_u64();
  const double edge_rate = hs.value.lambda[state.space.edge_rate_dim()];
  const ForwardOptions fwd_opts{state.opts.dropout_temperature};
  try {
    NormalizedAdjacency adj = drop_edge(graph, edge_rate, edge_seed);
    ForwardTrace trace = forward(state.params, adj, graph.features, hs.value, state.space,
                                 Mode::Train, mask_seed, fwd_opts);
    LossSpec spec;
    spec.labels = &graph.labels;
    spec.mask = &graph.val_mask;
    spec.weight_decay = 0.0;
    spec.include_decay = false;  // validation objective carries no decay term
    spec.dropout_rate_grad = state.opts.dropout_rate_grad;
    BackwardResult back = backward(trace, state.params, state.space, spec, fwd_opts);
    const double objective = back.loss - state.opts.tau * state.dist.entropy();

    // Chain dL/dz and dL/dlambda into unconstrained coordinates, then into
    // (mu, sigma) via the reparameterization u = mu + sigma * noise.
    const Vector du = back.d_cond.cwiseProduct(state.space.standardize_grad()) +
                      back.d_lambda.cwiseProduct(state.space.constrain_grad(hs.value.u));
    Vector d_mu = du;
    Vector d_sigma = du.cwiseProduct(hs.noise);
    for (int i = 0; i < d_sigma.size(); ++i) {
      d_sigma[i] -= state.opts.tau / state.dist.sigma[i];
    }
    if (!std::isfinite(objective) || !d_mu.allFinite() || !d_sigma.allFinite()) {
      return EpochResult{EpochStatus::Diverged, objective};
    }
    state.opt_mu.step(state.dist.mu.data(), d_mu.data(), d_mu.size(), state.opts.lr_mu);
    state.opt_sigma.step(state.dist.sigma.data(), d_sigma.data(), d_sigma.size(),
                         state.opts.lr_sigma);
    state.dist.clamp_sigma();
    return EpochResult{EpochStatus::Ok, objective};
  } catch (const NumericError&) {
    return EpochResult{EpochStatus::Diverged, std::nan("")};
  }
}

EvalResult evaluate(const ModelParams& params, const HyperDistribution& dist,
                    const HyperSpace& space, const Graph& graph,
                    const NormalizedAdjacency& full_adj, MaskKind kind) {
  const auto& mask = mask_of(graph, kind);
  if (mask.empty()) throw ConfigError("evaluate: mask unset");
  const HyperVector hp = center(dist, space);
  ForwardTrace trace = forward(params, full_adj, graph.features, hp, space, Mode::Eval, 0);
  int count = 0, correct = 0;
  for (int i = 0; i < graph.num_nodes; ++i) {
    if (!mask[i]) continue;
    int best = 0;
    for (int c = 1; c < trace.logits.cols(); ++c) {
      if (trace.logits(i, c) > trace.logits(i, best)) best = c;
    }
    correct += (best == graph.labels[i]);
    ++count;
  }
  if (count == 0) throw ConfigError("evaluate: empty mask");
  EvalResult res;
  res.accuracy = static_cast<double>(correct) / count;
  res.loss = loss_nll(trace.logits, graph.labels, mask, 0.0, params);
  return res;
}

LoopResult run_alternate(TrainState& state, const Graph& graph,
                         const NormalizedAdjacency& full_adj, int max_epochs) {
  if (state.opts.t_trn < 1 || (state.opts.hyper_training && state.opts.t_val < 1))
    throw ConfigError("run_alternate: schedule lengths must be at least 1");
  LoopResult result;
  const int cycle = state.opts.t_trn + state.opts.t_val;
  for (int done = 0; done < max_epochs; ++done) {
    const bool hyper_phase =
        state.opts.hyper_training && (state.epoch % cycle) >= state.opts.t_trn;
    EpochResult er = hyper_phase ? hyper_training_epoch(state, graph)
                                 : model_training_epoch(state, graph);
    if (er.status == EpochStatus::Diverged) {
      er = hyper_phase ? hyper_training_epoch(state, graph)
                       : model_training_epoch(state, graph);
      if (er.status == EpochStatus::Diverged) {
        result.aborted = true;
        result.diagnostic = "non-finite loss in " +
                            std::string(hyper_phase ? "HyperTraining" : "ModelTraining") +
                            " epoch " + std::to_string(state.epoch) + " (retry failed)";
        return result;
      }
    }
    ++state.epoch;
    EvalResult ev = evaluate(state.params, state.dist, state.space, graph, full_adj,
                             MaskKind::Val);
    EpochRecord rec;
    rec.epoch = state.epoch;
    rec.phase = hyper_phase ? Phase::Hyper : Phase::Model;
    rec.train_loss = state.last_train_loss;
    rec.val_loss = ev.loss;
    rec.val_acc = ev.accuracy;
    rec.lambda = center(state.dist, state.space).lambda;
    result.history.push_back(std::move(rec));
  }
  return result;
}

void write_history_csv(const std::string& path, const std::vector<EpochRecord>& history,
                       const HyperSpace& space) {
  csv::Writer out(path);
  std::vector<std::string> header{"epoch", "phase", "train_loss", "val_loss", "val_acc"};
  for (const auto& d : space.dims()) header.push_back(d.name);
  out.row(header);
  for (const auto& rec : history) {
    std::vector<std::string> cells{std::to_string(rec.epoch),
                                   std::string(1, static_cast<char>(rec.phase)),
                                   csv::fmt(rec.train_loss), csv::fmt(rec.val_loss),
                                   csv::fmt(rec.val_acc)};
    for (int i = 0; i < rec.lambda.size(); ++i) cells.push_back(csv::fmt(rec.lambda[i]));
    out.row(cells);
  }
}

}  // namespace stgcn
