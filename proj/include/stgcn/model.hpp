#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stgcn/graph.hpp"
#include "stgcn/hyper.hpp"
#include "stgcn/rng.hpp"

namespace stgcn {

/// One graph-convolution layer with a best-response hypernet. The effective
/// parameters are the affine response
///   W_hat = W + W_lambda * diag(e_W z)   (column j scaled by (e_W z)_j)
///   b_hat = b + b_lambda .* (e_b z)
/// where z is the standardized unconstrained hyperparameter vector. With
/// zero embeddings the layer collapses to a plain GCN layer.
struct SelfTuningLayer {
  Matrix W;         // in x out
  Matrix W_lambda;  // in x out
  Vector b;         // out
  Vector b_lambda;  // out
  Matrix e_W;       // out x q
  Matrix e_b;       // out x q

  int in_dim() const { return static_cast<int>(W.rows()); }
  int out_dim() const { return static_cast<int>(W.cols()); }
  int hyper_dim() const { return static_cast<int>(e_W.cols()); }

  static SelfTuningLayer zeros(int in, int out, int q);
};

struct EffectiveParams {
  Matrix W_hat;
  Vector b_hat;
};

/// Response transform of one layer at conditioning vector `z`.
EffectiveParams effective_params(const SelfTuningLayer& layer, const Vector& z);

/// The full L-layer model. dims = (F, hidden..., C); all hidden activations
/// are ReLU and the last layer emits raw logits (softmax lives in the loss).
struct ModelParams {
  std::vector<SelfTuningLayer> layers;
  std::vector<int> dims;

  int num_layers() const { return static_cast<int>(layers.size()); }
  int hyper_dim() const { return layers.empty() ? 0 : layers.front().hyper_dim(); }

  /// Glorot-initialized weights, zero biases, down-scaled Glorot response
  /// slopes, zero hyper embeddings (so the initial response is the plain
  /// GCN regardless of lambda).
  static ModelParams init(const std::vector<int>& dims, int hyper_dim, rng::Stream& stream);
};

/// Gradient container with the same layout as ModelParams.
struct ModelGrads {
  std::vector<SelfTuningLayer> layers;
  static ModelGrads zeros_like(const ModelParams& params);
  bool all_finite() const;
};

/// A named view over one parameter tensor, used by the optimizer, the
/// checkpoint container and checksums.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  long size = 0;
  std::vector<long> shape;
};

std::vector<TensorRef> tensor_refs(ModelParams& params);
std::vector<TensorRef> tensor_refs(ModelGrads& grads);

/// FNV-1a over the exact bytes of every tensor; bitwise-equality probe.
std::uint64_t checksum(const ModelParams& params);

enum class Mode { Train, Eval };

/// Everything reverse mode needs to replay the pass: per-layer aggregated
/// inputs, pre-activations, post-activations, relaxed dropout masks, the
/// effective parameters, and the hyperparameter draw.
struct ForwardTrace {
  const NormalizedAdjacency* adj = nullptr;
  std::vector<Matrix> aggregated;   // P_l = A_hat * H_l
  std::vector<Matrix> pre_act;      // Z_l = P_l * W_hat_l + b_hat_l
  std::vector<Matrix> post_act;     // ReLU(Z_l), hidden layers only
  std::vector<Matrix> drop_mask;    // relaxed masks, hidden layers only (train mode)
  std::vector<EffectiveParams> effective;
  Matrix logits;
  HyperVector hp;
  Vector cond;                      // standardized conditioning vector z
  Mode mode = Mode::Eval;
  std::uint64_t seed = 0;
};

struct ForwardOptions {
  /// Temperature of the sigmoid-relaxed Bernoulli keep-mask. Train-mode
  /// dropout must stay differentiable in the rate, so the hard mask is
  /// replaced by m = sigmoid((logit(u) + logit(1-p)) / temperature).
  double dropout_temperature = 0.5;
};

/// Full-graph forward pass. Train mode samples relaxed dropout masks from
/// `seed`; eval mode scales activations by the exact keep probability and is
/// a deterministic pure function of (params, adj, X, hp).
ForwardTrace forward(const ModelParams& params, const NormalizedAdjacency& adj, const Matrix& X,
                     const HyperVector& hp, const HyperSpace& space, Mode mode,
                     std::uint64_t seed, const ForwardOptions& opts = {});

/// Mean softmax cross-entropy over masked nodes plus
/// weight_decay * (||W||^2 + ||b||^2) over the elementary parameters.
double loss_nll(const Matrix& logits, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask, double weight_decay,
                const ModelParams& params);

/// Row-wise softmax of logits.
Matrix softmax_rows(const Matrix& logits);

struct LossSpec {
  const std::vector<int>* labels = nullptr;
  const std::vector<std::uint8_t>* mask = nullptr;
  /// Constrained weight-decay coordinate; only added to the loss (and its
  /// gradients) when include_decay is set, i.e. for the training objective.
  double weight_decay = 0.0;
  bool include_decay = true;
  /// Test hook: disables the mask-path gradient into the dropout-rate
  /// coordinates while leaving the forward values untouched.
  bool dropout_rate_grad = true;
};

struct BackwardResult {
  ModelGrads grads;
  /// dL/dz through the hypernet conditioning path (all q coordinates).
  Vector d_cond;
  /// dL/dlambda (constrained) through the relaxed dropout masks and, when
  /// include_decay, the decay term. The edge-drop coordinate stays zero: the
  /// hard edge mask has no gradient and reaches lambda only through d_cond.
  Vector d_lambda;
  double loss = 0.0;
};

/// Exact reverse-mode gradients for the trace. Deterministic: replaying the
/// same trace yields bitwise-identical gradients.
BackwardResult backward(const ForwardTrace& trace, const ModelParams& params,
                        const HyperSpace& space, const LossSpec& loss,
                        const ForwardOptions& opts = {});

}  // namespace stgcn
