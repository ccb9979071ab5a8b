#pragma once

#include <string>
#include <vector>

#include "stgcn/graph.hpp"
#include "stgcn/rng.hpp"

namespace stgcn {

enum class HyperKind { DropoutRate, EdgeDropRate, WeightDecay };

/// One searched hyperparameter dimension. `lo`/`hi` bound the constrained
/// value; `ref_center`/`ref_half` define a reference box in unconstrained
/// space used both to draw initial centers and to standardize the vector fed
/// to the hypernets.
struct HyperDim {
  std::string name;
  HyperKind kind = HyperKind::DropoutRate;
  double lo = 0.0, hi = 0.9;
  double ref_center = 0.0, ref_half = 2.0;
};

/// The ordered hyperparameter space of an L-layer model: L-1 hidden dropout
/// rates, one edge-drop rate, one weight decay (q = L + 1).
class HyperSpace {
 public:
  HyperSpace() = default;
  explicit HyperSpace(std::vector<HyperDim> dims) : dims_(std::move(dims)) {}

  static HyperSpace for_layers(int num_layers);

  int size() const { return static_cast<int>(dims_.size()); }
  const HyperDim& dim(int i) const { return dims_[i]; }
  const std::vector<HyperDim>& dims() const { return dims_; }

  /// Index of the hidden-dropout dimension feeding layer `layer` (0-based).
  int hidden_rate_dim(int layer) const { return layer; }
  int edge_rate_dim() const { return size() - 2; }
  int weight_decay_dim() const { return size() - 1; }

  /// Unconstrained -> constrained, per dimension. Rates map through a scaled
  /// sigmoid onto (0, 0.9); weight decay through exp clamped to its range.
  Vector constrain(const Vector& u) const;
  Vector unconstrain(const Vector& lambda) const;
  /// d(constrain)/du; zero inside the weight-decay clamp saturation.
  Vector constrain_grad(const Vector& u) const;

  /// Standardized copy of `u` (per-dimension affine using the reference
  /// box), the conditioning input handed to the hypernets.
  Vector standardize(const Vector& u) const;
  /// d(standardize)/du, a constant diagonal.
  Vector standardize_grad() const;

  /// Uniform draw inside the reference box, used to initialize centers.
  Vector draw_initial(rng::Stream& stream) const;

 private:
  void check_dim(const Vector& v) const;
  std::vector<HyperDim> dims_;
};

/// A concrete hyperparameter vector: unconstrained coordinates plus the
/// cached constrained image.
struct HyperVector {
  Vector u;
  Vector lambda;
};

HyperVector make_hyper(const HyperSpace& space, const Vector& u);

/// P(lambda | eps): a box distribution in unconstrained space with centers
/// `mu` and half-widths `sigma` (log-uniform in constrained space for the
/// exp-transformed decay dimension). `sigma` is kept inside
/// [sigma_min, sigma_max]; the floor keeps the entropy bounded below and the
/// distribution non-degenerate.
struct HyperDistribution {
  Vector mu;
  Vector sigma;
  double sigma_min = 0.01;
  double sigma_max = 2.0;

  void clamp_sigma();
  /// Differential entropy: sum_i ln(2 sigma_i).
  double entropy() const;
};

/// A reparameterized draw: noise is uniform on [-1, 1]^q and
/// u = mu + sigma * noise, so d(u)/d(mu) = 1 and d(u)/d(sigma) = noise.
struct HyperSample {
  HyperVector value;
  Vector noise;
};

HyperSample sample(const HyperDistribution& dist, const HyperSpace& space, rng::Stream& stream);
HyperSample sample(const HyperDistribution& dist, const HyperSpace& space, std::uint64_t seed);

/// The exact center of the distribution (no noise consumed).
HyperVector center(const HyperDistribution& dist, const HyperSpace& space);

struct PerturbOptions {
  double shrink = 0.8;
  double grow = 1.2;
};

/// Exploration move: shifts each center by sigma_i * U[-1, 1] and rescales
/// each half-width by a factor drawn from {shrink, grow}, then clamps.
HyperDistribution perturb(const HyperDistribution& dist, rng::Stream& stream,
                          const PerturbOptions& opts = {});

}  // namespace stgcn
