#pragma once

#include <vector>

#include "stgcn/model.hpp"

namespace stgcn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moment estimates over a fixed collection of
/// tensors (flattened in enumeration order). Lazily sized on the first step;
/// copyable so exploit can clone the whole optimizer state.
class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig cfg) : cfg_(cfg) {}

  /// One update of all tensors; params and grads must enumerate the same
  /// shapes in the same order. Throws NumericError on non-finite gradients.
  void step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads, double lr);

  /// One update of a single flat array.
  void step(double* param, const double* grad, long n, double lr);

  long timestep() const { return t_; }
  const Vector& m() const { return m_; }
  const Vector& v() const { return v_; }
  void restore(const Vector& m, const Vector& v, long t);

 private:
  void ensure_size(long n);

  AdamConfig cfg_;
  Vector m_, v_;
  long t_ = 0;
  bool initialized_ = false;
};

}  // namespace stgcn
