#include "stgcn/adam.hpp"

#include <cmath>

#include "stgcn/errors.hpp"

namespace stgcn {

void AdamState::ensure_size(long n) {
  if (!initialized_) {
    m_ = Vector::Zero(n);
    v_ = Vector::Zero(n);
    initialized_ = true;
  } else if (m_.size() != n) {
    throw ShapeError("AdamState: parameter size changed between steps");
  }
}

void AdamState::restore(const Vector& m, const Vector& v, long t) {
  if (m.size() != v.size()) throw ShapeError("AdamState::restore: moment size mismatch");
  m_ = m;
  v_ = v;
  t_ = t;
  initialized_ = true;
}

void AdamState::step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads,
                     double lr) {
  if (params.size() != grads.size()) throw ShapeError("AdamState: tensor count mismatch");
  long total = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size != grads[i].size) throw ShapeError("AdamState: tensor shape mismatch");
    total += params[i].size;
  }
  ensure_size(total);
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  long off = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    double* p = params[i].data;
    const double* g = grads[i].data;
    for (long k = 0; k < params[i].size; ++k) {
      if (!std::isfinite(g[k])) throw NumericError("AdamState: non-finite gradient");
      double& m = m_[off + k];
      double& v = v_[off + k];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g[k];
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g[k] * g[k];
      p[k] -= lr * (m / c1) / (std::sqrt(v / c2) + cfg_.eps);
    }
    off += params[i].size;
  }
}

void AdamState::step(double* param, const double* grad, long n, double lr) {
  std::vector<TensorRef> p{TensorRef{"param", param, n, {n}}};
  std::vector<TensorRef> g{TensorRef{"grad", const_cast<double*>(grad), n, {n}}};
  step(p, g, lr);
}

}  // namespace stgcn
