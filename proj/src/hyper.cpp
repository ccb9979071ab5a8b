#include "stgcn/hyper.hpp"

#include <algorithm>
#include <cmath>

#include "stgcn/errors.hpp"

namespace stgcn {

namespace {

constexpr double kRateScale = 0.9;
constexpr double kDecayLo = 1e-6;
constexpr double kDecayHi = 1e-2;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

HyperSpace HyperSpace::for_layers(int num_layers) {
  if (num_layers < 2) throw ConfigError("HyperSpace: need at least 2 layers");
  std::vector<HyperDim> dims;
  for (int l = 0; l < num_layers - 1; ++l) {
    dims.push_back({"dropout_" + std::to_string(l), HyperKind::DropoutRate, 0.0, kRateScale,
                    0.0, 2.0});
  }
  dims.push_back({"edge_drop", HyperKind::EdgeDropRate, 0.0, kRateScale, 0.0, 2.0});
  const double lo = std::log(kDecayLo), hi = std::log(kDecayHi);
  dims.push_back({"weight_decay", HyperKind::WeightDecay, kDecayLo, kDecayHi,
                  0.5 * (lo + hi), 0.5 * (hi - lo)});
  return HyperSpace(std::move(dims));
}

void HyperSpace::check_dim(const Vector& v) const {
  if (v.size() != size()) throw ShapeError("hyper vector dimension mismatch");
}

Vector HyperSpace::constrain(const Vector& u) const {
  check_dim(u);
  Vector lambda(size());
  for (int i = 0; i < size(); ++i) {
    const HyperDim& d = dims_[i];
    if (d.kind == HyperKind::WeightDecay) {
      lambda[i] = std::clamp(std::exp(u[i]), d.lo, d.hi);
    } else {
      lambda[i] = d.hi * sigmoid(u[i]);
    }
  }
  return lambda;
}

Vector HyperSpace::unconstrain(const Vector& lambda) const {
  check_dim(lambda);
  Vector u(size());
  for (int i = 0; i < size(); ++i) {
    const HyperDim& d = dims_[i];
    if (d.kind == HyperKind::WeightDecay) {
      u[i] = std::log(lambda[i]);
    } else {
      const double p = lambda[i] / d.hi;
      u[i] = std::log(p / (1.0 - p));
    }
  }
  return u;
}

Vector HyperSpace::constrain_grad(const Vector& u) const {
  check_dim(u);
  Vector g(size());
  for (int i = 0; i < size(); ++i) {
    const HyperDim& d = dims_[i];
    if (d.kind == HyperKind::WeightDecay) {
      const double e = std::exp(u[i]);
      g[i] = (e > d.lo && e < d.hi) ? e : 0.0;
    } else {
      const double s = sigmoid(u[i]);
      g[i] = d.hi * s * (1.0 - s);
    }
  }
  return g;
}

Vector HyperSpace::standardize(const Vector& u) const {
  check_dim(u);
  Vector z(size());
  for (int i = 0; i < size(); ++i) {
    z[i] = (u[i] - dims_[i].ref_center) / dims_[i].ref_half;
  }
  return z;
}

Vector HyperSpace::standardize_grad() const {
  Vector g(size());
  for (int i = 0; i < size(); ++i) g[i] = 1.0 / dims_[i].ref_half;
  return g;
}

Vector HyperSpace::draw_initial(rng::Stream& stream) const {
  Vector u(size());
  for (int i = 0; i < size(); ++i) {
    u[i] = dims_[i].ref_center + dims_[i].ref_half * stream.symmetric();
  }
  return u;
}

HyperVector make_hyper(const HyperSpace& space, const Vector& u) {
  return HyperVector{u, space.constrain(u)};
}

void HyperDistribution::clamp_sigma() {
  for (int i = 0; i < sigma.size(); ++i) {
    sigma[i] = std::clamp(sigma[i], sigma_min, sigma_max);
  }
}

double HyperDistribution::entropy() const {
  double h = 0.0;
  for (int i = 0; i < sigma.size(); ++i) {
    if (sigma[i] <= 0.0) throw std::invalid_argument("HyperDistribution: sigma must be positive");
    h += std::log(2.0 * sigma[i]);
  }
  return h;
}

HyperSample sample(const HyperDistribution& dist, const HyperSpace& space, rng::Stream& stream) {
  if (dist.mu.size() != space.size() || dist.sigma.size() != space.size())
    throw ShapeError("HyperDistribution dimension mismatch");
  Vector noise(space.size());
  for (int i = 0; i < space.size(); ++i) noise[i] = stream.symmetric();
  const Vector u = dist.mu + dist.sigma.cwiseProduct(noise);
  return HyperSample{make_hyper(space, u), noise};
}

HyperSample sample(const HyperDistribution& dist, const HyperSpace& space, std::uint64_t seed) {
  rng::Stream stream(seed);
  return sample(dist, space, stream);
}

HyperVector center(const HyperDistribution& dist, const HyperSpace& space) {
  return make_hyper(space, dist.mu);
}

HyperDistribution perturb(const HyperDistribution& dist, rng::Stream& stream,
                          const PerturbOptions& opts) {
  HyperDistribution out = dist;
  for (int i = 0; i < out.mu.size(); ++i) {
    out.mu[i] += out.sigma[i] * stream.symmetric();
    out.sigma[i] *= (stream.below(2) == 0 ? opts.shrink : opts.grow);
  }
  out.clamp_sigma();
  return out;
}

}  // namespace stgcn
