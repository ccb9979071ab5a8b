#include "stgcn/model.hpp"

#include <cmath>

#include "stgcn/errors.hpp"

namespace stgcn {

namespace {

constexpr double kRateFloor = 1e-12;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void hash_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

}  // namespace

SelfTuningLayer SelfTuningLayer::zeros(int in, int out, int q) {
  SelfTuningLayer l;
  l.W = Matrix::Zero(in, out);
  l.W_lambda = Matrix::Zero(in, out);
  l.b = Vector::Zero(out);
  l.b_lambda = Vector::Zero(out);
  l.e_W = Matrix::Zero(out, q);
  l.e_b = Matrix::Zero(out, q);
  return l;
}

EffectiveParams effective_params(const SelfTuningLayer& layer, const Vector& z) {
  if (z.size() != layer.hyper_dim()) throw ShapeError("effective_params: hyper dim mismatch");
  const Vector c_w = layer.e_W * z;
  const Vector c_b = layer.e_b * z;
  EffectiveParams eff;
  eff.W_hat = layer.W + layer.W_lambda * c_w.asDiagonal();
  eff.b_hat = layer.b + layer.b_lambda.cwiseProduct(c_b);
  return eff;
}

ModelParams ModelParams::init(const std::vector<int>& dims, int hyper_dim, rng::Stream& stream) {
  if (dims.size() < 3) throw ConfigError("ModelParams: need at least 2 layers");
  ModelParams params;
  params.dims = dims;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l], out = dims[l + 1];
    SelfTuningLayer layer = SelfTuningLayer::zeros(in, out, hyper_dim);
    const double bound = std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) layer.W(i, j) = stream.uniform(-bound, bound);
    const double response_bound = 0.1 * bound;
    for (int i = 0; i < in; ++i)
      for (int j = 0; j < out; ++j) layer.W_lambda(i, j) = stream.uniform(-response_bound, response_bound);
    for (int j = 0; j < out; ++j) layer.b_lambda(j) = stream.uniform(-response_bound, response_bound);
    params.layers.push_back(std::move(layer));
  }
  return params;
}

ModelGrads ModelGrads::zeros_like(const ModelParams& params) {
  ModelGrads g;
  for (const auto& layer : params.layers) {
    g.layers.push_back(
        SelfTuningLayer::zeros(layer.in_dim(), layer.out_dim(), layer.hyper_dim()));
  }
  return g;
}

bool ModelGrads::all_finite() const {
  for (const auto& l : layers) {
    if (!l.W.allFinite() || !l.W_lambda.allFinite() || !l.b.allFinite() ||
        !l.b_lambda.allFinite() || !l.e_W.allFinite() || !l.e_b.allFinite())
      return false;
  }
  return true;
}

namespace {

template <typename LayerVec>
std::vector<TensorRef> make_refs(LayerVec& layers) {
  std::vector<TensorRef> refs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    const std::string prefix = "layers/" + std::to_string(l) + "/";
    auto add = [&](const std::string& name, double* data, std::vector<long> shape) {
      long size = 1;
      for (long s : shape) size *= s;
      refs.push_back(TensorRef{prefix + name, data, size, std::move(shape)});
    };
    add("W", layer.W.data(), {layer.W.rows(), layer.W.cols()});
    add("W_lambda", layer.W_lambda.data(), {layer.W_lambda.rows(), layer.W_lambda.cols()});
    add("b", layer.b.data(), {layer.b.size()});
    add("b_lambda", layer.b_lambda.data(), {layer.b_lambda.size()});
    add("e_W", layer.e_W.data(), {layer.e_W.rows(), layer.e_W.cols()});
    add("e_b", layer.e_b.data(), {layer.e_b.rows(), layer.e_b.cols()});
  }
  return refs;
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& params) { return make_refs(params.layers); }
std::vector<TensorRef> tensor_refs(ModelGrads& grads) { return make_refs(grads.layers); }

std::uint64_t checksum(const ModelParams& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& l : params.layers) {
    hash_bytes(h, l.W.data(), sizeof(double) * l.W.size());
    hash_bytes(h, l.W_lambda.data(), sizeof(double) * l.W_lambda.size());
    hash_bytes(h, l.b.data(), sizeof(double) * l.b.size());
    hash_bytes(h, l.b_lambda.data(), sizeof(double) * l.b_lambda.size());
    hash_bytes(h, l.e_W.data(), sizeof(double) * l.e_W.size());
    hash_bytes(h, l.e_b.data(), sizeof(double) * l.e_b.size());
  }
  return h;
}

ForwardTrace forward(const ModelParams& params, const NormalizedAdjacency& adj, const Matrix& X,
                     const HyperVector& hp, const HyperSpace& space, Mode mode,
                     std::uint64_t seed, const ForwardOptions& opts) {
  const int L = params.num_layers();
  if (L < 1) throw ConfigError("forward: empty model");
  if (X.rows() != adj.num_nodes) throw ShapeError("forward: feature/adjacency row mismatch");
  if (X.cols() != params.layers.front().in_dim()) throw ShapeError("forward: feature dim mismatch");
  if (hp.u.size() != space.size() || params.hyper_dim() != space.size())
    throw ShapeError("forward: hyper dim mismatch");

  ForwardTrace trace;
  trace.adj = &adj;
  trace.hp = hp;
  trace.cond = space.standardize(hp.u);
  trace.mode = mode;
  trace.seed = seed;
  rng::Stream stream(seed);
  const double T = opts.dropout_temperature;

  Matrix H = X;
  for (int l = 0; l < L; ++l) {
    const auto& layer = params.layers[l];
    EffectiveParams eff = effective_params(layer, trace.cond);
    Matrix P = adj.multiply(H);
    Matrix Z = P * eff.W_hat;
    Z.rowwise() += eff.b_hat.transpose();
    if (!Z.allFinite())
      throw NumericError("forward: non-finite pre-activation in layer " + std::to_string(l));
    trace.aggregated.push_back(std::move(P));
    trace.effective.push_back(std::move(eff));
    if (l == L - 1) {
      trace.logits = Z;
      trace.pre_act.push_back(std::move(Z));
      break;
    }
    Matrix A = Z.cwiseMax(0.0);
    const double p = hp.lambda[space.hidden_rate_dim(l)];
    if (mode == Mode::Train) {
      Matrix mask(A.rows(), A.cols());
      if (p < kRateFloor) {
        mask.setOnes();
      } else if (p > 1.0 - kRateFloor) {
        mask.setZero();
      } else {
        const double keep_logit = std::log(1.0 - p) - std::log(p);
        for (int i = 0; i < mask.rows(); ++i) {
          for (int j = 0; j < mask.cols(); ++j) {
            const double u = stream.uniform_open();
            mask(i, j) = sigmoid((std::log(u) - std::log(1.0 - u) + keep_logit) / T);
          }
        }
      }
      H = A.cwiseProduct(mask);
      trace.drop_mask.push_back(std::move(mask));
    } else {
      H = A * (1.0 - p);
    }
    trace.pre_act.push_back(std::move(Z));
    trace.post_act.push_back(std::move(A));
  }
  return trace;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (int i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

namespace {

double decay_norm(const ModelParams& params) {
  double s = 0.0;
  for (const auto& l : params.layers) {
    s += l.W.squaredNorm() + l.b.squaredNorm();
  }
  return s;
}

double masked_nll(const Matrix& logits, const std::vector<int>& labels,
                  const std::vector<std::uint8_t>& mask, int* count_out) {
  if (static_cast<long>(labels.size()) != logits.rows() ||
      static_cast<long>(mask.size()) != logits.rows())
    throw ShapeError("loss: label/mask size mismatch");
  int count = 0;
  double nll = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    if (!mask[i]) continue;
    if (labels[i] < 0 || labels[i] >= logits.cols())
      throw ConfigError("loss: label out of range at node " + std::to_string(i));
    const double mx = logits.row(i).maxCoeff();
    const double lse = mx + std::log((logits.row(i).array() - mx).exp().sum());
    nll += lse - logits(i, labels[i]);
    ++count;
  }
  if (count == 0) throw ConfigError("loss: empty mask");
  if (count_out) *count_out = count;
  return nll / count;
}

}  // namespace

double loss_nll(const Matrix& logits, const std::vector<int>& labels,
                const std::vector<std::uint8_t>& mask, double weight_decay,
                const ModelParams& params) {
  return masked_nll(logits, labels, mask, nullptr) + weight_decay * decay_norm(params);
}

BackwardResult backward(const ForwardTrace& trace, const ModelParams& params,
                        const HyperSpace& space, const LossSpec& loss,
                        const ForwardOptions& opts) {
  const int L = params.num_layers();
  if (static_cast<int>(trace.effective.size()) != L || trace.adj == nullptr)
    throw ShapeError("backward: trace does not match params");
  for (int l = 0; l < L; ++l) {
    if (trace.effective[l].W_hat.rows() != params.layers[l].in_dim() ||
        trace.effective[l].W_hat.cols() != params.layers[l].out_dim())
      throw ShapeError("backward: trace does not match params");
  }
  const auto& labels = *loss.labels;
  const auto& mask = *loss.mask;
  const Vector& z = trace.cond;
  const double T = opts.dropout_temperature;

  BackwardResult res;
  res.grads = ModelGrads::zeros_like(params);
  res.d_cond = Vector::Zero(space.size());
  res.d_lambda = Vector::Zero(space.size());

  int count = 0;
  const double nll = masked_nll(trace.logits, labels, mask, &count);
  res.loss = nll;

  // dL/dlogits of the mean masked cross-entropy.
  Matrix dZ = Matrix::Zero(trace.logits.rows(), trace.logits.cols());
  for (int i = 0; i < trace.logits.rows(); ++i) {
    if (!mask[i]) continue;
    const double mx = trace.logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (trace.logits.row(i).array() - mx).exp();
    dZ.row(i) = (e / (e.sum() * count)).matrix();
    dZ(i, labels[i]) -= 1.0 / count;
  }

  for (int l = L - 1; l >= 0; --l) {
    const auto& layer = params.layers[l];
    auto& grad = res.grads.layers[l];

    const Matrix dW_hat = trace.aggregated[l].transpose() * dZ;
    const Vector db_hat = dZ.colwise().sum().transpose();

    // Response-function chain: W_hat = W + W_lambda diag(e_W z).
    const Vector c_w = layer.e_W * z;
    const Vector c_b = layer.e_b * z;
    grad.W += dW_hat;
    grad.W_lambda += dW_hat * c_w.asDiagonal();
    const Vector dc_w = (dW_hat.array() * layer.W_lambda.array()).colwise().sum().transpose();
    grad.e_W += dc_w * z.transpose();
    res.d_cond += layer.e_W.transpose() * dc_w;
    grad.b += db_hat;
    grad.b_lambda += db_hat.cwiseProduct(c_b);
    const Vector dc_b = db_hat.cwiseProduct(layer.b_lambda);
    grad.e_b += dc_b * z.transpose();
    res.d_cond += layer.e_b.transpose() * dc_b;

    if (l == 0) break;

    Matrix dH = trace.adj->multiply(dZ * trace.effective[l].W_hat.transpose());
    const int h = l - 1;  // hidden index feeding this layer
    const Matrix& A = trace.post_act[h];
    const double p = trace.hp.lambda[space.hidden_rate_dim(h)];
    Matrix dA;
    if (trace.mode == Mode::Train) {
      const Matrix& m = trace.drop_mask[h];
      dA = dH.cwiseProduct(m);
      if (loss.dropout_rate_grad && p >= kRateFloor && p <= 1.0 - kRateFloor) {
        // dm/dp = -m(1-m) / (T p (1-p)) for the relaxed keep-mask.
        const double scale = -1.0 / (T * p * (1.0 - p));
        const double dmask =
            (dH.array() * A.array() * m.array() * (1.0 - m.array())).sum() * scale;
        res.d_lambda[space.hidden_rate_dim(h)] += dmask;
      }
    } else {
      dA = dH * (1.0 - p);
      if (loss.dropout_rate_grad) {
        res.d_lambda[space.hidden_rate_dim(h)] -= (dH.array() * A.array()).sum();
      }
    }
    dZ = dA.cwiseProduct((trace.pre_act[h].array() > 0.0).cast<double>().matrix());
  }

  if (loss.include_decay) {
    for (int l = 0; l < L; ++l) {
      res.grads.layers[l].W += 2.0 * loss.weight_decay * params.layers[l].W;
      res.grads.layers[l].b += 2.0 * loss.weight_decay * params.layers[l].b;
    }
    res.d_lambda[space.weight_decay_dim()] += decay_norm(params);
    res.loss += loss.weight_decay * decay_norm(params);
  }
  return res;
}

}  // namespace stgcn
