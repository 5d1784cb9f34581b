#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "xdesc/errors.hpp"
#include "xdesc/rng.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

enum class LayerKind { linear, relu, batchnorm, sigmoid, unit_l2 };

std::string to_string(LayerKind k);
LayerKind layer_kind_from_string(std::string_view s);

struct LayerSpec {
  LayerKind kind = LayerKind::linear;
  int in_dim = 0;
  int out_dim = 0;

  bool operator==(const LayerSpec&) const = default;
};

enum class RunMode { train, eval };

template <class T>
struct Layer {
  LayerSpec spec;
  // linear
  MatrixX<T> weight;  // out_dim x in_dim
  VectorX<T> bias;    // out_dim
  // batchnorm
  VectorX<T> gamma, beta;
  VectorX<T> running_mean, running_var;
};

// A fixed-vocabulary feed-forward network. Eval-mode forward is a pure
// function of (params, running stats, input); training mutates batch-norm
// running statistics and, through the optimizer, the parameters.
template <class T>
struct Mlp {
  std::vector<Layer<T>> layers;
  RunMode mode = RunMode::train;
  T bn_momentum = T(0.1);
  T bn_eps = T(1e-5);
  bool bn_batch_stats_at_eval = false;
  // bumped on every parameter mutation; caches check it before backward
  std::uint64_t version = 0;

  int in_dim() const { return layers.empty() ? 0 : layers.front().spec.in_dim; }
  int out_dim() const { return layers.empty() ? 0 : layers.back().spec.out_dim; }
};

using MlpF = Mlp<float>;

template <class T>
struct LayerCache {
  MatrixX<T> input;     // linear, relu, unit_l2
  MatrixX<T> output;    // sigmoid
  MatrixX<T> xhat;      // batchnorm
  VectorX<T> inv_std;   // batchnorm
  VectorX<T> norms;     // unit_l2
};

template <class T>
struct ForwardCache {
  const Mlp<T>* model = nullptr;
  std::uint64_t version = 0;
  Eigen::Index batch = 0;
  std::vector<LayerCache<T>> layers;
};

template <class T>
struct LayerGrads {
  MatrixX<T> weight;
  VectorX<T> bias, gamma, beta;
};

template <class T>
struct Gradients {
  std::vector<LayerGrads<T>> layers;
  MatrixX<T> input;  // dL/dinput, for chaining networks
};

// ---------------------------------------------------------------------------

template <class T>
Mlp<T> build_mlp(int in_dim, const std::vector<int>& hidden_dims, int out_dim,
                 OutputHead head, std::uint64_t seed) {
  if (in_dim < 1 || out_dim < 1)
    throw ConfigError("build_mlp: in/out dims must be >= 1");
  for (int h : hidden_dims)
    if (h < 1) throw ConfigError("build_mlp: hidden dims must be >= 1");

  Mlp<T> model;
  Rng rng(mix_seed(seed, 0x6d6c70));
  auto add_linear = [&](int in, int out) {
    Layer<T> layer;
    layer.spec = {LayerKind::linear, in, out};
    layer.weight.resize(out, in);
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
        layer.weight(r, c) = static_cast<T>(rng.uniform(-bound, bound));
    layer.bias = VectorX<T>::Zero(out);
    model.layers.push_back(std::move(layer));
  };
  auto add_plain = [&](LayerKind kind, int dim) {
    Layer<T> layer;
    layer.spec = {kind, dim, dim};
    if (kind == LayerKind::batchnorm) {
      layer.gamma = VectorX<T>::Ones(dim);
      layer.beta = VectorX<T>::Zero(dim);
      layer.running_mean = VectorX<T>::Zero(dim);
      layer.running_var = VectorX<T>::Ones(dim);
    }
    model.layers.push_back(std::move(layer));
  };

  int prev = in_dim;
  for (int h : hidden_dims) {
    add_linear(prev, h);
    add_plain(LayerKind::relu, h);
    add_plain(LayerKind::batchnorm, h);
    prev = h;
  }
  add_linear(prev, out_dim);
  switch (head) {
    case OutputHead::none:
      break;
    case OutputHead::sigmoid:
      add_plain(LayerKind::sigmoid, out_dim);
      break;
    case OutputHead::unit_l2:
      add_plain(LayerKind::unit_l2, out_dim);
      break;
    case OutputHead::relu_unit_l2:
      add_plain(LayerKind::relu, out_dim);
      add_plain(LayerKind::unit_l2, out_dim);
      break;
  }
  return model;
}

namespace detail {

template <class T>
MatrixX<T> layer_forward(const Mlp<T>& model, const Layer<T>& layer,
                         const MatrixX<T>& x, bool train, Layer<T>* mutable_layer,
                         LayerCache<T>* cache) {
  switch (layer.spec.kind) {
    case LayerKind::linear: {
      if (cache) cache->input = x;
      MatrixX<T> y = x * layer.weight.transpose();
      y.rowwise() += layer.bias.transpose();
      return y;
    }
    case LayerKind::relu: {
      if (cache) cache->input = x;
      return x.cwiseMax(T(0));
    }
    case LayerKind::sigmoid: {
      MatrixX<T> y = (T(1) / (T(1) + (-x.array()).exp())).matrix();
      if (cache) cache->output = y;
      return y;
    }
    case LayerKind::unit_l2: {
      if (cache) cache->input = x;
      MatrixX<T> y(x.rows(), x.cols());
      VectorX<T> norms(x.rows());
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        const T n = x.row(r).norm();
        if (n <= T(0))
          throw NormalizationError("unit_l2 layer: zero-norm row " + std::to_string(r));
        norms[r] = n;
        y.row(r) = x.row(r) / n;
      }
      if (cache) cache->norms = norms;
      return y;
    }
    case LayerKind::batchnorm: {
      const Eigen::Index batch = x.rows();
      if (train) {
        VectorX<T> mean = x.colwise().mean();
        MatrixX<T> centered = x.rowwise() - mean.transpose();
        VectorX<T> var =
            centered.array().square().colwise().mean().matrix();
        VectorX<T> inv_std = (var.array() + model.bn_eps).rsqrt().matrix();
        MatrixX<T> xhat = centered.array().rowwise() * inv_std.transpose().array();
        if (cache) {
          cache->xhat = xhat;
          cache->inv_std = inv_std;
        }
        if (mutable_layer) {
          // running stats keep the unbiased variance, as the reference stacks do
          const T unbias = batch > 1 ? static_cast<T>(batch) / static_cast<T>(batch - 1) : T(1);
          mutable_layer->running_mean =
              (T(1) - model.bn_momentum) * layer.running_mean + model.bn_momentum * mean;
          mutable_layer->running_var =
              (T(1) - model.bn_momentum) * layer.running_var +
              model.bn_momentum * unbias * var;
        }
        MatrixX<T> y = xhat.array().rowwise() * layer.gamma.transpose().array();
        y.array().rowwise() += layer.beta.transpose().array();
        return y;
      }
      VectorX<T> inv_std = (layer.running_var.array() + model.bn_eps).rsqrt().matrix();
      MatrixX<T> xhat =
          (x.rowwise() - layer.running_mean.transpose()).array().rowwise() *
          inv_std.transpose().array();
      MatrixX<T> y = xhat.array().rowwise() * layer.gamma.transpose().array();
      y.array().rowwise() += layer.beta.transpose().array();
      return y;
    }
  }
  throw ConfigError("layer_forward: unknown layer kind");
}

}  // namespace detail

// Eval-mode forward. Pure; the model must be in eval mode.
template <class T>
MatrixX<T> forward(const Mlp<T>& model, const MatrixX<T>& batch) {
  if (model.mode != RunMode::eval)
    throw ConfigError("forward: model not in eval mode (use forward_train)");
  if (model.layers.empty()) throw ConfigError("forward: empty model");
  if (batch.cols() != model.in_dim())
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " != model in_dim " + std::to_string(model.in_dim()));
  if (!batch.allFinite()) throw NumericsError("forward: non-finite input");
  MatrixX<T> x = batch;
  const bool batch_stats = model.bn_batch_stats_at_eval;
  for (const auto& layer : model.layers) {
    x = detail::layer_forward(model, layer, x,
                              batch_stats && layer.spec.kind == LayerKind::batchnorm,
                              nullptr, nullptr);
  }
  return x;
}

// Train-mode forward; fills the cache consumed by backward and updates
// batch-norm running statistics.
template <class T>
MatrixX<T> forward_train(Mlp<T>& model, const MatrixX<T>& batch, ForwardCache<T>& cache) {
  if (model.mode != RunMode::train)
    throw ConfigError("forward_train: model not in train mode");
  if (model.layers.empty()) throw ConfigError("forward_train: empty model");
  if (batch.cols() != model.in_dim())
    throw ShapeError("forward_train: batch width " + std::to_string(batch.cols()) +
                     " != model in_dim " + std::to_string(model.in_dim()));
  if (batch.rows() < 2)
    throw BatchTooSmall("forward_train: batch size must be >= 2 for batch statistics");
  if (!batch.allFinite()) throw NumericsError("forward_train: non-finite input");

  cache.model = &model;
  cache.version = model.version;
  cache.batch = batch.rows();
  cache.layers.assign(model.layers.size(), {});

  MatrixX<T> x = batch;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    x = detail::layer_forward(model, model.layers[k], x, true, &model.layers[k],
                              &cache.layers[k]);
  }
  return x;
}

// Exact reverse-mode gradients for every parameter plus the input.
template <class T>
Gradients<T> backward(const Mlp<T>& model, const MatrixX<T>& upstream,
                      const ForwardCache<T>& cache) {
  if (cache.model != &model || cache.version != model.version)
    throw StaleCache("backward: cache does not match the model's current parameters");
  if (upstream.cols() != model.out_dim() || upstream.rows() != cache.batch)
    throw ShapeError("backward: upstream gradient shape mismatch");

  Gradients<T> grads;
  grads.layers.resize(model.layers.size());
  MatrixX<T> g = upstream;
  for (std::size_t idx = model.layers.size(); idx-- > 0;) {
    const Layer<T>& layer = model.layers[idx];
    const LayerCache<T>& lc = cache.layers[idx];
    LayerGrads<T>& lg = grads.layers[idx];
    switch (layer.spec.kind) {
      case LayerKind::linear: {
        lg.weight.noalias() = g.transpose() * lc.input;
        lg.bias = g.colwise().sum().transpose();
        g = g * layer.weight;
        break;
      }
      case LayerKind::relu: {
        g = (lc.input.array() > T(0)).template cast<T>() * g.array();
        break;
      }
      case LayerKind::sigmoid: {
        g = (lc.output.array() * (T(1) - lc.output.array()) * g.array()).matrix();
        break;
      }
      case LayerKind::unit_l2: {
        MatrixX<T> gx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
          const T n = lc.norms[r];
          auto v_hat = lc.input.row(r) / n;
          const T dot = g.row(r).dot(v_hat);
          gx.row(r) = (g.row(r) - dot * v_hat) / n;
        }
        g = std::move(gx);
        break;
      }
      case LayerKind::batchnorm: {
        lg.gamma = (g.array() * lc.xhat.array()).colwise().sum().matrix().transpose();
        lg.beta = g.colwise().sum().transpose();
        // dx = gamma * inv_std * (g - mean_b(g) - xhat * mean_b(g * xhat))
        VectorX<T> mean_g = g.colwise().mean().transpose();
        VectorX<T> mean_gx =
            (g.array() * lc.xhat.array()).colwise().mean().matrix().transpose();
        MatrixX<T> centered_g = g.rowwise() - mean_g.transpose();
        centered_g -= (lc.xhat.array().rowwise() * mean_gx.transpose().array()).matrix();
        g = centered_g.array().rowwise() *
            (layer.gamma.array() * lc.inv_std.array()).transpose();
        break;
      }
    }
  }
  grads.input = std::move(g);
  return grads;
}

template <class T>
Gradients<T> zero_gradients(const Mlp<T>& model) {
  Gradients<T> grads;
  grads.layers.resize(model.layers.size());
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const Layer<T>& layer = model.layers[k];
    LayerGrads<T>& lg = grads.layers[k];
    if (layer.spec.kind == LayerKind::linear) {
      lg.weight = MatrixX<T>::Zero(layer.weight.rows(), layer.weight.cols());
      lg.bias = VectorX<T>::Zero(layer.bias.size());
    } else if (layer.spec.kind == LayerKind::batchnorm) {
      lg.gamma = VectorX<T>::Zero(layer.gamma.size());
      lg.beta = VectorX<T>::Zero(layer.beta.size());
    }
  }
  return grads;
}

template <class T>
void accumulate(Gradients<T>& into, const Gradients<T>& from, T scale = T(1)) {
  if (into.layers.size() != from.layers.size())
    throw ShapeError("accumulate: gradient layer count mismatch");
  for (std::size_t k = 0; k < into.layers.size(); ++k) {
    LayerGrads<T>& a = into.layers[k];
    const LayerGrads<T>& b = from.layers[k];
    if (b.weight.size()) a.weight += scale * b.weight;
    if (b.bias.size()) a.bias += scale * b.bias;
    if (b.gamma.size()) a.gamma += scale * b.gamma;
    if (b.beta.size()) a.beta += scale * b.beta;
  }
}

// ---------------------------------------------------------------------------
// Adam

struct TensorRef {
  float* data = nullptr;
  std::ptrdiff_t size = 0;
};

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Standard Adam with bias correction over an ordered list of parameter
// tensors. Rejects the whole step if any gradient is non-finite.
class AdamState {
 public:
  AdamState(const AdamConfig& cfg, const std::vector<TensorRef>& params);

  void step(const std::vector<TensorRef>& params, const std::vector<TensorRef>& grads);

  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Eigen::ArrayXf> m_, v_;
};

// Parameter/gradient tensors of a model in declaration order (the order the
// XMLP format and AdamState rely on).
std::vector<TensorRef> param_refs(Mlp<float>& model);
std::vector<TensorRef> grad_refs(Gradients<float>& grads);

}  // namespace xdesc
