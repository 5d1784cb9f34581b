#include "xdesc/mlp.hpp"

#include <cmath>

namespace xdesc {

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::linear: return "linear";
    case LayerKind::relu: return "relu";
    case LayerKind::batchnorm: return "batchnorm";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::unit_l2: return "unit_l2";
  }
  return "linear";
}

LayerKind layer_kind_from_string(std::string_view s) {
  if (s == "linear") return LayerKind::linear;
  if (s == "relu") return LayerKind::relu;
  if (s == "batchnorm") return LayerKind::batchnorm;
  if (s == "sigmoid") return LayerKind::sigmoid;
  if (s == "unit_l2") return LayerKind::unit_l2;
  throw ParseError("unknown layer kind '" + std::string(s) + "'");
}

AdamState::AdamState(const AdamConfig& cfg, const std::vector<TensorRef>& params)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const TensorRef& p : params) {
    m_.push_back(Eigen::ArrayXf::Zero(p.size));
    v_.push_back(Eigen::ArrayXf::Zero(p.size));
  }
}

void AdamState::step(const std::vector<TensorRef>& params,
                     const std::vector<TensorRef>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw ShapeError("adam_step: tensor count does not match optimizer state");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].size != m_[k].size() || grads[k].size != m_[k].size())
      throw ShapeError("adam_step: tensor " + std::to_string(k) + " shape mismatch");
  }
  // reject the whole step before mutating anything
  for (const TensorRef& g : grads) {
    Eigen::Map<const Eigen::ArrayXf> gm(g.data, g.size);
    if (!gm.isFinite().all()) throw NumericsError("adam_step: non-finite gradient");
  }

  ++step_;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(step_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Eigen::Map<Eigen::ArrayXf> p(params[k].data, params[k].size);
    Eigen::Map<const Eigen::ArrayXf> g(grads[k].data, grads[k].size);
    m_[k] = cfg_.beta1 * m_[k] + (1.0f - cfg_.beta1) * g;
    v_[k] = cfg_.beta2 * v_[k] + (1.0f - cfg_.beta2) * g.square();
    p -= cfg_.lr * (m_[k] / bc1) / ((v_[k] / bc2).sqrt() + cfg_.eps);
  }
}

std::vector<TensorRef> param_refs(Mlp<float>& model) {
  std::vector<TensorRef> refs;
  for (Layer<float>& layer : model.layers) {
    if (layer.spec.kind == LayerKind::linear) {
      refs.push_back({layer.weight.data(), layer.weight.size()});
      refs.push_back({layer.bias.data(), layer.bias.size()});
    } else if (layer.spec.kind == LayerKind::batchnorm) {
      refs.push_back({layer.gamma.data(), layer.gamma.size()});
      refs.push_back({layer.beta.data(), layer.beta.size()});
    }
  }
  return refs;
}

std::vector<TensorRef> grad_refs(Gradients<float>& grads) {
  std::vector<TensorRef> refs;
  for (LayerGrads<float>& lg : grads.layers) {
    if (lg.weight.size()) {
      refs.push_back({lg.weight.data(), lg.weight.size()});
      refs.push_back({lg.bias.data(), lg.bias.size()});
    } else if (lg.gamma.size()) {
      refs.push_back({lg.gamma.data(), lg.gamma.size()});
      refs.push_back({lg.beta.data(), lg.beta.size()});
    }
  }
  return refs;
}

}  // namespace xdesc
