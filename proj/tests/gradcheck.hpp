#pragma once

// Central finite-difference oracle for gradient checks, double precision.
// Lives in test code only; never used by the library itself.

#include <cmath>
#include <functional>

#include "xdesc/mlp.hpp"

namespace xdesc::test {

using MatD = MatrixX<double>;

inline double rel_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  if (denom < 1e-6) return std::abs(analytic - numeric) < 1e-8 ? 0.0 : 1.0;
  return std::abs(analytic - numeric) / denom;
}

// Loss on top of the model output: value plus dL/doutput.
using LossOnOutput = std::function<LossValueGrad<double>(const MatD&)>;

// Evaluates loss(model(batch)) with a fresh train-mode forward on a copy, so
// finite differences never see accumulated running-statistics drift.
inline double eval_model_loss(const Mlp<double>& model, const MatD& batch,
                              const LossOnOutput& loss) {
  Mlp<double> copy = model;
  ForwardCache<double> cache;
  const MatD pred = forward_train(copy, batch, cache);
  return loss(pred).value;
}

// Max relative error between analytic parameter/input gradients and central
// differences over every parameter of the model and every input coordinate.
inline double gradcheck_model(const Mlp<double>& model, const MatD& batch,
                              const LossOnOutput& loss, double eps = 1e-4) {
  Mlp<double> work = model;
  ForwardCache<double> cache;
  const MatD pred = forward_train(work, batch, cache);
  const auto lv = loss(pred);
  const Gradients<double> grads = backward(work, lv.grad_pred, cache);

  double worst = 0.0;
  auto probe = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + eps;
    const double up = eval_model_loss(work, batch, loss);
    *slot = saved - eps;
    const double down = eval_model_loss(work, batch, loss);
    *slot = saved;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, rel_error(analytic, numeric));
  };

  for (std::size_t k = 0; k < work.layers.size(); ++k) {
    Layer<double>& layer = work.layers[k];
    const LayerGrads<double>& lg = grads.layers[k];
    if (layer.spec.kind == LayerKind::linear) {
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
        probe(layer.weight.data() + i, lg.weight.data()[i]);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
        probe(layer.bias.data() + i, lg.bias.data()[i]);
    } else if (layer.spec.kind == LayerKind::batchnorm) {
      for (Eigen::Index i = 0; i < layer.gamma.size(); ++i)
        probe(layer.gamma.data() + i, lg.gamma.data()[i]);
      for (Eigen::Index i = 0; i < layer.beta.size(); ++i)
        probe(layer.beta.data() + i, lg.beta.data()[i]);
    }
  }

  MatD input = batch;
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    const double saved = input.data()[i];
    input.data()[i] = saved + eps;
    const double up = eval_model_loss(work, input, loss);
    input.data()[i] = saved - eps;
    const double down = eval_model_loss(work, input, loss);
    input.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, rel_error(grads.input.data()[i], numeric));
  }
  return worst;
}

// True when some ReLU pre-activation sits within `margin` of its kink, which
// would poison the finite differences.
inline bool near_relu_kink(const Mlp<double>& model, const MatD& batch,
                           double margin = 1e-3) {
  Mlp<double> copy = model;
  ForwardCache<double> cache;
  forward_train(copy, batch, cache);
  for (std::size_t k = 0; k < copy.layers.size(); ++k) {
    if (copy.layers[k].spec.kind != LayerKind::relu) continue;
    const auto& in = cache.layers[k].input;
    if ((in.array().abs() < margin).any()) return true;
  }
  return false;
}

// Generic central-difference check for a scalar function of a matrix input.
inline double gradcheck_fn(const std::function<double(const MatD&)>& fn, const MatD& at,
                           const MatD& analytic, double eps = 1e-4) {
  double worst = 0.0;
  MatD x = at;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + eps;
    const double up = fn(x);
    x.data()[i] = saved - eps;
    const double down = fn(x);
    x.data()[i] = saved;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, rel_error(analytic.data()[i], numeric));
  }
  return worst;
}

}  // namespace xdesc::test
