#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "xdesc/errors.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

enum class LossVariant { quadratic, linear, auto_encoder };

std::string to_string(LossVariant v);
LossVariant variant_from_string(std::string_view s);

struct LossConfig {
  float alpha = 0.1f;
  float margin = 1.0f;
  LossVariant variant = LossVariant::quadratic;
  // Eq-style matching sum runs over all ordered pairs including i=i; the flag
  // exists for ablations only.
  bool diagonal_matching = true;
};

template <class T>
struct LossValueGrad {
  T value = T(0);
  MatrixX<T> grad_pred;
};

// Mean over the batch of unsquared Euclidean residual norms. A row with zero
// residual contributes a zero subgradient.
template <class T>
LossValueGrad<T> translation_loss_l2(const MatrixX<T>& pred, const MatrixX<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("translation_loss_l2: shape mismatch");
  if (pred.rows() < 1) throw ShapeError("translation_loss_l2: empty batch");
  const T inv_batch = T(1) / static_cast<T>(pred.rows());
  LossValueGrad<T> out;
  out.grad_pred = MatrixX<T>::Zero(pred.rows(), pred.cols());
  T sum = T(0);
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    auto residual = pred.row(r) - target.row(r);
    const T n = residual.norm();
    sum += n;
    if (n > T(0)) out.grad_pred.row(r) = residual * (inv_batch / n);
  }
  out.value = sum * inv_batch;
  return out;
}

inline constexpr double kBceClamp = 1e-7;

// Binary cross entropy, mean over batch and coordinates. Predictions are
// clamped into [1e-7, 1-1e-7]; targets must be exactly 0 or 1.
template <class T>
LossValueGrad<T> translation_loss_bce(const MatrixX<T>& pred, const MatrixX<T>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("translation_loss_bce: shape mismatch");
  if (pred.rows() < 1) throw ShapeError("translation_loss_bce: empty batch");
  const T lo = static_cast<T>(kBceClamp);
  const T hi = T(1) - lo;
  const T scale = T(1) / (static_cast<T>(pred.rows()) * static_cast<T>(pred.cols()));
  LossValueGrad<T> out;
  out.grad_pred = MatrixX<T>::Zero(pred.rows(), pred.cols());
  T sum = T(0);
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const T y = target(r, c);
      if (y != T(0) && y != T(1))
        throw DomainError("translation_loss_bce: target values must be 0 or 1");
      const T x = std::clamp(pred(r, c), lo, hi);
      sum += -(y * std::log(x) + (T(1) - y) * std::log(T(1) - x));
      if (pred(r, c) > lo && pred(r, c) < hi)
        out.grad_pred(r, c) = scale * (x - y) / (x * (T(1) - x));
    }
  }
  out.value = sum * scale;
  return out;
}

template <class T>
struct TripletResult {
  T value = T(0);
  MatrixX<T> grad_i, grad_j;
  std::vector<Eigen::Index> hardest;  // per-anchor hardest-negative index
};

// Triplet margin loss with in-batch hardest negative mining. Row p of emb_i
// and emb_j describe the same patch; the negative for anchor p is the closest
// emb_j row other than p (ties break to the lowest index). Gradients flow only
// through the positive and the selected negative of non-clamped terms.
template <class T>
TripletResult<T> triplet_loss_hardest(const MatrixX<T>& emb_i, const MatrixX<T>& emb_j,
                                      T margin) {
  if (emb_i.rows() != emb_j.rows() || emb_i.cols() != emb_j.cols())
    throw ShapeError("triplet_loss_hardest: shape mismatch");
  const Eigen::Index batch = emb_i.rows();
  if (batch < 2)
    throw BatchTooSmall("triplet_loss_hardest: batch must be >= 2 for negative mining");

  // D(p,q) = ||emb_i[p] - emb_j[q]||
  VectorX<T> sq_i = emb_i.rowwise().squaredNorm();
  VectorX<T> sq_j = emb_j.rowwise().squaredNorm();
  MatrixX<T> d2 = (-T(2)) * (emb_i * emb_j.transpose());
  d2.colwise() += sq_i;
  d2.rowwise() += sq_j.transpose();
  MatrixX<T> dist = d2.cwiseMax(T(0)).cwiseSqrt();

  TripletResult<T> out;
  out.grad_i = MatrixX<T>::Zero(batch, emb_i.cols());
  out.grad_j = MatrixX<T>::Zero(batch, emb_j.cols());
  out.hardest.resize(batch);

  const T inv_batch = T(1) / static_cast<T>(batch);
  T sum = T(0);
  for (Eigen::Index p = 0; p < batch; ++p) {
    Eigen::Index neg_idx = -1;
    T neg = std::numeric_limits<T>::max();
    for (Eigen::Index q = 0; q < batch; ++q) {
      if (q == p) continue;
      if (dist(p, q) < neg) {
        neg = dist(p, q);
        neg_idx = q;
      }
    }
    out.hardest[p] = neg_idx;
    const T pos = dist(p, p);
    const T term = margin + pos - neg;
    if (term <= T(0)) continue;
    sum += term;
    // use exact residuals for the gradient direction
    auto pos_res = emb_i.row(p) - emb_j.row(p);
    const T pos_norm = pos_res.norm();
    if (pos_norm > T(0)) {
      out.grad_i.row(p) += inv_batch * (pos_res / pos_norm);
      out.grad_j.row(p) -= inv_batch * (pos_res / pos_norm);
    }
    auto neg_res = emb_i.row(p) - emb_j.row(neg_idx);
    const T neg_norm = neg_res.norm();
    if (neg_norm > T(0)) {
      out.grad_i.row(p) -= inv_batch * (neg_res / neg_norm);
      out.grad_j.row(neg_idx) += inv_batch * (neg_res / neg_norm);
    }
  }
  out.value = sum * inv_batch;
  return out;
}

// Per-pair coefficients of the final objective
//   L = sum_ij wT(i,j) * LT(i,j)  +  sum_ij wM(i,j) * LM(i,j)
// so that value aggregation and gradient weighting share one definition.
struct PairWeights {
  MatrixX<double> translation;
  MatrixX<double> matching;
};

PairWeights pair_weights(int n_algos, const LossConfig& cfg,
                         std::span<const std::size_t> sigma = {});

template <class T>
T aggregate_losses(const MatrixX<T>& per_pair_translation,
                   const MatrixX<T>& per_pair_matching, const LossConfig& cfg,
                   std::span<const std::size_t> sigma = {}) {
  if (per_pair_translation.rows() != per_pair_translation.cols() ||
      per_pair_matching.rows() != per_pair_matching.cols() ||
      per_pair_translation.rows() != per_pair_matching.rows())
    throw ShapeError("aggregate_losses: per-pair matrices must be square and equal size");
  const PairWeights w = pair_weights(static_cast<int>(per_pair_translation.rows()), cfg, sigma);
  T total = T(0);
  for (Eigen::Index i = 0; i < per_pair_translation.rows(); ++i)
    for (Eigen::Index j = 0; j < per_pair_translation.cols(); ++j)
      total += static_cast<T>(w.translation(i, j)) * per_pair_translation(i, j) +
               static_cast<T>(w.matching(i, j)) * per_pair_matching(i, j);
  return total;
}

}  // namespace xdesc
