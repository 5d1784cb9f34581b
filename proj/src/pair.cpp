#include "xdesc/pair.hpp"

#include <algorithm>
#include <numeric>

#include "xdesc/losses.hpp"
#include "xdesc/metrics.hpp"
#include "xdesc/rng.hpp"

namespace xdesc {

int auto_batch(std::size_t n_patches) {
  const std::size_t b = std::clamp<std::size_t>(n_patches / 64, 16, 1024);
  return static_cast<int>(std::min(b, n_patches));
}

namespace {

// Deterministic epoch shuffling shared by the trainers.
std::vector<Eigen::Index> shuffled_rows(std::size_t n, Rng& rng) {
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order);
  return order;
}

MatrixF gather_rows(const MatrixF& src, std::span<const Eigen::Index> rows,
                    std::size_t begin, std::size_t count) {
  MatrixF out(static_cast<Eigen::Index>(count), src.cols());
  for (std::size_t k = 0; k < count; ++k)
    out.row(static_cast<Eigen::Index>(k)) = src.row(rows[begin + k]);
  return out;
}

}  // namespace

PairModel train_pair(const CorrespondenceDataset& dataset, const std::string& src,
                     const std::string& dst, const TrainConfig& cfg) {
  const auto& src_entry = dataset.at(src);
  const auto& dst_entry = dataset.at(dst);
  if (cfg.epochs < 1) throw ConfigError("train_pair: epochs must be >= 1");
  if (cfg.lr <= 0.0f) throw ConfigError("train_pair: lr must be positive");

  const std::size_t n = dataset.size();
  const int batch = cfg.batch > 0 ? cfg.batch : auto_batch(n);
  if (static_cast<std::size_t>(batch) > n)
    throw ConfigError("train_pair: batch size " + std::to_string(batch) +
                      " exceeds dataset size " + std::to_string(n));
  if (n < 2 * static_cast<std::size_t>(batch))
    throw DatasetError("train_pair: need at least 2*batch aligned patches");

  PairModel model;
  model.src = src_entry.family;
  model.dst = dst_entry.family;
  model.trained_with = cfg;
  model.trained_with.batch = batch;
  model.net = build_mlp<float>(model.src.spec.dim, model.src.hidden, model.dst.spec.dim,
                               model.dst.head, mix_seed(cfg.seed, 0x7a13));
  model.net.mode = RunMode::train;

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  AdamState adam(adam_cfg, param_refs(model.net));
  const bool bce = model.dst.spec.domain == Domain::binary;

  Rng shuffle_rng(mix_seed(cfg.seed, 0x5f0f));
  float last_loss = 0.0f;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_rows(n, shuffle_rng);
    for (std::size_t begin = 0; begin + 2 <= n; begin += static_cast<std::size_t>(batch)) {
      const std::size_t count = std::min<std::size_t>(batch, n - begin);
      if (count < 2) break;
      MatrixF x = gather_rows(src_entry.values, order, begin, count);
      MatrixF y = gather_rows(dst_entry.values, order, begin, count);

      ForwardCache<float> cache;
      MatrixF pred = forward_train(model.net, x, cache);
      const auto loss = bce ? translation_loss_bce(pred, y) : translation_loss_l2(pred, y);
      Gradients<float> grads = backward(model.net, loss.grad_pred, cache);
      adam.step(param_refs(model.net), grad_refs(grads));
      ++model.net.version;
      last_loss = loss.value;
    }
  }

  model.net.mode = RunMode::eval;
  model.final_train_loss = last_loss;
  return model;
}

DescriptorMatrix translate(const PairModel& model, const DescriptorMatrix& descs) {
  if (descs.spec != model.src.spec)
    throw SpecError("translate: input spec '" + descs.spec.name +
                    "' does not match model source '" + model.src.spec.name + "'");

  DescriptorMatrix out;
  out.spec = model.dst.spec;
  out.patch_ids = descs.patch_ids;
  out.values = forward(model.net, descs.values);
  if (model.dst.spec.domain == Domain::binary) binarize_rows(out.values, 0.5f);
  out.finalized = true;
  out.validate();
  return out;
}

}  // namespace xdesc
