#include "xdesc/bank.hpp"

#include <algorithm>
#include <numeric>

#include "xdesc/metrics.hpp"
#include "xdesc/rng.hpp"

namespace xdesc {

AlgorithmSpec embedding_spec(int embed_dim) {
  return {kEmbeddingSpecName, embed_dim, Domain::real, Metric::l2, OutputNorm::unit_l2};
}

int ModelBank::find(std::string_view algo) const {
  for (std::size_t k = 0; k < families.size(); ++k)
    if (families[k].spec.name == algo) return static_cast<int>(k);
  return -1;
}

int ModelBank::index_of(std::string_view algo) const {
  const int k = find(algo);
  if (k < 0) throw SpecError("bank does not contain algorithm '" + std::string(algo) + "'");
  return k;
}

namespace {

std::vector<TensorRef> bank_param_refs(ModelBank& bank) {
  std::vector<TensorRef> refs;
  for (auto& enc : bank.encoders)
    for (const TensorRef& r : param_refs(enc)) refs.push_back(r);
  for (auto& dec : bank.decoders)
    for (const TensorRef& r : param_refs(dec)) refs.push_back(r);
  return refs;
}

MatrixF gather_rows(const MatrixF& src, std::span<const Eigen::Index> rows,
                    std::size_t begin, std::size_t count) {
  MatrixF out(static_cast<Eigen::Index>(count), src.cols());
  for (std::size_t k = 0; k < count; ++k)
    out.row(static_cast<Eigen::Index>(k)) = src.row(rows[begin + k]);
  return out;
}

ModelBank init_bank(const CorrespondenceDataset& dataset, const LossConfig& loss_cfg,
                    const BankTrainConfig& cfg) {
  if (dataset.entries.empty()) throw DatasetError("train_bank: empty dataset");
  if (cfg.embed_dim < 1) throw ConfigError("train_bank: embed_dim must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("train_bank: epochs must be >= 1");
  if (loss_cfg.margin <= 0.0f) throw ConfigError("train_bank: margin must be positive");
  if (loss_cfg.alpha < 0.0f) throw ConfigError("train_bank: alpha must be >= 0");

  ModelBank bank;
  bank.embed_dim = cfg.embed_dim;
  bank.loss_cfg = loss_cfg;
  bank.trained_with = cfg;
  for (std::size_t k = 0; k < dataset.entries.size(); ++k) {
    const FamilyInfo& fam = dataset.entries[k].family;
    bank.families.push_back(fam);
    bank.encoders.push_back(build_mlp<float>(fam.spec.dim, fam.hidden, cfg.embed_dim,
                                             OutputHead::unit_l2,
                                             mix_seed(cfg.seed, 0xe0c0 + 2 * k)));
    bank.decoders.push_back(build_mlp<float>(cfg.embed_dim, fam.hidden, fam.spec.dim,
                                             fam.head,
                                             mix_seed(cfg.seed, 0xe0c0 + 2 * k + 1)));
  }
  return bank;
}

void set_mode(ModelBank& bank, RunMode mode) {
  for (auto& m : bank.encoders) m.mode = mode;
  for (auto& m : bank.decoders) m.mode = mode;
}

}  // namespace

ModelBank train_bank(const CorrespondenceDataset& dataset, const LossConfig& loss_cfg,
                     const BankTrainConfig& cfg, BankTrainLog* log) {
  ModelBank bank = init_bank(dataset, loss_cfg, cfg);
  const std::size_t n_algos = bank.families.size();
  const std::size_t n = dataset.size();
  const int batch = cfg.batch > 0 ? cfg.batch : auto_batch(n);
  if (static_cast<std::size_t>(batch) > n)
    throw ConfigError("train_bank: batch size exceeds dataset size");
  if (batch < 2) throw ConfigError("train_bank: batch size must be >= 2");

  set_mode(bank, RunMode::train);
  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  AdamState adam(adam_cfg, bank_param_refs(bank));

  Rng shuffle_rng(mix_seed(cfg.seed, 0xba5e));
  Rng sigma_rng(mix_seed(cfg.seed, 0x51b3a));

  if (log) {
    log->objective_per_step.clear();
    log->initial_objective = static_cast<float>(bank_objective(bank, dataset, batch, cfg.seed));
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (std::size_t begin = 0; begin + 2 <= n; begin += static_cast<std::size_t>(batch)) {
      const std::size_t count = std::min<std::size_t>(batch, n - begin);
      if (count < 2) break;

      // per-iteration permutation for the linear variant
      std::vector<std::size_t> sigma;
      if (loss_cfg.variant == LossVariant::linear) sigma = sigma_rng.permutation(n_algos);
      const PairWeights weights =
          pair_weights(static_cast<int>(n_algos), loss_cfg, sigma);

      // encode every family once
      std::vector<MatrixF> inputs(n_algos), codes(n_algos);
      std::vector<ForwardCache<float>> enc_caches(n_algos);
      for (std::size_t i = 0; i < n_algos; ++i) {
        inputs[i] = gather_rows(dataset.entries[i].values, order, begin, count);
        codes[i] = forward_train(bank.encoders[i], inputs[i], enc_caches[i]);
      }

      std::vector<MatrixF> code_grads(n_algos);
      for (std::size_t i = 0; i < n_algos; ++i)
        code_grads[i] = MatrixF::Zero(codes[i].rows(), codes[i].cols());
      std::vector<Gradients<float>> dec_grads(n_algos);
      for (std::size_t j = 0; j < n_algos; ++j)
        dec_grads[j] = zero_gradients(bank.decoders[j]);

      MatrixF per_pair_t = MatrixF::Zero(n_algos, n_algos);
      MatrixF per_pair_m = MatrixF::Zero(n_algos, n_algos);

      // translation terms N_{i->j} = D_j(E_i(x_i)) in lexicographic pair order
      for (std::size_t i = 0; i < n_algos; ++i) {
        for (std::size_t j = 0; j < n_algos; ++j) {
          const float w = static_cast<float>(weights.translation(i, j));
          if (w == 0.0f) continue;
          ForwardCache<float> cache;
          MatrixF pred = forward_train(bank.decoders[j], codes[i], cache);
          const bool bce = bank.families[j].spec.domain == Domain::binary;
          const auto loss = bce ? translation_loss_bce(pred, inputs[j])
                                : translation_loss_l2(pred, inputs[j]);
          per_pair_t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = loss.value;
          Gradients<float> g = backward(bank.decoders[j], loss.grad_pred, cache);
          accumulate(dec_grads[j], g, w);
          code_grads[i] += w * g.input;
        }
      }

      // matching terms in the joint space
      for (std::size_t i = 0; i < n_algos; ++i) {
        for (std::size_t j = 0; j < n_algos; ++j) {
          const float w = static_cast<float>(weights.matching(i, j));
          if (w == 0.0f) continue;
          const auto trip = triplet_loss_hardest(codes[i], codes[j], loss_cfg.margin);
          per_pair_m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = trip.value;
          code_grads[i] += w * trip.grad_i;
          code_grads[j] += w * trip.grad_j;
        }
      }

      // one joint Adam step over all encoders and decoders
      std::vector<Gradients<float>> enc_grads(n_algos);
      for (std::size_t i = 0; i < n_algos; ++i)
        enc_grads[i] = backward(bank.encoders[i], code_grads[i], enc_caches[i]);

      std::vector<TensorRef> grads;
      for (auto& g : enc_grads)
        for (const TensorRef& r : grad_refs(g)) grads.push_back(r);
      for (auto& g : dec_grads)
        for (const TensorRef& r : grad_refs(g)) grads.push_back(r);
      adam.step(bank_param_refs(bank), grads);
      for (auto& m : bank.encoders) ++m.version;
      for (auto& m : bank.decoders) ++m.version;

      if (log) {
        const float objective =
            aggregate_losses<float>(per_pair_t, per_pair_m, loss_cfg, sigma);
        log->objective_per_step.push_back(objective);
      }
    }
  }

  set_mode(bank, RunMode::eval);
  bank.final_objective = static_cast<float>(bank_objective(bank, dataset, batch, cfg.seed));
  if (log) log->final_objective = bank.final_objective;
  return bank;
}

double bank_objective(const ModelBank& bank, const CorrespondenceDataset& dataset,
                      int batch, std::uint64_t seed) {
  const std::size_t n_algos = bank.families.size();
  if (n_algos == 0) throw SpecError("bank_objective: empty bank");
  for (const auto& fam : bank.families) dataset.at(fam.spec.name);  // presence check

  const std::size_t n = dataset.size();
  const int b = batch > 0 ? batch : auto_batch(n);

  // eval-mode copies so running statistics stay untouched
  ModelBank eval_bank = bank;
  set_mode(eval_bank, RunMode::eval);

  LossConfig quad = bank.loss_cfg;
  quad.variant = LossVariant::quadratic;

  Rng rng(mix_seed(seed, 0x0b7ec7));
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order);

  double total = 0.0;
  std::size_t steps = 0;
  for (std::size_t begin = 0; begin + 2 <= n; begin += static_cast<std::size_t>(b)) {
    const std::size_t count = std::min<std::size_t>(b, n - begin);
    if (count < 2) break;
    std::vector<MatrixF> inputs(n_algos), codes(n_algos);
    for (std::size_t i = 0; i < n_algos; ++i) {
      const auto& entry = dataset.at(eval_bank.families[i].spec.name);
      inputs[i] = gather_rows(entry.values, order, begin, count);
      codes[i] = forward(eval_bank.encoders[i], inputs[i]);
    }
    MatrixF per_pair_t(n_algos, n_algos), per_pair_m(n_algos, n_algos);
    for (std::size_t i = 0; i < n_algos; ++i) {
      for (std::size_t j = 0; j < n_algos; ++j) {
        MatrixF pred = forward(eval_bank.decoders[j], codes[i]);
        const bool bce = eval_bank.families[j].spec.domain == Domain::binary;
        per_pair_t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            bce ? translation_loss_bce(pred, inputs[j]).value
                : translation_loss_l2(pred, inputs[j]).value;
        per_pair_m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            triplet_loss_hardest(codes[i], codes[j], eval_bank.loss_cfg.margin).value;
      }
    }
    total += aggregate_losses<float>(per_pair_t, per_pair_m, quad);
    ++steps;
  }
  if (steps == 0) throw DatasetError("bank_objective: dataset too small for one batch");
  return total / static_cast<double>(steps);
}

DescriptorMatrix encode(const ModelBank& bank, const std::string& algo,
                        const DescriptorMatrix& descs) {
  const int k = bank.index_of(algo);
  if (descs.spec != bank.families[static_cast<std::size_t>(k)].spec)
    throw SpecError("encode: input spec does not match bank algorithm '" + algo + "'");
  DescriptorMatrix out;
  out.spec = embedding_spec(bank.embed_dim);
  out.patch_ids = descs.patch_ids;
  out.values = forward(bank.encoders[static_cast<std::size_t>(k)], descs.values);
  out.finalized = true;
  out.validate();
  return out;
}

DescriptorMatrix decode(const ModelBank& bank, const std::string& algo,
                        const MatrixF& embeddings, std::span<const std::int64_t> ids) {
  const int k = bank.index_of(algo);
  if (embeddings.cols() != bank.embed_dim)
    throw ShapeError("decode: embedding width " + std::to_string(embeddings.cols()) +
                     " != embed_dim " + std::to_string(bank.embed_dim));
  if (static_cast<std::size_t>(embeddings.rows()) != ids.size())
    throw ShapeError("decode: id count does not match embedding rows");
  DescriptorMatrix out;
  out.spec = bank.families[static_cast<std::size_t>(k)].spec;
  out.patch_ids.assign(ids.begin(), ids.end());
  out.values = forward(bank.decoders[static_cast<std::size_t>(k)], embeddings);
  if (out.spec.domain == Domain::binary) binarize_rows(out.values, 0.5f);
  out.finalized = true;
  out.validate();
  return out;
}

DescriptorMatrix translate_via_bank(const ModelBank& bank, const std::string& src,
                                    const std::string& dst, const DescriptorMatrix& descs) {
  const DescriptorMatrix embedded = encode(bank, src, descs);
  return decode(bank, dst, embedded.values, embedded.patch_ids);
}

}  // namespace xdesc
