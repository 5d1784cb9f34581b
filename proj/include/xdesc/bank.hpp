#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xdesc/losses.hpp"
#include "xdesc/mlp.hpp"
#include "xdesc/pair.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

inline constexpr const char* kEmbeddingSpecName = "embedding";

AlgorithmSpec embedding_spec(int embed_dim);

// One encoder and one decoder per algorithm around a shared unit-norm joint
// space: 2|A| networks realize all |A|^2 translations as D_j after E_i.
struct ModelBank {
  std::vector<FamilyInfo> families;
  std::vector<Mlp<float>> encoders;  // dim_i -> embed_dim, unit_l2 head
  std::vector<Mlp<float>> decoders;  // embed_dim -> dim_i, family head
  int embed_dim = 128;
  LossConfig loss_cfg;
  TrainConfig trained_with;
  float final_objective = 0.0f;

  int find(std::string_view algo) const;          // -1 when absent
  int index_of(std::string_view algo) const;      // SpecError when absent
};

struct BankTrainConfig : TrainConfig {
  int embed_dim = 128;
};

struct BankTrainLog {
  float initial_objective = 0.0f;
  float final_objective = 0.0f;
  std::vector<float> objective_per_step;
};

// Joint training of all encoders/decoders: every step samples one patch
// batch, evaluates the per-pair translation and matching terms demanded by
// the loss variant, and applies a single Adam update to the concatenated
// parameter set.
ModelBank train_bank(const CorrespondenceDataset& dataset, const LossConfig& loss_cfg,
                     const BankTrainConfig& cfg, BankTrainLog* log = nullptr);

// Quadratic-variant objective of a bank on a dataset, evaluated with
// eval-mode forwards over deterministic batches. Serves as the common
// yardstick for untrained-baseline and cross-variant comparisons.
double bank_objective(const ModelBank& bank, const CorrespondenceDataset& dataset,
                      int batch = 0, std::uint64_t seed = 7);

DescriptorMatrix encode(const ModelBank& bank, const std::string& algo,
                        const DescriptorMatrix& descs);
DescriptorMatrix decode(const ModelBank& bank, const std::string& algo,
                        const MatrixF& embeddings, std::span<const std::int64_t> ids);
DescriptorMatrix translate_via_bank(const ModelBank& bank, const std::string& src,
                                    const std::string& dst, const DescriptorMatrix& descs);

}  // namespace xdesc
