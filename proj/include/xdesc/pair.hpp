#pragma once

#include <cstdint>
#include <string>

#include "xdesc/mlp.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

struct TrainConfig {
  std::uint64_t seed = 7;
  int epochs = 5;
  int batch = 0;  // 0 = auto_batch(n)
  float lr = 1e-3f;
};

// Desk-scale default batch size. The paper-scale 1024 applies once the
// dataset is large enough to still give Adam a few hundred steps in 5 epochs.
int auto_batch(std::size_t n_patches);

// One directional translation network src -> dst.
struct PairModel {
  FamilyInfo src, dst;
  Mlp<float> net;
  TrainConfig trained_with;
  float final_train_loss = 0.0f;
};

// Minimizes the translation loss (L2 for real targets, BCE for binary
// targets) over aligned patches of the two families with Adam.
PairModel train_pair(const CorrespondenceDataset& dataset, const std::string& src,
                     const std::string& dst, const TrainConfig& cfg);

// Eval-mode translation. Binary targets are binarized at 0.5; patch ids pass
// through unchanged.
DescriptorMatrix translate(const PairModel& model, const DescriptorMatrix& descs);

}  // namespace xdesc
