#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xdesc/scenarios_types.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

// One synthetic descriptor family: a frozen random two-layer tanh map from a
// shared latent space, followed by the family head. Families with different
// seeds produce mutually incompatible descriptor spaces over the same latents,
// which is exactly the situation the translators have to solve.
struct SyntheticFamilyConfig {
  FamilyInfo info;
  int map_hidden = 128;
  float noise_sigma = 0.1f;
  std::uint64_t map_seed = 0;
};

struct SyntheticFamily {
  SyntheticFamilyConfig cfg;
  int latent_dim = 0;
  MatrixF w1;  // map_hidden x latent_dim
  VectorF b1;
  MatrixF w2;  // dim x map_hidden
  VectorF b2;
};

SyntheticFamily make_family(const SyntheticFamilyConfig& cfg, int latent_dim);

// Four families standing in for a binary descriptor, a non-negative
// handcrafted one, and two learned unit-norm ones.
std::vector<SyntheticFamilyConfig> default_family_configs();

// n unit-norm rows of i.i.d. standard normals.
MatrixF gen_latents(int n, int latent_dim, std::uint64_t seed);

// Descriptors for the given latents: frozen map, Gaussian pre-head noise of
// noise_sigma, then the family head. patch id of row k is ids[k].
DescriptorMatrix describe(const SyntheticFamily& family, const MatrixF& latents,
                          std::span<const std::int64_t> ids, std::uint64_t noise_seed);
DescriptorMatrix describe(const SyntheticFamily& family, const MatrixF& latents,
                          std::uint64_t noise_seed);  // ids 0..n-1

// Aligned per-family matrices over shared patch ids 0..n-1.
CorrespondenceDataset gen_dataset(const MatrixF& latents,
                                  std::span<const SyntheticFamily> families,
                                  std::uint64_t noise_seed);

// Multi-view split: each view carries one family (round-robin) and an
// independent noise draw over the latents; patch ids are latent ids, shared
// across views, and serve as the ground-truth correspondence.
ImageSet gen_multiview(const MatrixF& latents, int n_views,
                       std::span<const SyntheticFamily> families, float visibility,
                       std::uint64_t seed);

}  // namespace xdesc
