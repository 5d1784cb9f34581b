#include "xdesc/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xdesc/metrics.hpp"
#include "xdesc/rng.hpp"

namespace xdesc {

const ImageDesc* ImageSet::find(std::int64_t image_id) const {
  for (const auto& img : images)
    if (img.image_id == image_id) return &img;
  return nullptr;
}

SyntheticFamily make_family(const SyntheticFamilyConfig& cfg, int latent_dim) {
  cfg.info.spec.validate();
  if (latent_dim < 1) throw ConfigError("make_family: latent_dim must be >= 1");
  if (cfg.map_hidden < 1) throw ConfigError("make_family: map_hidden must be >= 1");
  if (cfg.noise_sigma < 0.0f) throw ConfigError("make_family: noise_sigma must be >= 0");

  SyntheticFamily fam;
  fam.cfg = cfg;
  fam.latent_dim = latent_dim;
  Rng rng(mix_seed(cfg.map_seed, 0xfa3157));
  const float s1 = 1.0f / std::sqrt(static_cast<float>(latent_dim));
  const float s2 = 1.0f / std::sqrt(static_cast<float>(cfg.map_hidden));
  fam.w1.resize(cfg.map_hidden, latent_dim);
  for (Eigen::Index r = 0; r < fam.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < fam.w1.cols(); ++c)
      fam.w1(r, c) = static_cast<float>(rng.normal()) * s1 * 3.0f;
  fam.b1.resize(cfg.map_hidden);
  for (Eigen::Index r = 0; r < fam.b1.size(); ++r)
    fam.b1[r] = static_cast<float>(rng.normal()) * 0.2f;
  fam.w2.resize(cfg.info.spec.dim, cfg.map_hidden);
  for (Eigen::Index r = 0; r < fam.w2.rows(); ++r)
    for (Eigen::Index c = 0; c < fam.w2.cols(); ++c)
      fam.w2(r, c) = static_cast<float>(rng.normal()) * s2 * 2.0f;
  fam.b2.resize(cfg.info.spec.dim);
  for (Eigen::Index r = 0; r < fam.b2.size(); ++r)
    fam.b2[r] = static_cast<float>(rng.normal()) * 0.1f;
  return fam;
}

std::vector<SyntheticFamilyConfig> default_family_configs() {
  std::vector<SyntheticFamilyConfig> cfgs(4);

  cfgs[0].info.spec = {"brief-like", 256, Domain::binary, Metric::hamming, OutputNorm::none};
  cfgs[0].info.head = OutputHead::sigmoid;
  cfgs[0].info.hidden = {512, 512};
  cfgs[0].map_seed = 101;
  cfgs[0].noise_sigma = 0.1f;

  cfgs[1].info.spec = {"sift-like", 128, Domain::real, Metric::l2, OutputNorm::unit_l2};
  cfgs[1].info.head = OutputHead::relu_unit_l2;
  cfgs[1].info.hidden = {512, 512};
  cfgs[1].map_seed = 202;
  cfgs[1].noise_sigma = 0.1f;

  cfgs[2].info.spec = {"hardnet-like", 128, Domain::real, Metric::l2, OutputNorm::unit_l2};
  cfgs[2].info.head = OutputHead::unit_l2;
  cfgs[2].info.hidden = {256, 256};
  cfgs[2].map_seed = 303;
  cfgs[2].noise_sigma = 0.1f;

  cfgs[3].info.spec = {"sosnet-like", 128, Domain::real, Metric::l2, OutputNorm::unit_l2};
  cfgs[3].info.head = OutputHead::unit_l2;
  cfgs[3].info.hidden = {256, 256};
  cfgs[3].map_seed = 404;
  cfgs[3].noise_sigma = 0.1f;

  for (auto& c : cfgs) c.info.spec.validate();
  return cfgs;
}

MatrixF gen_latents(int n, int latent_dim, std::uint64_t seed) {
  if (n < 1) throw ConfigError("gen_latents: n must be >= 1");
  if (latent_dim < 1) throw ConfigError("gen_latents: latent_dim must be >= 1");
  Rng rng(mix_seed(seed, 0x1a7e17));
  MatrixF latents(n, latent_dim);
  for (Eigen::Index r = 0; r < latents.rows(); ++r)
    for (Eigen::Index c = 0; c < latents.cols(); ++c)
      latents(r, c) = static_cast<float>(rng.normal());
  l2_normalize_rows(latents);
  return latents;
}

DescriptorMatrix describe(const SyntheticFamily& family, const MatrixF& latents,
                          std::span<const std::int64_t> ids, std::uint64_t noise_seed) {
  if (latents.cols() != family.latent_dim)
    throw ShapeError("describe: latent width does not match family map");
  if (static_cast<std::size_t>(latents.rows()) != ids.size())
    throw ShapeError("describe: id count does not match latent rows");

  MatrixF hidden = (latents * family.w1.transpose()).rowwise() + family.b1.transpose();
  hidden = hidden.array().tanh();
  MatrixF pre = (hidden * family.w2.transpose()).rowwise() + family.b2.transpose();

  if (family.cfg.noise_sigma > 0.0f) {
    Rng rng(mix_seed(noise_seed, family.cfg.map_seed));
    for (Eigen::Index r = 0; r < pre.rows(); ++r)
      for (Eigen::Index c = 0; c < pre.cols(); ++c)
        pre(r, c) += family.cfg.noise_sigma * static_cast<float>(rng.normal());
  }

  switch (family.cfg.info.head) {
    case OutputHead::sigmoid:
      for (Eigen::Index r = 0; r < pre.rows(); ++r)
        for (Eigen::Index c = 0; c < pre.cols(); ++c)
          pre(r, c) = pre(r, c) >= 0.0f ? 1.0f : 0.0f;
      break;
    case OutputHead::relu_unit_l2:
      pre = pre.cwiseMax(0.0f);
      for (Eigen::Index r = 0; r < pre.rows(); ++r) {
        if (pre.row(r).norm() <= 1e-6f) pre.row(r) = pre.row(r).cwiseAbs();
      }
      l2_normalize_rows(pre);
      break;
    case OutputHead::unit_l2:
      l2_normalize_rows(pre);
      break;
    case OutputHead::none:
      break;
  }

  DescriptorMatrix out;
  out.spec = family.cfg.info.spec;
  out.patch_ids.assign(ids.begin(), ids.end());
  out.values = std::move(pre);
  out.finalized = true;
  out.validate();
  return out;
}

DescriptorMatrix describe(const SyntheticFamily& family, const MatrixF& latents,
                          std::uint64_t noise_seed) {
  std::vector<std::int64_t> ids(static_cast<std::size_t>(latents.rows()));
  std::iota(ids.begin(), ids.end(), 0);
  return describe(family, latents, ids, noise_seed);
}

CorrespondenceDataset gen_dataset(const MatrixF& latents,
                                  std::span<const SyntheticFamily> families,
                                  std::uint64_t noise_seed) {
  if (families.empty()) throw ConfigError("gen_dataset: need at least one family");
  std::vector<DescriptorMatrix> mats;
  std::vector<FamilyInfo> infos;
  mats.reserve(families.size());
  for (std::size_t k = 0; k < families.size(); ++k) {
    mats.push_back(describe(families[k], latents, mix_seed(noise_seed, k)));
    infos.push_back(families[k].cfg.info);
  }
  return make_dataset(mats, infos);
}

ImageSet gen_multiview(const MatrixF& latents, int n_views,
                       std::span<const SyntheticFamily> families, float visibility,
                       std::uint64_t seed) {
  if (n_views < 2) throw ConfigError("gen_multiview: n_views must be >= 2");
  if (families.empty()) throw ConfigError("gen_multiview: need at least one family");
  if (!(visibility > 0.0f && visibility <= 1.0f))
    throw ConfigError("gen_multiview: visibility must lie in (0,1]");

  const Eigen::Index n = latents.rows();
  ImageSet set;
  set.patch_ids_are_ground_truth = true;
  for (int v = 0; v < n_views; ++v) {
    const SyntheticFamily& fam = families[static_cast<std::size_t>(v) % families.size()];

    std::vector<std::int64_t> visible(static_cast<std::size_t>(n));
    std::iota(visible.begin(), visible.end(), 0);
    if (visibility < 1.0f) {
      Rng rng(mix_seed(seed, 0x517e00 + static_cast<std::uint64_t>(v)));
      rng.shuffle(visible);
      visible.resize(std::max<std::size_t>(
          2, static_cast<std::size_t>(static_cast<double>(n) * visibility)));
      std::sort(visible.begin(), visible.end());
    }

    MatrixF view_latents(static_cast<Eigen::Index>(visible.size()), latents.cols());
    for (std::size_t r = 0; r < visible.size(); ++r)
      view_latents.row(static_cast<Eigen::Index>(r)) = latents.row(visible[r]);

    ImageDesc img;
    img.image_id = v;
    img.algo = fam.cfg.info.spec.name;
    img.descs = describe(fam, view_latents, visible,
                         mix_seed(seed, 0xd00d + static_cast<std::uint64_t>(v)));
    set.images.push_back(std::move(img));
  }
  return set;
}

}  // namespace xdesc
