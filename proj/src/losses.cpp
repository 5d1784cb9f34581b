#include "xdesc/losses.hpp"

namespace xdesc {

std::string to_string(LossVariant v) {
  switch (v) {
    case LossVariant::quadratic: return "quadratic";
    case LossVariant::linear: return "linear";
    case LossVariant::auto_encoder: return "auto-encoder";
  }
  return "quadratic";
}

LossVariant variant_from_string(std::string_view s) {
  if (s == "quadratic") return LossVariant::quadratic;
  if (s == "linear") return LossVariant::linear;
  if (s == "auto-encoder" || s == "auto_encoder") return LossVariant::auto_encoder;
  throw ParseError("unknown loss variant '" + std::string(s) + "'");
}

PairWeights pair_weights(int n_algos, const LossConfig& cfg,
                         std::span<const std::size_t> sigma) {
  if (n_algos < 1) throw ConfigError("pair_weights: need at least one algorithm");
  if (cfg.alpha < 0.0f) throw ConfigError("pair_weights: alpha must be >= 0");
  PairWeights w;
  w.translation = MatrixX<double>::Zero(n_algos, n_algos);
  w.matching = MatrixX<double>::Zero(n_algos, n_algos);
  const double n = static_cast<double>(n_algos);
  const double alpha = static_cast<double>(cfg.alpha);

  auto fill_matching_all_pairs = [&] {
    if (cfg.diagonal_matching) {
      w.matching.setConstant(alpha / (n * n));
    } else if (n_algos > 1) {
      w.matching.setConstant(alpha / (n * n - n));
      w.matching.diagonal().setZero();
    } else {
      w.matching.setConstant(alpha);  // single algorithm: diagonal is all there is
    }
  };

  switch (cfg.variant) {
    case LossVariant::quadratic:
      w.translation.setConstant(1.0 / (n * n));
      fill_matching_all_pairs();
      break;
    case LossVariant::auto_encoder:
      w.translation.diagonal().setConstant(1.0 / n);
      fill_matching_all_pairs();
      break;
    case LossVariant::linear: {
      if (sigma.size() != static_cast<std::size_t>(n_algos))
        throw ConfigError("pair_weights: linear variant needs a permutation of size |A|");
      for (int i = 0; i < n_algos; ++i) {
        const std::size_t j = sigma[static_cast<std::size_t>(i)];
        if (j >= static_cast<std::size_t>(n_algos))
          throw ConfigError("pair_weights: permutation entry out of range");
        w.translation(i, static_cast<Eigen::Index>(j)) = 1.0 / n;
        w.matching(i, static_cast<Eigen::Index>(j)) = alpha / n;
      }
      break;
    }
  }
  return w;
}

}  // namespace xdesc
