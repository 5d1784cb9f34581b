#include "xdesc/metrics.hpp"

#include <bit>
#include <cmath>

namespace xdesc {

void l2_normalize_rows(MatrixF& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const float n = m.row(r).norm();
    if (n <= 0.0f)
      throw NormalizationError("l2_normalize_rows: zero-norm row " + std::to_string(r));
    m.row(r) /= n;
  }
}

namespace {

bool is_bit(float v) { return v == 0.0f || v == 1.0f; }

}  // namespace

float distance(Eigen::Ref<const Eigen::RowVectorXf> a,
               Eigen::Ref<const Eigen::RowVectorXf> b, Metric metric) {
  if (a.size() != b.size())
    throw ShapeError("distance: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  if (metric == Metric::l2) return (a - b).norm();

  int bits = 0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if (!is_bit(a[k]) || !is_bit(b[k]))
      throw DomainError("distance: hamming requires binarized {0,1} rows");
    bits += (a[k] != b[k]) ? 1 : 0;
  }
  return static_cast<float>(bits);
}

VectorF binarize(const VectorF& v, float threshold) {
  if (!(threshold > 0.0f && threshold < 1.0f))
    throw ConfigError("binarize: threshold must lie in (0,1)");
  VectorF out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out[k] = v[k] >= threshold ? 1.0f : 0.0f;
  return out;
}

void binarize_rows(MatrixF& m, float threshold) {
  if (!(threshold > 0.0f && threshold < 1.0f))
    throw ConfigError("binarize: threshold must lie in (0,1)");
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = m(r, c) >= threshold ? 1.0f : 0.0f;
}

PackedBits pack_bits(const MatrixF& m) {
  PackedBits p;
  p.rows = m.rows();
  p.bits = m.cols();
  p.words_per_row = (m.cols() + 63) / 64;
  p.words.assign(static_cast<std::size_t>(p.rows * p.words_per_row), 0);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::uint64_t* w = p.words.data() + r * p.words_per_row;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const float v = m(r, c);
      if (!is_bit(v)) throw DomainError("pack_bits: entries must be exactly 0 or 1");
      if (v == 1.0f) w[c >> 6] |= (std::uint64_t{1} << (c & 63));
    }
  }
  return p;
}

int hamming_words(const std::uint64_t* a, const std::uint64_t* b, Eigen::Index n) {
  int d = 0;
  for (Eigen::Index k = 0; k < n; ++k) d += std::popcount(a[k] ^ b[k]);
  return d;
}

}  // namespace xdesc
