#pragma once

#include <cstdint>
#include <vector>

#include "xdesc/types.hpp"

namespace xdesc {

inline constexpr float kUnitNormTol = 1e-5f;

// v / ||v||. Throws NormalizationError on zero-norm input.
template <class T>
VectorX<T> l2_normalize(const VectorX<T>& v) {
  const T n = v.norm();
  if (n <= T(0)) throw NormalizationError("l2_normalize: zero-norm vector");
  return v / n;
}

void l2_normalize_rows(MatrixF& m);

// Euclidean or bit-count distance between two equal-length rows. Hamming
// requires exact {0,1} entries. Distances are floats either way so matchers
// share one interface.
float distance(Eigen::Ref<const Eigen::RowVectorXf> a,
               Eigen::Ref<const Eigen::RowVectorXf> b, Metric metric);

// out[k] = 1 if v[k] >= threshold else 0. threshold must lie in (0,1).
VectorF binarize(const VectorF& v, float threshold);
void binarize_rows(MatrixF& m, float threshold);

// {0,1} float rows packed into 64-bit words for popcount matching.
struct PackedBits {
  Eigen::Index rows = 0;
  Eigen::Index bits = 0;
  Eigen::Index words_per_row = 0;
  std::vector<std::uint64_t> words;

  const std::uint64_t* row(Eigen::Index r) const { return words.data() + r * words_per_row; }
};

PackedBits pack_bits(const MatrixF& m);  // DomainError unless entries are {0,1}
int hamming_words(const std::uint64_t* a, const std::uint64_t* b, Eigen::Index n);

}  // namespace xdesc
