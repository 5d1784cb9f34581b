#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "xdesc/metrics.hpp"
#include "xdesc/types.hpp"

namespace xdesc {

struct Match {
  Eigen::Index index_a = 0;
  Eigen::Index index_b = 0;
  float distance = 0.0f;
};

struct MatchSet {
  std::vector<Match> pairs;  // ordered by index_a
  Metric metric = Metric::l2;
  std::optional<float> ratio;
};

// Nearest row of B for every row of A, ties broken to the lowest index.
MatchSet match_nn(const MatrixF& a, const MatrixF& b, Metric metric, int threads = 1);

// Mutual nearest neighbors with the symmetric second-NN ratio test: a pair
// survives only if each side is the other's nearest neighbor and d1/d2 <=
// ratio holds in both query directions.
MatchSet match_mutual_ratio(const MatrixF& a, const MatrixF& b, Metric metric,
                            float ratio, int threads = 1);

struct MatchQuality {
  double precision = 1.0;
  double recall = 0.0;
  std::size_t count = 0;
  std::size_t correct = 0;
};

// Scores a match set against a ground-truth patch-id correspondence.
// Empty match sets score precision 1, recall 0.
MatchQuality match_metrics(const MatchSet& matches, std::span<const std::int64_t> ids_a,
                           std::span<const std::int64_t> ids_b,
                           std::span<const std::pair<std::int64_t, std::int64_t>> ground_truth);

}  // namespace xdesc
