#include "xdesc/matching.hpp"

#include <cstdlib>
#include <limits>
#include <thread>
#include <unordered_map>
#include <vector>

#include "xdesc/parallel.hpp"

namespace xdesc {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("XDESC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

void parallel_for(Eigen::Index n, int threads,
                  const std::function<void(Eigen::Index, Eigen::Index)>& fn) {
  threads = resolve_threads(threads);
  if (threads <= 1 || n < 2 * threads) {
    fn(0, n);
    return;
  }
  const Eigen::Index chunk = (n + threads - 1) / threads;
  std::vector<std::thread> workers;
  for (Eigen::Index begin = 0; begin < n; begin += chunk) {
    const Eigen::Index end = std::min(n, begin + chunk);
    workers.emplace_back(fn, begin, end);
  }
  for (auto& w : workers) w.join();
}

namespace {

struct NnInfo {
  Eigen::Index idx = -1;
  float d1 = std::numeric_limits<float>::max();
  float d2 = std::numeric_limits<float>::max();
};

// Nearest and second-nearest target distances for every query row. Ties for
// the nearest break to the lowest index; d2 is the second element of the
// sorted distance list, so duplicated targets yield d2 == d1.
std::vector<NnInfo> nn_scan(const MatrixF& queries, const MatrixF& targets,
                            Metric metric, int threads) {
  std::vector<NnInfo> out(static_cast<std::size_t>(queries.rows()));

  if (metric == Metric::hamming) {
    const PackedBits pq = pack_bits(queries);
    const PackedBits pt = pack_bits(targets);
    parallel_for(queries.rows(), threads, [&](Eigen::Index begin, Eigen::Index end) {
      for (Eigen::Index q = begin; q < end; ++q) {
        NnInfo best;
        for (Eigen::Index t = 0; t < targets.rows(); ++t) {
          const float d = static_cast<float>(
              hamming_words(pq.row(q), pt.row(t), pq.words_per_row));
          if (d < best.d1) {
            best.d2 = best.d1;
            best.d1 = d;
            best.idx = t;
          } else if (d < best.d2) {
            best.d2 = d;
          }
        }
        out[static_cast<std::size_t>(q)] = best;
      }
    });
    return out;
  }

  parallel_for(queries.rows(), threads, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index q = begin; q < end; ++q) {
      NnInfo best;
      for (Eigen::Index t = 0; t < targets.rows(); ++t) {
        const float d = (queries.row(q) - targets.row(t)).norm();
        if (d < best.d1) {
          best.d2 = best.d1;
          best.d1 = d;
          best.idx = t;
        } else if (d < best.d2) {
          best.d2 = d;
        }
      }
      out[static_cast<std::size_t>(q)] = best;
    }
  });
  return out;
}

}  // namespace

MatchSet match_nn(const MatrixF& a, const MatrixF& b, Metric metric, int threads) {
  if (a.cols() != b.cols())
    throw ShapeError("match_nn: descriptor widths differ (" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.cols()) + ")");
  if (b.rows() == 0) throw MatchError("match_nn: empty target set");

  const std::vector<NnInfo> fwd = nn_scan(a, b, metric, threads);
  MatchSet set;
  set.metric = metric;
  set.pairs.reserve(fwd.size());
  for (Eigen::Index q = 0; q < a.rows(); ++q) {
    const NnInfo& nn = fwd[static_cast<std::size_t>(q)];
    set.pairs.push_back({q, nn.idx, nn.d1});
  }
  return set;
}

MatchSet match_mutual_ratio(const MatrixF& a, const MatrixF& b, Metric metric,
                            float ratio, int threads) {
  if (a.cols() != b.cols())
    throw ShapeError("match_mutual_ratio: descriptor widths differ");
  if (!(ratio > 0.0f && ratio <= 1.0f))
    throw ConfigError("match_mutual_ratio: ratio must lie in (0,1]");
  if (a.rows() < 2 || b.rows() < 2)
    throw MatchError("match_mutual_ratio: both sides need >= 2 rows for the second-NN test");

  const std::vector<NnInfo> fwd = nn_scan(a, b, metric, threads);
  const std::vector<NnInfo> bwd = nn_scan(b, a, metric, threads);

  auto ratio_ok = [ratio](const NnInfo& nn) {
    // all-equal degenerate case reads as d1/d2 = 1
    if (nn.d2 <= 0.0f) return 1.0f <= ratio;
    return nn.d1 / nn.d2 <= ratio;
  };

  MatchSet set;
  set.metric = metric;
  set.ratio = ratio;
  for (Eigen::Index q = 0; q < a.rows(); ++q) {
    const NnInfo& f = fwd[static_cast<std::size_t>(q)];
    const NnInfo& r = bwd[static_cast<std::size_t>(f.idx)];
    if (r.idx != q) continue;
    if (!ratio_ok(f) || !ratio_ok(r)) continue;
    set.pairs.push_back({q, f.idx, f.d1});
  }
  return set;
}

MatchQuality match_metrics(const MatchSet& matches, std::span<const std::int64_t> ids_a,
                           std::span<const std::int64_t> ids_b,
                           std::span<const std::pair<std::int64_t, std::int64_t>> ground_truth) {
  std::unordered_map<std::int64_t, std::int64_t> expected;
  expected.reserve(ground_truth.size());
  for (const auto& [ida, idb] : ground_truth) expected.emplace(ida, idb);

  MatchQuality q;
  q.count = matches.pairs.size();
  for (const Match& m : matches.pairs) {
    if (m.index_a < 0 || static_cast<std::size_t>(m.index_a) >= ids_a.size() ||
        m.index_b < 0 || static_cast<std::size_t>(m.index_b) >= ids_b.size())
      throw ShapeError("match_metrics: match index out of bounds");
    const auto it = expected.find(ids_a[static_cast<std::size_t>(m.index_a)]);
    if (it != expected.end() && it->second == ids_b[static_cast<std::size_t>(m.index_b)])
      ++q.correct;
  }
  q.precision = q.count == 0 ? 1.0 : static_cast<double>(q.correct) / static_cast<double>(q.count);
  q.recall = ground_truth.empty()
                 ? 0.0
                 : static_cast<double>(q.correct) / static_cast<double>(ground_truth.size());
  return q;
}

}  // namespace xdesc
