#pragma once

#include <span>
#include <string>
#include <vector>

#include "xdesc/bank.hpp"
#include "xdesc/matching.hpp"
#include "xdesc/pair.hpp"
#include "xdesc/scenarios_types.hpp"

namespace xdesc {

enum class Strategy { embed, progressive, naive };

std::string to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

enum class Direction { a_to_b, b_to_a, none };

// Translation direction for a progressive image pair: the lower-ranked
// algorithm in the hierarchy is translated towards the higher-ranked one;
// equal algorithms need no translation.
Direction progressive_direction(std::span<const std::string> hierarchy,
                                const std::string& a, const std::string& b);

// The models a strategy may draw on: a bank realizes every direction, pair
// models override the bank for their specific direction.
struct Translators {
  const ModelBank* bank = nullptr;
  std::vector<const PairModel*> pairs;

  const PairModel* find_pair(std::string_view src, std::string_view dst) const;
};

struct MatchGraphConfig {
  Strategy strategy = Strategy::embed;
  float ratio = 0.9f;
  std::vector<std::string> hierarchy;  // progressive only; empty = image order
  int threads = 1;
};

struct ImagePairMatches {
  std::int64_t image_a = 0;
  std::int64_t image_b = 0;
  MatchSet matches;
};

// Matches every unordered image pair under the chosen strategy. Naive pairs
// with incompatible dimensions are skipped rather than failing.
std::vector<ImagePairMatches> build_match_graph(const ImageSet& set,
                                                const MatchGraphConfig& cfg,
                                                const Translators& models);

// Union-find over match edges; components containing two rows of the same
// image are inconsistent and dropped entirely.
TrackSet build_tracks(const ImageSet& set, std::span<const ImagePairMatches> graphs);

struct CovisibilityStats {
  std::vector<std::string> algos;
  std::vector<double> histogram;        // histogram[k] = % of tracks with k+1 algos
  MatrixX<double> co_occurrence;        // % of tracks containing both i and j
  std::size_t track_count = 0;
};

CovisibilityStats covisibility_stats(const TrackSet& tracks,
                                     std::span<const std::string> algos);

// Ground-truth-correct cross-image correspondence count (patch ids as global
// point ids), used to compare strategies.
std::size_t count_correct_matches(const ImageSet& set,
                                  std::span<const ImagePairMatches> graphs);

}  // namespace xdesc
