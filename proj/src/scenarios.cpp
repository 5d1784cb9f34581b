#include "xdesc/scenarios.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

namespace xdesc {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::embed: return "embed";
    case Strategy::progressive: return "progressive";
    case Strategy::naive: return "naive";
  }
  return "embed";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "embed") return Strategy::embed;
  if (s == "progressive") return Strategy::progressive;
  if (s == "naive") return Strategy::naive;
  throw ParseError("unknown strategy '" + std::string(s) + "'");
}

Direction progressive_direction(std::span<const std::string> hierarchy,
                                const std::string& a, const std::string& b) {
  auto rank = [&hierarchy](const std::string& name) {
    for (std::size_t k = 0; k < hierarchy.size(); ++k)
      if (hierarchy[k] == name) return k;
    throw ConfigError("progressive_direction: algorithm '" + name + "' not in hierarchy");
  };
  if (a == b) return Direction::none;
  return rank(a) < rank(b) ? Direction::a_to_b : Direction::b_to_a;
}

const PairModel* Translators::find_pair(std::string_view src, std::string_view dst) const {
  for (const PairModel* p : pairs) {
    if (p && p->src.spec.name == src && p->dst.spec.name == dst) return p;
  }
  return nullptr;
}

namespace {

DescriptorMatrix translate_with(const Translators& models, const std::string& src,
                                const std::string& dst, const DescriptorMatrix& descs) {
  if (const PairModel* p = models.find_pair(src, dst)) return translate(*p, descs);
  if (models.bank && models.bank->find(src) >= 0 && models.bank->find(dst) >= 0)
    return translate_via_bank(*models.bank, src, dst, descs);
  throw ConfigError("no model covers translation " + src + " -> " + dst);
}

Metric naive_metric(const AlgorithmSpec& a, const AlgorithmSpec& b) {
  if (a.domain == Domain::binary && b.domain == Domain::binary) return Metric::hamming;
  return Metric::l2;
}

}  // namespace

std::vector<ImagePairMatches> build_match_graph(const ImageSet& set,
                                                const MatchGraphConfig& cfg,
                                                const Translators& models) {
  // deterministic pair order regardless of input enumeration
  std::vector<const ImageDesc*> images;
  images.reserve(set.images.size());
  for (const auto& img : set.images) images.push_back(&img);
  std::sort(images.begin(), images.end(),
            [](const ImageDesc* x, const ImageDesc* y) { return x->image_id < y->image_id; });

  std::vector<std::string> hierarchy = cfg.hierarchy;
  if (cfg.strategy == Strategy::progressive && hierarchy.empty()) {
    for (const ImageDesc* img : images)
      if (std::find(hierarchy.begin(), hierarchy.end(), img->algo) == hierarchy.end())
        hierarchy.push_back(img->algo);
  }

  // encode each image once for the embed strategy
  std::unordered_map<std::int64_t, DescriptorMatrix> embedded;
  if (cfg.strategy == Strategy::embed) {
    if (!models.bank) throw ConfigError("embed strategy requires a model bank");
    for (const ImageDesc* img : images) {
      if (models.bank->find(img->algo) < 0)
        throw ConfigError("bank does not cover algorithm '" + img->algo + "'");
      embedded.emplace(img->image_id, encode(*models.bank, img->algo, img->descs));
    }
  }

  std::vector<ImagePairMatches> graph;
  for (std::size_t u = 0; u < images.size(); ++u) {
    for (std::size_t v = u + 1; v < images.size(); ++v) {
      const ImageDesc& a = *images[u];
      const ImageDesc& b = *images[v];
      ImagePairMatches entry;
      entry.image_a = a.image_id;
      entry.image_b = b.image_id;
      switch (cfg.strategy) {
        case Strategy::embed: {
          entry.matches = match_mutual_ratio(embedded.at(a.image_id).values,
                                             embedded.at(b.image_id).values, Metric::l2,
                                             cfg.ratio, cfg.threads);
          break;
        }
        case Strategy::progressive: {
          const Direction dir = progressive_direction(hierarchy, a.algo, b.algo);
          if (dir == Direction::none) {
            entry.matches = match_mutual_ratio(a.descs.values, b.descs.values,
                                               a.descs.spec.metric, cfg.ratio, cfg.threads);
          } else if (dir == Direction::a_to_b) {
            const DescriptorMatrix translated = translate_with(models, a.algo, b.algo, a.descs);
            entry.matches = match_mutual_ratio(translated.values, b.descs.values,
                                               b.descs.spec.metric, cfg.ratio, cfg.threads);
          } else {
            const DescriptorMatrix translated = translate_with(models, b.algo, a.algo, b.descs);
            entry.matches = match_mutual_ratio(a.descs.values, translated.values,
                                               a.descs.spec.metric, cfg.ratio, cfg.threads);
          }
          break;
        }
        case Strategy::naive: {
          if (a.descs.spec.dim != b.descs.spec.dim) continue;  // incompatible, skip
          entry.matches =
              match_mutual_ratio(a.descs.values, b.descs.values,
                                 naive_metric(a.descs.spec, b.descs.spec), cfg.ratio,
                                 cfg.threads);
          break;
        }
      }
      graph.push_back(std::move(entry));
    }
  }
  return graph;
}

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> rank_;
};

}  // namespace

TrackSet build_tracks(const ImageSet& set, std::span<const ImagePairMatches> graphs) {
  // global node index per (image_id, row)
  std::map<std::int64_t, const ImageDesc*> by_id;
  for (const auto& img : set.images) by_id[img.image_id] = &img;

  std::map<std::int64_t, std::size_t> node_base;
  std::size_t total = 0;
  for (const auto& [id, img] : by_id) {
    node_base[id] = total;
    total += static_cast<std::size_t>(img->descs.rows());
  }

  UnionFind uf(total);
  for (const auto& pair : graphs) {
    const auto it_a = node_base.find(pair.image_a);
    const auto it_b = node_base.find(pair.image_b);
    if (it_a == node_base.end() || it_b == node_base.end())
      throw ShapeError("build_tracks: match references unknown image");
    const ImageDesc* img_a = by_id.at(pair.image_a);
    const ImageDesc* img_b = by_id.at(pair.image_b);
    for (const Match& m : pair.matches.pairs) {
      if (m.index_a >= img_a->descs.rows() || m.index_b >= img_b->descs.rows())
        throw ShapeError("build_tracks: match row out of bounds");
      uf.unite(it_a->second + static_cast<std::size_t>(m.index_a),
               it_b->second + static_cast<std::size_t>(m.index_b));
    }
  }

  std::unordered_map<std::size_t, std::vector<std::pair<std::int64_t, Eigen::Index>>> comps;
  for (const auto& [id, base] : node_base) {
    const ImageDesc* img = by_id.at(id);
    for (Eigen::Index r = 0; r < img->descs.rows(); ++r)
      comps[uf.find(base + static_cast<std::size_t>(r))].emplace_back(id, r);
  }

  TrackSet tracks;
  std::vector<std::vector<std::pair<std::int64_t, Eigen::Index>>> kept;
  for (auto& [root, members] : comps) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    bool consistent = true;
    for (std::size_t k = 1; k < members.size(); ++k) {
      if (members[k].first == members[k - 1].first) {
        consistent = false;  // two rows of one image
        break;
      }
    }
    if (consistent) kept.push_back(std::move(members));
  }
  std::sort(kept.begin(), kept.end());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    Track t;
    t.track_id = static_cast<std::int64_t>(k);
    t.members = std::move(kept[k]);
    for (const auto& [img_id, row] : t.members) t.algos_present.insert(by_id.at(img_id)->algo);
    tracks.tracks.push_back(std::move(t));
  }
  return tracks;
}

CovisibilityStats covisibility_stats(const TrackSet& tracks,
                                     std::span<const std::string> algos) {
  if (tracks.tracks.empty()) throw StatsError("covisibility_stats: empty track set");
  if (algos.empty()) throw StatsError("covisibility_stats: empty algorithm list");

  CovisibilityStats stats;
  stats.algos.assign(algos.begin(), algos.end());
  stats.track_count = tracks.tracks.size();
  stats.histogram.assign(algos.size(), 0.0);
  stats.co_occurrence = MatrixX<double>::Zero(static_cast<Eigen::Index>(algos.size()),
                                              static_cast<Eigen::Index>(algos.size()));

  auto index_of = [&algos](const std::string& name) {
    for (std::size_t k = 0; k < algos.size(); ++k)
      if (algos[k] == name) return static_cast<Eigen::Index>(k);
    throw StatsError("covisibility_stats: track algorithm '" + name + "' not in list");
  };

  const double pct = 100.0 / static_cast<double>(tracks.tracks.size());
  for (const Track& t : tracks.tracks) {
    const std::size_t distinct = t.algos_present.size();
    if (distinct == 0 || distinct > algos.size())
      throw StatsError("covisibility_stats: track with invalid algorithm count");
    stats.histogram[distinct - 1] += pct;
    std::vector<Eigen::Index> present;
    for (const std::string& name : t.algos_present) present.push_back(index_of(name));
    for (Eigen::Index i : present)
      for (Eigen::Index j : present) stats.co_occurrence(i, j) += i == j ? pct : 0.0;
    for (std::size_t x = 0; x < present.size(); ++x)
      for (std::size_t y = x + 1; y < present.size(); ++y) {
        stats.co_occurrence(present[x], present[y]) += pct;
        stats.co_occurrence(present[y], present[x]) += pct;
      }
  }
  return stats;
}

std::size_t count_correct_matches(const ImageSet& set,
                                  std::span<const ImagePairMatches> graphs) {
  if (!set.patch_ids_are_ground_truth)
    throw StatsError("count_correct_matches: image set carries no ground truth");
  std::map<std::int64_t, const ImageDesc*> by_id;
  for (const auto& img : set.images) by_id[img.image_id] = &img;
  std::size_t correct = 0;
  for (const auto& pair : graphs) {
    const ImageDesc* a = by_id.at(pair.image_a);
    const ImageDesc* b = by_id.at(pair.image_b);
    for (const Match& m : pair.matches.pairs) {
      if (a->descs.patch_ids[static_cast<std::size_t>(m.index_a)] ==
          b->descs.patch_ids[static_cast<std::size_t>(m.index_b)])
        ++correct;
    }
  }
  return correct;
}

}  // namespace xdesc
