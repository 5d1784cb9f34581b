#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "xdesc/types.hpp"

namespace xdesc {

// One image's descriptors; every image carries exactly one algorithm.
struct ImageDesc {
  std::int64_t image_id = 0;
  std::string algo;
  DescriptorMatrix descs;
};

struct ImageSet {
  std::vector<ImageDesc> images;
  // When set, patch ids are global scene-point ids: equal ids across images
  // denote observations of the same point (the synthetic generator's
  // convention for ground truth).
  bool patch_ids_are_ground_truth = false;

  const ImageDesc* find(std::int64_t image_id) const;
};

// A connected component of the cross-image match graph; stands in for one
// 3D point's observation track.
struct Track {
  std::int64_t track_id = 0;
  std::vector<std::pair<std::int64_t, Eigen::Index>> members;  // (image_id, row)
  std::set<std::string> algos_present;
};

struct TrackSet {
  std::vector<Track> tracks;
};

}  // namespace xdesc
