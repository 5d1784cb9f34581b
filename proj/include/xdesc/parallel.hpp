#pragma once

#include <Eigen/Core>

#include <functional>

namespace xdesc {

// Resolves a worker count: positive values pass through, anything else falls
// back to the XDESC_THREADS environment variable, then to 1.
int resolve_threads(int requested);

// Runs fn over [0, n) split into contiguous chunks, one per worker. Callers
// write disjoint output slots, so results do not depend on the thread count.
void parallel_for(Eigen::Index n, int threads,
                  const std::function<void(Eigen::Index begin, Eigen::Index end)>& fn);

}  // namespace xdesc
