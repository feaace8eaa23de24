#pragma once

#include <cstddef>

#include <tbb/parallel_for.h>

namespace tiss {

// Runs fn(f) for every frequency bin. Each bin's work must be independent;
// results do not depend on the scheduling, so outputs stay bit-identical
// for any thread count.
template <class Fn>
void for_each_bin(std::size_t num_bins, Fn&& fn) {
  tbb::parallel_for(std::size_t{0}, num_bins, [&](std::size_t f) { fn(f); });
}

}  // namespace tiss
