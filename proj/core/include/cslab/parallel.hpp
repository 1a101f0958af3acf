#pragma once

#include <cstddef>
#include <functional>

namespace cslab {

/// Number of worker threads used by parallel loops. Values below 1 are clamped to 1.
void set_worker_count(int jobs);
int worker_count();

/**
 * @brief Runs body(begin, end) over contiguous index chunks.
 *
 * Every index in [0, count) is visited exactly once. Results must be written
 * per index; any reduction is done by the caller afterwards in index order,
 * which keeps outputs independent of the worker count.
 */
void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 64);

}  // namespace cslab
