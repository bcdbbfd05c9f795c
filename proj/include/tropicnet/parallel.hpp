#ifndef TROPICNET_PARALLEL_HPP
#define TROPICNET_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace tropicnet {

/// Worker count: TROPICNET_WORKERS if set, else `configured` if nonzero, else
/// the number of hardware threads.
std::size_t resolve_workers(std::size_t configured);

/// Splits [0, n) into at most `workers` contiguous chunks and runs
/// body(begin, end, worker_index) on each, one thread per chunk. Returns after
/// every chunk is done; the first exception thrown by a chunk is rethrown.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

}  // namespace tropicnet

#endif  // TROPICNET_PARALLEL_HPP
