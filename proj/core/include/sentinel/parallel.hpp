#pragma once

#include <cstddef>
#include <functional>

namespace sentinel {

/// Environment variable that caps worker threads for batch checks.
inline constexpr const char* kThreadsEnvVar = "RETROFIT_SENTINEL_THREADS";

/// Worker count: the env cap if set and positive, else hardware concurrency.
std::size_t worker_count();

/**
 * Runs body(i) for i in [0, n) on up to `workers` threads (0 = worker_count()).
 * Indices are handed out in increasing order. The first exception thrown by a
 * body is rethrown after all workers join.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  std::size_t workers = 0);

}  // namespace sentinel
