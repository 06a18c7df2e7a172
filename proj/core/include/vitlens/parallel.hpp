#pragma once

#include <cstddef>
#include <functional>

namespace vitlens {

inline constexpr const char* kThreadsEnv = "SSL_VIT_LENS_THREADS";

/// Hardware concurrency, capped by SSL_VIT_LENS_THREADS when it holds a
/// positive integer. Never less than 1.
unsigned worker_count();

/// Runs body(i) for i in [0, count) on up to worker_count() threads. Each
/// index runs exactly once; the first exception thrown is rethrown after
/// all workers stop.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace vitlens
