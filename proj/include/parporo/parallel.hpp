#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace parporo {

// Worker count: an explicit positive request wins; otherwise PARPORO_THREADS,
// otherwise the hardware concurrency. Always at least 1.
int resolve_threads(int requested = 0);

// Runs fn(i) for i in [0, count). Work is claimed from a shared counter, so
// callers must write results into per-index slots; the first exception thrown
// by any worker is rethrown after all workers finish.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

// SplitMix64 step, used to derive independent per-sample streams from a seed.
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace parporo
