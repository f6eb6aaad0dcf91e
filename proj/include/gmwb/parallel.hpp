// Deterministic fork/join over fixed-size chunks and ordered reductions.
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gmwb {

/// Worker cap used by every engine call. Defaults to $GMWB_THREADS when set,
/// otherwise std::thread::hardware_concurrency(). Changing it never changes
/// results, only wall time.
int thread_cap() noexcept;
void set_thread_cap(int threads) noexcept;

/// Paths per work unit. Chunk boundaries do not depend on the thread count.
inline constexpr std::size_t kChunkSize = 2048;

/// Calls body(begin, end) for each [begin, end) chunk of [0, count).
/// Chunks may run concurrently; the body must only write chunk-owned state.
void parallel_for_chunks(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& body);

/// Pairwise (cascade) summation in index order.
double pairwise_sum(std::span<const double> xs) noexcept;

struct SampleStats {
    double mean = 0.0;
    double std_error = 0.0; // standard error of the mean, 1 sigma
    std::size_t count = 0;
};

/// Mean and standard error of per-path samples. With antithetic pairing the
/// error is computed from pair averages (paths 2i and 2i+1).
SampleStats summarize(std::span<const double> samples, bool antithetic = false);

} // namespace gmwb
