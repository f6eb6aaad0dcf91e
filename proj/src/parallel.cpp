#include "gmwb/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace gmwb {

namespace {

int default_threads() noexcept {
    if (const char* env = std::getenv("GMWB_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::atomic<int> g_thread_cap{0};

} // namespace

int thread_cap() noexcept {
    int n = g_thread_cap.load(std::memory_order_relaxed);
    if (n <= 0) {
        n = default_threads();
        g_thread_cap.store(n, std::memory_order_relaxed);
    }
    return n;
}

void set_thread_cap(int threads) noexcept {
    g_thread_cap.store(threads > 0 ? threads : default_threads(), std::memory_order_relaxed);
}

void parallel_for_chunks(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& body) {
    const std::size_t chunks = (count + kChunkSize - 1) / kChunkSize;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_cap()), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c * kChunkSize, std::min(count, (c + 1) * kChunkSize));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                body(c * kChunkSize, std::min(count, (c + 1) * kChunkSize));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(chunks);
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

double pairwise_sum(std::span<const double> xs) noexcept {
    if (xs.size() <= 32) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

SampleStats summarize(std::span<const double> samples, bool antithetic) {
    SampleStats out;
    out.count = samples.size();
    if (samples.empty()) return out;

    std::vector<double> units;
    std::span<const double> view = samples;
    if (antithetic && samples.size() >= 2) {
        units.reserve((samples.size() + 1) / 2);
        for (std::size_t i = 0; i + 1 < samples.size(); i += 2) units.push_back(0.5 * (samples[i] + samples[i + 1]));
        if (samples.size() % 2 == 1) units.push_back(samples.back());
        view = units;
    }

    out.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
    const double unit_mean = pairwise_sum(view) / static_cast<double>(view.size());
    std::vector<double> sq(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) {
        const double d = view[i] - unit_mean;
        sq[i] = d * d;
    }
    const double n = static_cast<double>(view.size());
    const double var = view.size() > 1 ? pairwise_sum(sq) / (n - 1.0) : 0.0;
    out.std_error = std::sqrt(var / n);
    return out;
}

} // namespace gmwb
