#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace msdrec::parallel {

/// Rows per work unit. Reductions combine per-chunk partials in ascending
/// chunk order, so results never depend on the worker count.
inline constexpr std::size_t kChunkRows = 1024;

/// 0 means "all hardware threads".
inline unsigned resolve_workers(unsigned requested) noexcept {
    if (requested != 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunkRows) noexcept {
    return (n + chunk - 1) / chunk;
}

/// Calls fn(chunk_index, begin, end) for every chunk of [0, n). Chunks are
/// handed out dynamically; fn must only write chunk-owned state.
template <typename Fn>
void for_each_chunk(std::size_t n, unsigned workers, Fn&& fn, std::size_t chunk = kChunkRows) {
    const std::size_t chunks = chunk_count(n, chunk);
    if (chunks == 0) return;
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), chunks));
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(c, c * chunk, std::min(n, (c + 1) * chunk));
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
                fn(c, c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads - 1);
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace msdrec::parallel
