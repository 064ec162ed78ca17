#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace afcraman {

// Worker count: AFCRAMAN_THREADS when set to a positive integer, otherwise
// the hardware concurrency. Results never depend on this value; it only
// controls how many threads pull chunks.
inline unsigned thread_count() {
    if (const char* env = std::getenv("AFCRAMAN_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs body(chunk_index, begin, end) over [0, n) split into fixed-size
// chunks. The decomposition depends only on n, so per-chunk partial results
// combined in chunk order are bit-identical for any thread count.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunk_size, Fn&& body) {
    if (n == 0) return;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    const unsigned workers = std::min<std::size_t>(thread_count(), n_chunks);
    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * chunk_size;
        const std::size_t end = std::min(n, begin + chunk_size);
        body(c, begin, end);
    };
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
                run_chunk(c);
        });
    }
    for (auto& t : pool) t.join();
}

// Deterministic parallel reduction: sums term(i) over [0, n) with a fixed
// chunk decomposition and in-order combination of the partials.
template <class T, class TermFn>
T chunked_sum(std::size_t n, TermFn&& term) {
    constexpr std::size_t chunk_size = 2048;
    const std::size_t n_chunks = (n + chunk_size - 1) / chunk_size;
    std::vector<T> partial(n_chunks, T{});
    parallel_chunks(n, chunk_size, [&](std::size_t c, std::size_t begin, std::size_t end) {
        T acc{};
        for (std::size_t i = begin; i < end; ++i) acc += term(i);
        partial[c] = acc;
    });
    T total{};
    for (const T& p : partial) total += p;
    return total;
}

}  // namespace afcraman
