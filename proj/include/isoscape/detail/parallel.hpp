#ifndef ISOSCAPE_DETAIL_PARALLEL_HPP
#define ISOSCAPE_DETAIL_PARALLEL_HPP

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace isoscape {
namespace detail {

inline int resolve_threads(int requested) {
    if (requested > 0) {
        return requested;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Deterministic parallel map: index space is split into contiguous chunks,
// one per worker, and f(i) must only write state owned by index i. Output is
// then independent of the worker count by construction.
template<typename F>
void parallel_for(std::size_t n, int threads, F&& f) {
    threads = resolve_threads(threads);
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            f(i);
        }
        return;
    }

    std::size_t workers = static_cast<std::size_t>(threads);
    if (workers > n) workers = n;

    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(workers);

    std::size_t chunk = n / workers;
    std::size_t rem = n % workers;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t len = chunk + (w < rem ? 1 : 0);
        std::size_t end = begin + len;
        pool.emplace_back([&f, &err_mutex, &first_error, begin, end]() {
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    f(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
        begin = end;
    }
    for (auto& t : pool) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}
}

#endif
