#include "hill/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hill {

int default_workers() {
    if (const char* env = std::getenv("HILLBAND_WORKERS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? int(hc) : 1;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers) {
    if (workers <= 0) workers = default_workers();
    if (n == 0) return;
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    const std::size_t chunk = 1;

    auto drain = [&] {
        for (;;) {
            const std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const std::size_t end = std::min(begin + chunk, n);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        }
    };

    std::vector<std::thread> pool;
    const int nthreads = int(std::min<std::size_t>(std::size_t(workers), n));
    pool.reserve(std::size_t(nthreads) - 1);
    for (int t = 1; t < nthreads; ++t) pool.emplace_back(drain);
    drain();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace hill
