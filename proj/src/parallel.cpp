#include "spcdist/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

namespace spcdist {

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> first_failure{std::numeric_limits<std::size_t>::max()};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    auto work = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            // Indices are handed out in increasing order, so every index below
            // a recorded failure has already been claimed.
            if (i > first_failure.load()) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (i < first_failure.load()) {
                    first_failure.store(i);
                    failure = std::current_exception();
                }
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace spcdist
