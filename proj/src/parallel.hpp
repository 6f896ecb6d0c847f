#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace htrm::detail {

// Runs fn(i) for i in [0, count) on up to `threads` workers. Work items must write only to
// their own output slot; the first exception is rethrown after the join.
template <class Fn>
void parallel_for(std::uint64_t count, unsigned threads, Fn&& fn) {
    threads = std::max(1u, threads);
    if (threads == 1 || count <= 1) {
        for (std::uint64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::uint64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const auto n = static_cast<unsigned>(std::min<std::uint64_t>(threads, count));
    pool.reserve(n);
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace htrm::detail
