#pragma once

// Minimal fork-join helper for embarrassingly parallel sweeps (table cells,
// alpha grids).  Work items are indexed; results are written into
// caller-owned slots, so assembly order is deterministic regardless of
// scheduling.  PARAMSTAB_THREADS caps the worker count.

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include "paramstab/common.hpp"

namespace paramstab {

inline std::size_t thread_budget() {
    if (const char* env = std::getenv("PARAMSTAB_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// body(i) is invoked exactly once for every i in [0, count); exceptions are
// captured and rethrown on the calling thread (first one wins).
template <typename Body>
void parallel_for(std::size_t count, const Body& body) {
    const std::size_t workers = std::min(thread_budget(), std::max<std::size_t>(count, 1));
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count;
                     i = next.fetch_add(1))
                    body(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace paramstab
