#include "cslab/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace cslab {

namespace {
std::atomic<int> g_workers{1};
}  // namespace

void set_worker_count(int jobs) { g_workers.store(std::max(1, jobs)); }

int worker_count() { return g_workers.load(); }

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk) {
    if (count == 0) return;
    std::size_t workers = static_cast<std::size_t>(worker_count());
    workers = std::min(workers, (count + min_chunk - 1) / std::max<std::size_t>(min_chunk, 1));
    if (workers <= 1) {
        body(0, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&body, &errors](std::size_t w, std::size_t begin, std::size_t end) {
        try {
            body(begin, end);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back(run, w, begin, end);
    }
    run(0, 0, std::min(count, chunk));
    for (auto& t : pool) t.join();
    // The lowest failing chunk wins so the reported error does not depend on scheduling.
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace cslab
