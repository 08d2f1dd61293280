#include "krnet/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace krnet {

namespace {

std::atomic<int> g_threads{0};  // 0 means "not set explicitly"

int default_threads() {
    if (const char* env = std::getenv("KRNET_THREADS")) {
        const int parsed = std::atoi(env);
        if (parsed >= 1) return parsed;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace

int num_threads() {
    const int n = g_threads.load(std::memory_order_relaxed);
    return n >= 1 ? n : default_threads();
}

void set_num_threads(int n) {
    g_threads.store(n >= 1 ? n : 0, std::memory_order_relaxed);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body) {
    if (count == 0) return;
    const std::size_t workers =
        std::min(count, static_cast<std::size_t>(num_threads()));
    if (workers <= 1) {
        body(0, count);
        return;
    }
    // Contiguous even split; each index lands in exactly one range, so the
    // result is independent of the worker count.
    const std::size_t chunk = count / workers;
    const std::size_t extra = count % workers;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < workers; ++i) {
        const std::size_t end = begin + chunk + (i < extra ? 1 : 0);
        threads.emplace_back([&body, begin, end, &first_error, &error_mutex] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace krnet
