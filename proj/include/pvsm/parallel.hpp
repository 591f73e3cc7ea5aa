// Copyright Contributors to the pvsm project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace pvsm {

/// Worker count from PVSM_THREADS (0 or unset = hardware concurrency).
inline unsigned
default_thread_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char *env = std::getenv("PVSM_THREADS");
    if (env == nullptr || *env == '\0') {
        return hw;
    }
    char *end = nullptr;
    const long requested = std::strtol(env, &end, 10);
    if (end == env || requested < 0) {
        return hw;
    }
    return requested == 0 ? hw : static_cast<unsigned>(requested);
}

/// Run body(begin, end) over contiguous chunks of [0, count). Each chunk is
/// processed by exactly one worker; callers must only write to state owned by
/// their chunk so results do not depend on scheduling. threads == 0 picks the
/// default count.
template <typename Body>
void
parallel_for_chunks(std::size_t count, Body &&body, unsigned threads = 0,
                    std::size_t minChunk = 1) {
    if (count == 0) {
        return;
    }
    if (threads == 0) {
        threads = default_thread_count();
    }
    const std::size_t maxWorkers = std::max<std::size_t>(1, count / std::max<std::size_t>(1, minChunk));
    const std::size_t workers = std::min<std::size_t>(threads, maxWorkers);
    if (workers <= 1) {
        body(std::size_t{0}, count);
        return;
    }

    std::exception_ptr firstError;
    std::mutex errorMutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t base = count / workers;
    const std::size_t extra = count % workers;
    std::size_t begin = 0;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t end = begin + base + (w < extra ? 1 : 0);
        pool.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(errorMutex);
                if (!firstError) {
                    firstError = std::current_exception();
                }
            }
        });
        begin = end;
    }
    for (auto &t : pool) {
        t.join();
    }
    if (firstError) {
        std::rethrow_exception(firstError);
    }
}

} // namespace pvsm
