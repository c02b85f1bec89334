/*
 * mfe - a morphable face engine: model building, rendering, fitting and texture recovery.
 *
 * File: include/mfe/core/parallel.hpp
 *
 * Copyright 2026 The mfe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MFE_CORE_PARALLEL_HPP_
#define MFE_CORE_PARALLEL_HPP_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mfe {

namespace detail {
inline std::atomic<int>& thread_count_storage()
{
    static std::atomic<int> count{1};
    return count;
}
} // namespace detail

/// Number of worker threads used by parallel_for. Defaults to 1.
inline int num_threads() noexcept { return detail::thread_count_storage().load(); }

inline void set_num_threads(int n) noexcept { detail::thread_count_storage().store(std::max(1, n)); }

/**
 * Calls body(i) for every i in [0, count). Work is handed out item by item,
 * so callers that write only to slot i get results independent of the thread
 * count. Exceptions from the body are rethrown on the calling thread.
 */
template <typename Body>
void parallel_for(std::size_t count, Body&& body)
{
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), count);
    if (workers <= 1)
    {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&]() {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try
            {
                body(i);
            } catch (...)
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

/// Fixed row-band size used to tile images. Independent of the thread count.
inline constexpr int kTileRows = 8;

} // namespace mfe

#endif /* MFE_CORE_PARALLEL_HPP_ */
