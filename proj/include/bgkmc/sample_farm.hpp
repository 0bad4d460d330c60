#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <optional>
#include <thread>
#include <type_traits>
#include <vector>

namespace bgkmc {

inline unsigned resolve_threads(unsigned requested)
{
    if (requested > 0)
        return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * @brief Evaluates fn(0) .. fn(n-1) on a pool of worker threads.
 *
 * Results are stored by index, so the output never depends on scheduling.
 * If any call throws, indices above the lowest failure are skipped and the
 * exception of the lowest failing index is rethrown.
 */
template <class F>
auto parallel_map(std::size_t n, unsigned threads, F&& fn)
    -> std::vector<std::invoke_result_t<F&, std::size_t>>
{
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::optional<R>> slots(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> first_failure{n};

    auto worker = [&] {
        for (;;)
        {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n)
                return;
            if (i > first_failure.load(std::memory_order_relaxed))
                continue;
            try
            {
                slots[i].emplace(fn(i));
            }
            catch (...)
            {
                errors[i] = std::current_exception();
                std::size_t cur = first_failure.load(std::memory_order_relaxed);
                while (i < cur && !first_failure.compare_exchange_weak(cur, i, std::memory_order_relaxed))
                {
                }
            }
        }
    };

    const unsigned nt = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), n));
    if (nt <= 1)
        worker();
    else
    {
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (unsigned t = 0; t < nt; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(n);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

} // namespace bgkmc
