#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gridhop::detail {

/// Runs body(begin, end) over `workers` contiguous blocks of [0, count).
template <typename Body>
void parallel_blocks(std::size_t count, int workers, Body&& body) {
    const std::size_t w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(count, 1));
    if (w == 1 || count < 2) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::exception_ptr> errors(w);
    {
        std::vector<std::jthread> threads;
        threads.reserve(w);
        for (std::size_t t = 0; t < w; ++t) {
            const std::size_t begin = count * t / w;
            const std::size_t end = count * (t + 1) / w;
            threads.emplace_back([&, t, begin, end] {
                try {
                    body(begin, end);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace gridhop::detail
