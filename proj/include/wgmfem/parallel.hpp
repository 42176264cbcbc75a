#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace wgmfem {

/// Thread budget for element loops: WGMFEM_NUM_THREADS if set, otherwise 1.
inline int thread_count() {
    if (const char* env = std::getenv("WGMFEM_NUM_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (...) {
            return 1;
        }
    }
    return 1;
}

/// Runs body(i) for i in [0, n). Each index is visited by exactly one
/// thread, so bodies writing only to slot i are race-free.
template <class Body>
void parallel_for(int n, Body&& body) {
    const int nt = std::min(thread_count(), std::max(n, 1));
    if (nt <= 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> workers;
    workers.reserve(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
        workers.emplace_back([&, t] {
            for (int i = t; i < n; i += nt) body(i);
        });
    }
}

} // namespace wgmfem
