// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file parallel.hpp
 *  \brief Static-partition parallel loop; results are written per index so
 *  reductions stay in a fixed order regardless of the worker count.
 */

#pragma once

#include "debye/log.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace debye {

template <class F>
void parallel_for(int n, F&& body)
{
    int nt = std::min(thread_count(), n);
    if (nt <= 1) {
        for (int i = 0; i < n; i++) {
            body(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (int t = 0; t < nt; t++) {
        pool.emplace_back([&, t] {
            try {
                for (int i = t; i < n; i += nt) {
                    body(i);
                }
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    for (auto& e : errs) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace debye
