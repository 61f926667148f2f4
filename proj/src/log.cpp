// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file log.cpp
 *  \brief Warning sink and worker-count setting.
 */

#include "debye/log.hpp"

#include "debye/errors.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>

namespace debye {

namespace {
std::mutex log_mutex;
std::vector<std::string> warnings;
bool quiet_mode = false;
std::atomic<int> workers{1};
std::atomic<bool> strict{false};
} // namespace

void warn(const std::string& msg)
{
    std::lock_guard<std::mutex> lock(log_mutex);
    warnings.push_back(msg);
    if (!quiet_mode) {
        std::cerr << "warning: " << msg << "\n";
    }
}

std::vector<std::string> recorded_warnings()
{
    std::lock_guard<std::mutex> lock(log_mutex);
    return warnings;
}

void clear_warnings()
{
    std::lock_guard<std::mutex> lock(log_mutex);
    warnings.clear();
}

void set_quiet(bool q)
{
    std::lock_guard<std::mutex> lock(log_mutex);
    quiet_mode = q;
}

void regime_warning(const std::string& msg)
{
    if (strict) {
        throw RegimeViolation(msg);
    }
    warn(msg);
}

void set_strict_regime(bool s)
{
    strict = s;
}

bool strict_regime()
{
    return strict;
}

void set_thread_count(int n)
{
    workers = std::max(1, n);
}

int thread_count()
{
    return workers;
}

} // namespace debye
