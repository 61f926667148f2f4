// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file log.hpp
 *  \brief Warning sink shared by all stages.
 */

#pragma once

#include <string>
#include <vector>

namespace debye {

/// Record a warning; printed to stderr unless quiet mode is on.
void warn(const std::string& msg);
/// Warnings recorded since the last call to clear_warnings().
std::vector<std::string> recorded_warnings();
void clear_warnings();
void set_quiet(bool quiet);

/// Outside the asymptotic regime: a warning, or RegimeViolation when strict mode is on.
void regime_warning(const std::string& msg);
void set_strict_regime(bool strict);
bool strict_regime();

/// Worker cap for fiber-parallel loops (>= 1).
void set_thread_count(int n);
int thread_count();

} // namespace debye
