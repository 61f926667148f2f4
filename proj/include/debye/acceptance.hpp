// debye-forge
// SPDX-License-Identifier: BSD-3-Clause

/** \file acceptance.hpp
 *  \brief The thirteen acceptance checks on the Mathieu crystal phi_per = 2 cos x,
 *  Omega = [0, 2 pi), E_cut = 200, 16 k-points unless noted. Shared by `debye-forge verify`
 *  and the acceptance test binary.
 */

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace debye {

struct CriterionResult
{
    int id{0};
    std::string title;
    bool pass{false};
    std::string detail;
    double seconds{0};
};

struct AcceptanceOptions
{
    std::vector<int> only;  ///< empty: all
    unsigned seed{1};
    std::function<void(const CriterionResult&)> on_result;
};

constexpr int acceptance_count = 13;

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt = {});

/// "PASS  7  title: detail (1.2 s)"
std::string format_result(const CriterionResult& r);

} // namespace debye
