#pragma once

#include "ddfc/control_problem.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ddfc {

/// Maximum relative error of each analytic partial against central finite differences.
struct PartialsReport {
    static constexpr double tolerance = 1e-4;

    std::map<std::string, double> max_error; // keys: b_x, b_u, sigma_x, f_x, f_u, h_x
    std::vector<std::string> failures;       // non-finite evaluations, with the offending point

    bool passed() const;
    std::vector<std::string> flagged() const; // partials above tolerance
};

/// Errors at one (t, x, u). Relative error is ||analytic - fd||_max / max(1, ||fd||_max),
/// with central differences of step 1e-5 * max(1, |x_k|).
std::map<std::string, double> partial_errors_at(const ControlProblem& problem, double t, ConstVectorRef x,
                                                ConstVectorRef u);

/// Samples `trials` points: t ~ U[t_lo, t_hi], x = X_0 sample + N(0, I), u ~ N(0, I).
PartialsReport check_partials(const ControlProblem& problem, int trials, std::uint64_t seed, double t_lo = 0.0,
                              double t_hi = 1.0);

} // namespace ddfc
