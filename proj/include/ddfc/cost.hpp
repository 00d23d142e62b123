#pragma once

#include "ddfc/control_problem.hpp"
#include "ddfc/time_grid.hpp"

namespace ddfc {

/// Single-path cost sum_i f(t_i, X_i, u_i) dt_i + h(X_N), left-point rule.
/// `states` is d x (N+1), `controls` is m x N.
double evaluate_cost(const ControlProblem& problem, const TimeGrid& grid, ConstMatrixRef states,
                     ConstMatrixRef controls);

/// Running part only, accumulated: entry k holds sum_{i<k} f(t_i, X_i, u_i) dt_i.
Vector running_cost_trajectory(const ControlProblem& problem, const TimeGrid& grid, ConstMatrixRef states,
                               ConstMatrixRef controls);

} // namespace ddfc
