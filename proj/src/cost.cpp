#include "ddfc/cost.hpp"

namespace ddfc {

namespace {

void check_lengths(const ControlProblem& problem, const TimeGrid& grid, ConstMatrixRef states,
                   ConstMatrixRef controls)
{
    const auto n = static_cast<Index>(grid.steps());
    require(states.rows() == problem.dims().state && states.cols() == n + 1,
            "cost: path must hold N_T+1 states of dimension d");
    require(controls.rows() == problem.dims().control && controls.cols() == n,
            "cost: controls must hold N_T values of dimension m");
}

} // namespace

Vector running_cost_trajectory(const ControlProblem& problem, const TimeGrid& grid, ConstMatrixRef states,
                               ConstMatrixRef controls)
{
    check_lengths(problem, grid, states, controls);
    Vector acc(states.cols());
    acc[0] = 0.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
        const auto c = static_cast<Index>(i);
        acc[c + 1] = acc[c] + problem.running_cost(grid.time(i), states.col(c), controls.col(c)) * grid.delta(i);
    }
    return acc;
}

double evaluate_cost(const ControlProblem& problem, const TimeGrid& grid, ConstMatrixRef states,
                     ConstMatrixRef controls)
{
    const Vector acc = running_cost_trajectory(problem, grid, states, controls);
    return acc[acc.size() - 1] + problem.terminal_cost(states.col(states.cols() - 1));
}

} // namespace ddfc
