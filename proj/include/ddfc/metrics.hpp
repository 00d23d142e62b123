#pragma once

#include "ddfc/types.hpp"

#include <vector>

namespace ddfc {

/// sqrt( (1/M) sum_m sum_n |U_hat_{m,n} - U_{m,n}|^2 ); one m x N_T matrix per repeat.
double accumulated_rmse(const std::vector<Matrix>& estimated, const std::vector<Matrix>& reference);

/// Repeat average of accumulated running-cost trajectories sampled on a common grid.
Vector avg_cost_trajectory(const std::vector<Vector>& running_costs);

/// Accumulated left-point running cost of f values sampled at the nodes:
/// out_0 = 0, out_{i+1} = out_i + f_i dt_i.
Vector accumulate_running_cost(ConstVectorRef integrand, ConstVectorRef deltas);

double mean(const std::vector<double>& values);

/// Standard error of the mean (0 for fewer than two values).
double standard_error(const std::vector<double>& values);

} // namespace ddfc
