#pragma once

#include "ddfc/sde.hpp"

#include <cstdint>
#include <functional>

namespace ddfc {

/**
 * Backward solution (Y_i, Z_i), i = anchor..N_T, of the adjoint equation along
 * one forward path. Y_i is a d-vector, Z_i a d x d matrix stored column-major
 * in column i - anchor of `Z`.
 */
struct AdjointPath {
    std::size_t anchor = 0;
    Index dim = 0;
    Matrix Y; // d x (N_T - anchor + 1)
    Matrix Z; // (d*d) x (N_T - anchor + 1)

    auto y(std::size_t i) const { return Y.col(static_cast<Index>(i - anchor)); }
    Eigen::Map<const Matrix> z(std::size_t i) const
    {
        return Eigen::Map<const Matrix>(Z.col(static_cast<Index>(i - anchor)).data(), dim, dim);
    }
};

struct BackwardWorkspace {
    explicit BackwardWorkspace(const Dimensions& dims)
        : bx(dims.state, dims.state), fx(dims.state), sxz(dims.state)
    {
    }
    Matrix bx;
    Vector fx;
    Vector sxz;
};

/**
 * Single-realization backward scheme driven by the path's retained noises:
 *
 *   Y_N = h_x(X_N)^T,  Z_N = 0
 *   Z_i = Y_{i+1} omega_i^T / sqrt(dt_i)
 *   Y_i = Y_{i+1} + [b_x^T Y_{i+1} + sigma_x^T Z_{i+1} + f_x^T](t_{i+1}, X_{i+1}, u_{i+1}) dt_i
 */
void backward_single_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                          const ControlSchedule& schedule, AdjointPath& out, BackwardWorkspace& ws);

AdjointPath backward_single_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                                 const ControlSchedule& schedule);

/// Values (Y_{i+1}, Z_{i+1}) at an arbitrary state on the next time level.
using NextLevelQuery = std::function<void(ConstVectorRef x, VectorRef y, MatrixRef z)>;

struct MonteCarloStep {
    Vector y;
    Matrix z;
};

/**
 * One K-sample Monte-Carlo backward step at node i = schedule.anchor() from x_i:
 * K one-step Euler samples X^k_{i+1}, next-level values from `next`, then the
 * sample-mean formulas for Y_i and Z_i.
 */
MonteCarloStep backward_monte_carlo(const ControlProblem& problem, const TimeGrid& grid, ConstVectorRef x_i,
                                    const ControlSchedule& schedule, std::size_t samples,
                                    const NextLevelQuery& next, Rng& rng);

/// Piecewise-linear (Y, Z) on a uniform 1-D grid, one row per time level.
class GridSolution1D {
public:
    GridSolution1D(std::size_t anchor, std::size_t steps, double lo, double hi, Index intervals);

    std::size_t anchor() const { return anchor_; }
    Index node_count() const { return y_.cols(); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double spacing() const { return dx_; }
    double node(Index j) const { return lo_ + dx_ * static_cast<double>(j); }

    double& y(std::size_t i, Index j) { return y_(row(i), j); }
    double& z(std::size_t i, Index j) { return z_(row(i), j); }
    double y(std::size_t i, Index j) const { return y_(row(i), j); }
    double z(std::size_t i, Index j) const { return z_(row(i), j); }

    /// Linear interpolation on level i; states outside [lo, hi] are clamped to
    /// the boundary and reported through the return value.
    bool interpolate(std::size_t i, double x, double& y, double& z) const;

    /// Clamp events encountered while building the solution.
    long clamp_events = 0;

private:
    Index row(std::size_t i) const { return static_cast<Index>(i - anchor_); }

    std::size_t anchor_;
    double lo_;
    double hi_;
    double dx_;
    Matrix y_;
    Matrix z_;
};

/**
 * Backward Monte-Carlo solution on the spatial grid for time levels
 * schedule.anchor()..N_T (d = 1 only). The spacing is shrunk, if needed, so
 * that a whole number of intervals spans the domain. Node j on level i draws
 * from stream derive(seed, i, j).
 */
GridSolution1D backward_grid_1d(const ControlProblem& problem, const TimeGrid& grid, double lo, double hi,
                                double dx, const ControlSchedule& schedule, std::size_t samples,
                                std::uint64_t seed, Execution exec = Execution::serial);

/// G_i = b_u(t_i, X_i, u_i)^T Y_i + f_u(t_i, X_i, u_i)^T for i = anchor..N_T; m x (N_T - anchor + 1).
void gradient_along_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                         const AdjointPath& adjoint, const ControlSchedule& schedule, MatrixRef out);

Matrix gradient_along_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                           const AdjointPath& adjoint, const ControlSchedule& schedule);

namespace kernels {

void grid_level_serial(const ControlProblem& problem, const TimeGrid& grid, std::size_t level,
                       const ControlSchedule& schedule, std::size_t samples, std::uint64_t seed,
                       GridSolution1D& solution, long& clamps);
void grid_level_omp(const ControlProblem& problem, const TimeGrid& grid, std::size_t level,
                    const ControlSchedule& schedule, std::size_t samples, std::uint64_t seed,
                    GridSolution1D& solution, long& clamps);

} // namespace kernels

} // namespace ddfc
