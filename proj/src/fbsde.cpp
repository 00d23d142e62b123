#include "ddfc/fbsde.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace ddfc {

void backward_single_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                          const ControlSchedule& schedule, AdjointPath& out, BackwardWorkspace& ws)
{
    const Index d = problem.dims().state;
    const std::size_t n = path.anchor;
    const std::size_t last = grid.steps();
    require(schedule.anchor() == n && schedule.last_index() == last,
            "backward_single_path: schedule and path must share the anchor");
    require(path.states.cols() == static_cast<Index>(last - n + 1) && path.noises.cols() == path.states.cols() - 1,
            "backward_single_path: path does not reach N_T or lacks its noises");

    const Index len = path.states.cols();
    out.anchor = n;
    out.dim = d;
    if (out.Y.rows() != d || out.Y.cols() != len) {
        out.Y.resize(d, len);
    }
    if (out.Z.rows() != d * d || out.Z.cols() != len) {
        out.Z.resize(d * d, len);
    }

    problem.terminal_cost_x(path.states.col(len - 1), out.Y.col(len - 1));
    out.Z.col(len - 1).setZero();
    const bool with_sigma_x = problem.state_dependent_diffusion();

    for (Index c = len - 2; c >= 0; --c) {
        const std::size_t i = n + static_cast<std::size_t>(c);
        const double dt = grid.delta(i);
        const double t_next = grid.time(i + 1);
        auto x_next = path.states.col(c + 1);
        auto u_next = schedule.at(i + 1);
        auto y_next = out.Y.col(c + 1);

        Eigen::Map<Matrix> z_i(out.Z.col(c).data(), d, d);
        z_i.noalias() = y_next * path.noises.col(c).transpose() / std::sqrt(dt);

        problem.drift_x(t_next, x_next, u_next, ws.bx);
        problem.running_cost_x(t_next, x_next, u_next, ws.fx);
        auto y_i = out.Y.col(c);
        y_i.noalias() = ws.bx.transpose() * y_next;
        y_i += ws.fx;
        if (with_sigma_x) {
            Eigen::Map<const Matrix> z_next(out.Z.col(c + 1).data(), d, d);
            problem.diffusion_x_contract(t_next, x_next, z_next, ws.sxz);
            y_i += ws.sxz;
        }
        y_i *= dt;
        y_i += y_next;

        if (!y_i.allFinite() || !z_i.allFinite()) {
            std::ostringstream os;
            os << "backward recursion diverged at step " << i;
            throw DivergenceError(os.str());
        }
    }
}

AdjointPath backward_single_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                                 const ControlSchedule& schedule)
{
    AdjointPath out;
    BackwardWorkspace ws(problem.dims());
    backward_single_path(problem, grid, path, schedule, out, ws);
    return out;
}

MonteCarloStep backward_monte_carlo(const ControlProblem& problem, const TimeGrid& grid, ConstVectorRef x_i,
                                    const ControlSchedule& schedule, std::size_t samples,
                                    const NextLevelQuery& next, Rng& rng)
{
    require(samples >= 1, "backward_monte_carlo: K must be >= 1");
    const std::size_t i = schedule.anchor();
    require(i < grid.steps() && schedule.last_index() == grid.steps(),
            "backward_monte_carlo: anchor must be before the terminal node");
    const Index d = problem.dims().state;
    require(x_i.size() == d, "backward_monte_carlo: state dimension mismatch");

    const double dt = grid.delta(i);
    const double t_next = grid.time(i + 1);
    const auto u_i = schedule.at(i);
    const auto u_next = schedule.at(i + 1);

    SdeWorkspace sde(problem.dims());
    BackwardWorkspace ws(problem.dims());
    Vector omega(d), x_next(d), y_next(d);
    Matrix z_next(d, d);

    MonteCarloStep out{Vector::Zero(d), Matrix::Zero(d, d)};
    Vector rhs = Vector::Zero(d);
    for (std::size_t k = 0; k < samples; ++k) {
        rng.fill_normal(omega);
        euler_step(problem, grid.time(i), x_i, u_i, dt, omega, x_next, sde);
        next(x_next, y_next, z_next);

        problem.drift_x(t_next, x_next, u_next, ws.bx);
        problem.running_cost_x(t_next, x_next, u_next, ws.fx);
        problem.diffusion_x_contract(t_next, x_next, z_next, ws.sxz);

        out.y += y_next;
        rhs.noalias() += ws.bx.transpose() * y_next;
        rhs += ws.sxz + ws.fx;
        out.z.noalias() += y_next * omega.transpose() * std::sqrt(dt);
    }
    const double inv_k = 1.0 / static_cast<double>(samples);
    out.y = out.y * inv_k + rhs * (dt * inv_k);
    out.z *= inv_k / dt;
    if (!out.y.allFinite() || !out.z.allFinite()) {
        std::ostringstream os;
        os << "Monte-Carlo backward step diverged at step " << i;
        throw DivergenceError(os.str());
    }
    return out;
}

GridSolution1D::GridSolution1D(std::size_t anchor, std::size_t steps, double lo, double hi, Index intervals)
    : anchor_(anchor), lo_(lo), hi_(hi), dx_((hi - lo) / static_cast<double>(intervals)),
      y_(Matrix::Zero(static_cast<Index>(steps - anchor + 1), intervals + 1)),
      z_(Matrix::Zero(static_cast<Index>(steps - anchor + 1), intervals + 1))
{
    require(intervals >= 1, "GridSolution1D needs at least two nodes");
    require(hi > lo, "GridSolution1D needs a non-degenerate domain");
}

bool GridSolution1D::interpolate(std::size_t i, double x, double& y, double& z) const
{
    const Index r = row(i);
    const Index last = y_.cols() - 1;
    bool clamped = false;
    if (!(x > lo_)) {
        clamped = x < lo_;
        y = y_(r, 0);
        z = z_(r, 0);
        return clamped;
    }
    if (!(x < hi_)) {
        clamped = x > hi_;
        y = y_(r, last);
        z = z_(r, last);
        return clamped;
    }
    const double pos = (x - lo_) / dx_;
    const Index j = std::min<Index>(static_cast<Index>(pos), last - 1);
    const double w = pos - static_cast<double>(j);
    y = (1.0 - w) * y_(r, j) + w * y_(r, j + 1);
    z = (1.0 - w) * z_(r, j) + w * z_(r, j + 1);
    return false;
}

namespace kernels {

namespace {

long grid_node(const ControlProblem& problem, const TimeGrid& grid, std::size_t level,
               const ControlSchedule& schedule, std::size_t samples, std::uint64_t seed, GridSolution1D& sol,
               Index j)
{
    const double dt = grid.delta(level);
    const double sqrt_dt = std::sqrt(dt);
    const double t = grid.time(level);
    const double t_next = grid.time(level + 1);
    const auto u = schedule.at(level);
    const auto u_next = schedule.at(level + 1);

    Vector x(1), x_next(1), b(1), fx(1), sxz(1);
    Matrix sigma(1, 1), bx(1, 1), zmat(1, 1);
    x[0] = sol.node(j);
    problem.drift(t, x, u, b);
    problem.diffusion(t, x, sigma);

    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(level), static_cast<std::uint64_t>(j)}));
    long clamps = 0;
    double sum_y = 0.0, sum_rhs = 0.0, sum_z = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double omega = rng.normal();
        x_next[0] = x[0] + b[0] * dt + sigma(0, 0) * sqrt_dt * omega;
        double y_next = 0.0, z_next = 0.0;
        clamps += sol.interpolate(level + 1, x_next[0], y_next, z_next) ? 1 : 0;
        zmat(0, 0) = z_next;
        problem.drift_x(t_next, x_next, u_next, bx);
        problem.running_cost_x(t_next, x_next, u_next, fx);
        problem.diffusion_x_contract(t_next, x_next, zmat, sxz);
        sum_y += y_next;
        sum_rhs += bx(0, 0) * y_next + sxz[0] + fx[0];
        sum_z += y_next * omega;
    }
    const double inv_k = 1.0 / static_cast<double>(samples);
    const double y = sum_y * inv_k + dt * sum_rhs * inv_k;
    const double z = sum_z * inv_k / sqrt_dt;
    if (!std::isfinite(y) || !std::isfinite(z)) {
        std::ostringstream os;
        os << "grid backward solve diverged at time index " << level << ", node " << j;
        throw DivergenceError(os.str());
    }
    sol.y(level, j) = y;
    sol.z(level, j) = z;
    return clamps;
}

} // namespace

void grid_level_serial(const ControlProblem& problem, const TimeGrid& grid, std::size_t level,
                       const ControlSchedule& schedule, std::size_t samples, std::uint64_t seed,
                       GridSolution1D& solution, long& clamps)
{
    for (Index j = 0; j < solution.node_count(); ++j) {
        clamps += grid_node(problem, grid, level, schedule, samples, seed, solution, j);
    }
}

void grid_level_omp(const ControlProblem& problem, const TimeGrid& grid, std::size_t level,
                    const ControlSchedule& schedule, std::size_t samples, std::uint64_t seed,
                    GridSolution1D& solution, long& clamps)
{
    std::exception_ptr error;
    long total = 0;
#pragma omp parallel for schedule(static) reduction(+ : total)
    for (Index j = 0; j < solution.node_count(); ++j) {
        try {
            total += grid_node(problem, grid, level, schedule, samples, seed, solution, j);
        } catch (...) {
#pragma omp critical(ddfc_grid_error)
            if (!error) {
                error = std::current_exception();
            }
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
    clamps += total;
}

} // namespace kernels

GridSolution1D backward_grid_1d(const ControlProblem& problem, const TimeGrid& grid, double lo, double hi,
                                double dx, const ControlSchedule& schedule, std::size_t samples,
                                std::uint64_t seed, Execution exec)
{
    require(problem.dims().state == 1, "backward_grid_1d requires a one-dimensional state");
    require(hi > lo && dx > 0.0, "backward_grid_1d needs a non-degenerate domain and dx > 0");
    require(samples >= 1, "backward_grid_1d: K must be >= 1");
    require(schedule.last_index() == grid.steps(), "backward_grid_1d: schedule must cover anchor..N_T");

    const auto intervals = static_cast<Index>(std::ceil((hi - lo) / dx - 1e-9));
    GridSolution1D sol(schedule.anchor(), grid.steps(), lo, hi, intervals);

    const std::size_t last = grid.steps();
    Vector x(1), hx(1);
    for (Index j = 0; j < sol.node_count(); ++j) {
        x[0] = sol.node(j);
        problem.terminal_cost_x(x, hx);
        sol.y(last, j) = hx[0];
        sol.z(last, j) = 0.0;
    }

    long clamps = 0;
    for (std::size_t level = last; level-- > schedule.anchor();) {
        if (exec == Execution::parallel) {
            kernels::grid_level_omp(problem, grid, level, schedule, samples, seed, sol, clamps);
        } else {
            kernels::grid_level_serial(problem, grid, level, schedule, samples, seed, sol, clamps);
        }
    }
    sol.clamp_events = clamps;
    return sol;
}

void gradient_along_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                         const AdjointPath& adjoint, const ControlSchedule& schedule, MatrixRef out)
{
    const Index d = problem.dims().state;
    const Index m = problem.dims().control;
    require(path.anchor == adjoint.anchor && path.anchor == schedule.anchor(),
            "gradient_along_path: path, adjoint and schedule must share the anchor");
    require(adjoint.Y.cols() == path.states.cols() && out.cols() == path.states.cols() && out.rows() == m,
            "gradient_along_path: misaligned inputs");

    Matrix bu(d, m);
    Vector fu(m);
    for (Index c = 0; c < path.states.cols(); ++c) {
        const std::size_t i = path.anchor + static_cast<std::size_t>(c);
        problem.drift_u(grid.time(i), path.states.col(c), schedule.at(i), bu);
        problem.running_cost_u(grid.time(i), path.states.col(c), schedule.at(i), fu);
        out.col(c).noalias() = bu.transpose() * adjoint.Y.col(c);
        out.col(c) += fu;
    }
}

Matrix gradient_along_path(const ControlProblem& problem, const TimeGrid& grid, const StatePath& path,
                           const AdjointPath& adjoint, const ControlSchedule& schedule)
{
    Matrix out(problem.dims().control, path.states.cols());
    gradient_along_path(problem, grid, path, adjoint, schedule, out);
    return out;
}

} // namespace ddfc
