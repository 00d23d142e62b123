#include "ddfc/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace ddfc {

void OptimizerConfig::validate() const
{
    require(iterations >= 1, "optimizer: L must be >= 1");
    require(rho > 0.0 && std::isfinite(rho), "optimizer: rho must be > 0");
    require(decay >= 0.0, "optimizer: decay must be >= 0");
    require(particles >= 1, "optimizer: S must be >= 1");
    require(clip_norm >= 0.0, "optimizer: clip_norm must be >= 0");
}

void FullSolutionConfig::validate() const
{
    require(iterations >= 1, "full solution: iterations must be >= 1");
    require(samples >= 1, "full solution: K must be >= 1");
    require(paths >= 1, "full solution: Lambda must be >= 1");
    require(hi > lo, "full solution: domain must be non-degenerate");
    require(dx > 0.0, "full solution: dx must be > 0");
    require(rho > 0.0, "full solution: rho must be > 0");
}

void Diagnostics::merge(const Diagnostics& other)
{
    clip_events += other.clip_events;
    clamp_events += other.clamp_events;
    degenerate_updates += other.degenerate_updates;
    branch_crossings += other.branch_crossings;
    min_max_log_weight = std::min(min_max_log_weight, other.min_max_log_weight);
}

void pf_sgd_update(ControlSchedule& schedule, ConstMatrixRef gradients, double rho)
{
    require(gradients.rows() == schedule.values().rows() && gradients.cols() == schedule.values().cols(),
            "pf_sgd_update: gradients are not aligned with the schedule");
    schedule.values().noalias() -= rho * gradients;
}

namespace {

void project(const ControlProblem& problem, ControlSchedule& schedule)
{
    for (Index c = 0; c < schedule.values().cols(); ++c) {
        problem.project_control(schedule.values().col(c));
    }
}

void check_instant(const ControlProblem& problem, const TimeGrid& grid, std::size_t n, const ParticleCloud& cloud,
                   const ControlSchedule& init)
{
    require(n < grid.steps(), "instant must precede the terminal node");
    require(cloud.index == n, "particle cloud belongs to a different instant");
    require(cloud.size() >= 1 && cloud.particles.rows() == problem.dims().state, "particle cloud has wrong shape");
    require(init.anchor() == n, "initial schedule must be anchored at the instant");
    init.validate(grid.steps(), problem.dims().control);
}

} // namespace

InstantSolution solve_control_at_instant(const ControlProblem& problem, const TimeGrid& grid, std::size_t n,
                                         const ParticleCloud& cloud, const ControlSchedule& init,
                                         const OptimizerConfig& config, Rng& rng, Diagnostics* diagnostics)
{
    config.validate();
    check_instant(problem, grid, n, cloud, init);

    ControlSchedule schedule = init;
    StatePath path;
    AdjointPath adjoint;
    SdeWorkspace sde(problem.dims());
    BackwardWorkspace backward(problem.dims());
    Matrix gradient(problem.dims().control, schedule.values().cols());
    const auto S = static_cast<std::size_t>(cloud.size());

    for (std::size_t l = 0; l < config.iterations; ++l) {
        const std::size_t s = rng.index(S);
        try {
            simulate_path(problem, grid, n, cloud.particles.col(static_cast<Index>(s)), schedule, rng, path, sde);
            backward_single_path(problem, grid, path, schedule, adjoint, backward);
        } catch (const DivergenceError& e) {
            std::ostringstream os;
            os << "instant " << n << ", iteration " << l << ", particle " << s << ": " << e.what();
            throw DivergenceError(os.str());
        }
        gradient_along_path(problem, grid, path, adjoint, schedule, gradient);
        if (config.clip_norm > 0.0) {
            const double norm = gradient.norm();
            if (norm > config.clip_norm) {
                gradient *= config.clip_norm / norm;
                if (diagnostics) {
                    ++diagnostics->clip_events;
                }
            }
        }
        const double rho_l = config.rho / (1.0 + config.decay * static_cast<double>(l));
        pf_sgd_update(schedule, gradient, rho_l);
        project(problem, schedule);
    }
    Vector control = schedule.at(n);
    return {std::move(schedule), std::move(control)};
}

Matrix full_solution_gradient(const ControlProblem& problem, const TimeGrid& grid, const ParticleCloud& cloud,
                              const ControlSchedule& schedule, const GridSolution1D& solution, std::size_t paths,
                              Rng& rng, long* clamps)
{
    require(problem.dims().state == 1, "full_solution_gradient requires a one-dimensional state");
    require(paths >= 1, "full_solution_gradient: Lambda must be >= 1");
    const std::size_t n = schedule.anchor();
    require(solution.anchor() == n, "grid solution and schedule must share the anchor");
    const Index m = problem.dims().control;
    const Index len = schedule.values().cols();

    Matrix total = Matrix::Zero(m, len);
    StatePath path;
    SdeWorkspace sde(problem.dims());
    Matrix bu(1, m);
    Vector fu(m);
    long clamp_count = 0;
    for (Index s = 0; s < cloud.size(); ++s) {
        for (std::size_t lambda = 0; lambda < paths; ++lambda) {
            simulate_path(problem, grid, n, cloud.particles.col(s), schedule, rng, path, sde);
            for (Index c = 0; c < len; ++c) {
                const std::size_t i = n + static_cast<std::size_t>(c);
                double y = 0.0, z = 0.0;
                clamp_count += solution.interpolate(i, path.states(0, c), y, z) ? 1 : 0;
                problem.drift_u(grid.time(i), path.states.col(c), schedule.at(i), bu);
                problem.running_cost_u(grid.time(i), path.states.col(c), schedule.at(i), fu);
                total.col(c) += bu.row(0).transpose() * y + fu;
            }
        }
    }
    if (clamps) {
        *clamps += clamp_count;
    }
    return total / static_cast<double>(static_cast<std::size_t>(cloud.size()) * paths);
}

InstantSolution full_solution_gd(const ControlProblem& problem, const TimeGrid& grid, std::size_t n,
                                 const ParticleCloud& cloud, const ControlSchedule& init,
                                 const FullSolutionConfig& config, std::uint64_t seed, Execution exec,
                                 Diagnostics* diagnostics)
{
    config.validate();
    check_instant(problem, grid, n, cloud, init);
    require(problem.dims().state == 1, "full_solution_gd requires a one-dimensional state");

    ControlSchedule schedule = init;
    long clamps = 0;
    for (std::size_t k = 0; k < config.iterations; ++k) {
        const GridSolution1D solution = backward_grid_1d(problem, grid, config.lo, config.hi, config.dx, schedule,
                                                         config.samples, derive_seed(seed, {k, 0}), exec);
        clamps += solution.clamp_events;
        Rng rng(derive_seed(seed, {k, 1}));
        const Matrix gradient =
            full_solution_gradient(problem, grid, cloud, schedule, solution, config.paths, rng, &clamps);
        pf_sgd_update(schedule, gradient, config.rho);
        project(problem, schedule);
    }
    if (diagnostics) {
        diagnostics->clamp_events += clamps;
    }
    Vector control = schedule.at(n);
    return {std::move(schedule), std::move(control)};
}

FeedbackRunResult run_feedback_loop(const ControlProblem& problem, const TimeGrid& grid,
                                    const FeedbackConfig& config, std::uint64_t seed,
                                    const ReferenceController& reference)
{
    const Dimensions dims = problem.dims();
    const std::size_t N = grid.steps();
    const std::size_t sub = config.truth_substeps;
    require(sub >= 1, "truth_substeps must be >= 1");
    if (config.method == Method::pf_sgd) {
        config.optimizer.validate();
    } else {
        config.full.validate();
        require(dims.state == 1, "the full-solution method requires a one-dimensional state");
    }

    FeedbackRunResult result;
    result.controls = Matrix::Zero(dims.control, static_cast<Index>(N));
    const auto truth_len = static_cast<Index>(N * sub + 1);
    if (reference) {
        result.reference = Matrix::Zero(dims.control, static_cast<Index>(N));
        result.reference_states = Matrix(dims.state, truth_len);
    }
    result.truth_times = Vector(truth_len);
    result.true_states = Matrix(dims.state, truth_len);
    result.filter_means = Matrix(dims.state, static_cast<Index>(N + 1));
    result.observations = Matrix(dims.observation, static_cast<Index>(N));
    result.running_cost = Vector::Zero(truth_len);

    Vector x(dims.state);
    Rng initial_rng(stream_seed(seed, Stream::initial_truth));
    problem.sample_initial(initial_rng, x);

    ParticleCloud cloud;
    if (config.share_initial) {
        cloud.particles = x.replicate(1, config.optimizer.particles);
    } else {
        Rng cloud_rng(stream_seed(seed, Stream::initial_cloud));
        cloud = initial_cloud(problem, config.optimizer.particles, cloud_rng);
    }
    cloud.index = 0;

    Rng truth_rng(stream_seed(seed, Stream::truth_noise));
    Rng observation_rng(stream_seed(seed, Stream::observation_noise));
    Rng resample_rng(stream_seed(seed, Stream::filter_resample));

    result.truth_times[0] = grid.t0();
    result.true_states.col(0) = x;
    Vector x_ref = x, x_ref_next(dims.state), u_ref(dims.control);
    if (reference) {
        result.reference_states.col(0) = x_ref;
    }
    result.filter_means.col(0) = estimate_mean(cloud);
    if (config.record_clouds) {
        result.clouds.push_back(cloud.particles);
    }

    SdeWorkspace sde(dims);
    Vector omega(dims.state), x_next(dims.state);
    ControlSchedule schedule = ControlSchedule::zeros(0, N, dims.control);
    Diagnostics& diag = result.diagnostics;
    double running = 0.0;

    const auto started = std::chrono::steady_clock::now();
    for (std::size_t n = 0; n < N; ++n) {
        ControlSchedule init = (n == 0 || config.optimizer.init_mode == InitMode::zero)
                                   ? ControlSchedule::zeros(n, N, dims.control)
                                   : schedule.truncated(n);
        InstantSolution solved = [&] {
            if (config.method == Method::pf_sgd) {
                Rng rng(stream_seed(seed, Stream::optimizer, n));
                return solve_control_at_instant(problem, grid, n, cloud, init, config.optimizer, rng, &diag);
            }
            return full_solution_gd(problem, grid, n, cloud, init, config.full,
                                    stream_seed(seed, Stream::grid_solver, n), config.exec, &diag);
        }();
        schedule = std::move(solved.schedule);
        const Vector& u = solved.control;
        result.controls.col(static_cast<Index>(n)) = u;
        if (reference) {
            reference(n, x_ref, u_ref);
            result.reference.col(static_cast<Index>(n)) = u_ref;
        }

        const double h = grid.delta(n) / static_cast<double>(sub);
        for (std::size_t k = 0; k < sub; ++k) {
            const double t = grid.time(n) + h * static_cast<double>(k);
            running += problem.running_cost(t, x, u) * h;
            truth_rng.fill_normal(omega);
            euler_step(problem, t, x, u, h, omega, x_next, sde);
            if (problem.observation_branch_crossed(x, x_next)) {
                ++diag.branch_crossings;
            }
            x = x_next;
            const auto col = static_cast<Index>(n * sub + k + 1);
            if (reference) {
                euler_step(problem, t, x_ref, u_ref, h, omega, x_ref_next, sde);
                x_ref = x_ref_next;
                result.reference_states.col(col) = x_ref;
            }
            result.truth_times[col] = k + 1 == sub ? grid.time(n + 1) : t + h;
            result.true_states.col(col) = x;
            result.running_cost[col] = running;
        }

        const Vector observation = synthesize_observation(problem, x, observation_rng);
        result.observations.col(static_cast<Index>(n)) = observation;

        const Matrix predicted =
            predict(problem, grid, cloud, u, stream_seed(seed, Stream::filter_predict, n), config.exec);
        const WeightedCloud weighted = update_weights(problem, n + 1, predicted, observation, config.exec);
        if (weighted.degenerate) {
            ++diag.degenerate_updates;
        }
        diag.min_max_log_weight = std::min(diag.min_max_log_weight, weighted.max_log_weight);
        cloud = resample(weighted, resample_rng, config.resampling);
        result.filter_means.col(static_cast<Index>(n + 1)) = estimate_mean(cloud);
        if (config.record_clouds) {
            result.clouds.push_back(cloud.particles);
        }
    }
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    result.cost = running + problem.terminal_cost(x);
    result.terminal_distance = problem.terminal_distance(x);
    return result;
}

} // namespace ddfc
