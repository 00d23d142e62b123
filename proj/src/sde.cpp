#include "ddfc/sde.hpp"

#include <cmath>
#include <sstream>

namespace ddfc {

void euler_step(const ControlProblem& problem, double t, ConstVectorRef x, ConstVectorRef u, double dt,
                ConstVectorRef omega, VectorRef out, SdeWorkspace& ws)
{
    require(dt > 0.0, "euler_step needs dt > 0");
    problem.drift(t, x, u, ws.drift);
    problem.diffusion(t, x, ws.sigma);
    out.noalias() = x + ws.drift * dt;
    out.noalias() += ws.sigma * omega * std::sqrt(dt);
    if (!out.allFinite()) {
        std::ostringstream os;
        os << "simulation diverged at t=" << t << " x=" << format_vector(x) << " u=" << format_vector(u);
        throw DivergenceError(os.str());
    }
}

Vector euler_step(const ControlProblem& problem, double t, ConstVectorRef x, ConstVectorRef u, double dt,
                  ConstVectorRef omega)
{
    require(x.size() == problem.dims().state && omega.size() == problem.dims().state &&
                u.size() == problem.dims().control,
            "euler_step shape mismatch");
    SdeWorkspace ws(problem.dims());
    Vector out(problem.dims().state);
    euler_step(problem, t, x, u, dt, omega, out, ws);
    return out;
}

void simulate_path(const ControlProblem& problem, const TimeGrid& grid, std::size_t start, ConstVectorRef x_start,
                   const ControlSchedule& schedule, Rng& rng, StatePath& out, SdeWorkspace& ws)
{
    const Index d = problem.dims().state;
    require(schedule.anchor() == start, "simulate_path: schedule anchor must equal the start index");
    require(start <= grid.steps() && schedule.last_index() == grid.steps(),
            "simulate_path: schedule must cover start..N_T");
    require(x_start.size() == d, "simulate_path: start state has wrong dimension");

    const auto len = static_cast<Index>(grid.steps() - start);
    out.anchor = start;
    if (out.states.rows() != d || out.states.cols() != len + 1) {
        out.states.resize(d, len + 1);
    }
    if (out.noises.rows() != d || out.noises.cols() != len) {
        out.noises.resize(d, len);
    }
    out.states.col(0) = x_start;
    for (Index c = 0; c < len; ++c) {
        const std::size_t i = start + static_cast<std::size_t>(c);
        for (Index k = 0; k < d; ++k) {
            out.noises(k, c) = rng.normal();
        }
        euler_step(problem, grid.time(i), out.states.col(c), schedule.at(i), grid.delta(i), out.noises.col(c),
                   out.states.col(c + 1), ws);
    }
}

StatePath simulate_path(const ControlProblem& problem, const TimeGrid& grid, std::size_t start,
                        ConstVectorRef x_start, const ControlSchedule& schedule, Rng& rng)
{
    StatePath path;
    SdeWorkspace ws(problem.dims());
    simulate_path(problem, grid, start, x_start, schedule, rng, path, ws);
    return path;
}

Vector synthesize_observation(const ControlProblem& problem, ConstVectorRef x_true, Rng& rng)
{
    require(x_true.size() == problem.dims().state, "synthesize_observation: state has wrong dimension");
    const Index ell = problem.dims().observation;
    Vector value(ell);
    problem.observe(x_true, value);
    if (!problem.noiseless_observations()) {
        Vector eta(ell);
        rng.fill_normal(eta);
        value += problem.observation_noise_factor() * eta;
    }
    return value;
}

} // namespace ddfc
