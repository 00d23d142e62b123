#pragma once

#include "ddfc/control_problem.hpp"
#include "ddfc/time_grid.hpp"

namespace ddfc {

/// Forward path X_i, i = anchor..N_T, with the standard Gaussian draws that produced it.
struct StatePath {
    std::size_t anchor = 0;
    Matrix states; // d x (N_T - anchor + 1)
    Matrix noises; // d x (N_T - anchor)

    auto state(std::size_t i) const { return states.col(static_cast<Index>(i - anchor)); }
    auto noise(std::size_t i) const { return noises.col(static_cast<Index>(i - anchor)); }
};

struct ObservationRecord {
    std::size_t index = 0;
    Vector value;
};

/// Scratch buffers for one Euler step; one per thread.
struct SdeWorkspace {
    explicit SdeWorkspace(const Dimensions& dims)
        : drift(dims.state), sigma(dims.state, dims.state)
    {
    }
    Vector drift;
    Matrix sigma;
};

/// x + b(t, x, u) dt + sigma(t, x) sqrt(dt) omega, written into `out`.
/// Throws DivergenceError if the result is not finite.
void euler_step(const ControlProblem& problem, double t, ConstVectorRef x, ConstVectorRef u, double dt,
                ConstVectorRef omega, VectorRef out, SdeWorkspace& ws);

Vector euler_step(const ControlProblem& problem, double t, ConstVectorRef x, ConstVectorRef u, double dt,
                  ConstVectorRef omega);

/// Euler-Maruyama path from x_start at node `start` under `schedule`, drawing omega_i from rng.
void simulate_path(const ControlProblem& problem, const TimeGrid& grid, std::size_t start, ConstVectorRef x_start,
                   const ControlSchedule& schedule, Rng& rng, StatePath& out, SdeWorkspace& ws);

StatePath simulate_path(const ControlProblem& problem, const TimeGrid& grid, std::size_t start,
                        ConstVectorRef x_start, const ControlSchedule& schedule, Rng& rng);

/// g(x_true) + eta, eta ~ N(0, Gamma).
Vector synthesize_observation(const ControlProblem& problem, ConstVectorRef x_true, Rng& rng);

} // namespace ddfc
