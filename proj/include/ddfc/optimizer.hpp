#pragma once

#include "ddfc/fbsde.hpp"
#include "ddfc/particle_filter.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ddfc {

enum class InitMode { zero, warm_start };
enum class Method { pf_sgd, full_solution };

struct OptimizerConfig {
    std::size_t iterations = 1000; // L
    double rho = 0.1;
    double decay = 0.0; // rho_l = rho / (1 + decay * l)
    InitMode init_mode = InitMode::warm_start;
    Index particles = 500; // S
    std::uint64_t seed = 0;
    /// Gradient norm cap; 0 disables clipping.
    double clip_norm = 0.0;

    void validate() const;
};

struct FullSolutionConfig {
    std::size_t iterations = 100;
    std::size_t samples = 100; // K
    std::size_t paths = 10;    // Lambda
    double lo = 3.0;
    double hi = 6.0;
    double dx = 0.1;
    double rho = 0.5;

    void validate() const;
};

/// Counters for events that deviate from the plain scheme or signal trouble.
struct Diagnostics {
    long clip_events = 0;
    long clamp_events = 0;
    long degenerate_updates = 0;
    long branch_crossings = 0;
    double min_max_log_weight = 0.0;

    void merge(const Diagnostics& other);
};

/// values[i] -= rho * G_i for every column.
void pf_sgd_update(ControlSchedule& schedule, ConstMatrixRef gradients, double rho);

struct InstantSolution {
    ControlSchedule schedule;
    Vector control; // first entry of the schedule
};

/**
 * L stochastic-gradient iterations at instant n: draw a particle uniformly,
 * simulate one path under the current schedule, solve the adjoint backward
 * along it and step against the single-path gradient.
 */
InstantSolution solve_control_at_instant(const ControlProblem& problem, const TimeGrid& grid, std::size_t n,
                                         const ParticleCloud& cloud, const ControlSchedule& init,
                                         const OptimizerConfig& config, Rng& rng,
                                         Diagnostics* diagnostics = nullptr);

/// S x Lambda averaged gradient along paths started from every particle, with
/// Y read from the grid solution.
Matrix full_solution_gradient(const ControlProblem& problem, const TimeGrid& grid, const ParticleCloud& cloud,
                              const ControlSchedule& schedule, const GridSolution1D& solution,
                              std::size_t paths, Rng& rng, long* clamps = nullptr);

/// Full gradient descent at instant n with grid backward solves (d = 1).
InstantSolution full_solution_gd(const ControlProblem& problem, const TimeGrid& grid, std::size_t n,
                                 const ParticleCloud& cloud, const ControlSchedule& init,
                                 const FullSolutionConfig& config, std::uint64_t seed,
                                 Execution exec = Execution::serial, Diagnostics* diagnostics = nullptr);

struct FeedbackConfig {
    Method method = Method::pf_sgd;
    OptimizerConfig optimizer;
    FullSolutionConfig full;
    ResamplingScheme resampling = ResamplingScheme::multinomial;
    /// Euler substeps per interval for the hidden truth (control held constant).
    std::size_t truth_substeps = 1;
    /// Start every particle at the truth's initial state instead of an independent draw.
    bool share_initial = false;
    Execution exec = Execution::serial;
    bool record_clouds = false;
};

/// Full-state feedback oracle u = k(n, x). When supplied, the loop also runs a
/// reference process under this feedback, driven by the truth's Brownian increments.
using ReferenceController = std::function<void(std::size_t n, ConstVectorRef x, VectorRef u)>;

struct FeedbackRunResult {
    Matrix controls;     // m x N_T, deployed u*_{t_n}
    Matrix reference;    // m x N_T when a reference controller is given, else empty
    Matrix reference_states; // d x (N_T * substeps + 1), same condition
    Vector truth_times;  // N_T * substeps + 1
    Matrix true_states;  // d x (N_T * substeps + 1)
    Matrix filter_means; // d x (N_T + 1)
    Matrix observations; // ell x N_T, M_{t_1}..M_{t_N}
    Vector running_cost; // accumulated running cost on truth_times
    double cost = 0.0;   // running cost plus terminal cost
    double wall_time = 0.0;
    std::optional<double> terminal_distance;
    Diagnostics diagnostics;
    std::vector<Matrix> clouds; // per instant when recorded
};

/// Algorithm-level closed loop: optimize, act on the hidden truth, observe, filter.
FeedbackRunResult run_feedback_loop(const ControlProblem& problem, const TimeGrid& grid,
                                    const FeedbackConfig& config, std::uint64_t seed,
                                    const ReferenceController& reference = {});

} // namespace ddfc
