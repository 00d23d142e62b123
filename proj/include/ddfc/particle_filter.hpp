#pragma once

#include "ddfc/sde.hpp"

#include <cstdint>

namespace ddfc {

/// S equally weighted samples of p(X_{t_n} | F^M_{t_n}); one particle per column.
struct ParticleCloud {
    std::size_t index = 0;
    Matrix particles; // d x S

    Index size() const { return particles.cols(); }
};

/// Predicted particles with unnormalized log importance weights.
struct WeightedCloud {
    std::size_t index = 0;
    Matrix particles;
    Vector log_weights;
    /// Largest log weight before the max-shift; very negative values mean every
    /// particle is far from the observation.
    double max_log_weight = 0.0;
    bool degenerate = false;

    /// exp(log_w - max) / sum; sums to one.
    Vector normalized_weights() const;
};

enum class ResamplingScheme { multinomial, systematic };

/// Pre-shift log-weight floor below which update_weights flags a degenerate cloud.
inline constexpr double kDegeneracyFloor = -700.0;

/**
 * One Euler step per particle under the deployed control. The noise for the
 * whole cloud is drawn up front from Rng(seed), column s for particle s, so
 * the serial and OpenMP kernels agree bitwise.
 */
Matrix predict(const ControlProblem& problem, const TimeGrid& grid, const ParticleCloud& cloud,
               ConstVectorRef applied_control, std::uint64_t seed, Execution exec = Execution::serial);

/// log w_s = -1/2 (M - g(x_s))^T Gamma^{-1} (M - g(x_s)).
WeightedCloud update_weights(const ControlProblem& problem, std::size_t index, const Matrix& predicted,
                             ConstVectorRef observation, Execution exec = Execution::serial);

ParticleCloud resample(const WeightedCloud& weighted, Rng& rng,
                       ResamplingScheme scheme = ResamplingScheme::multinomial);

Vector estimate_mean(const ParticleCloud& cloud);

/// Draws S particles from the problem's initial distribution.
ParticleCloud initial_cloud(const ControlProblem& problem, Index count, Rng& rng);

namespace kernels {

// Serial references and OpenMP kernels behind predict / update_weights.
void predict_serial(const ControlProblem& problem, double t, double dt, const Matrix& particles,
                    ConstVectorRef control, const Matrix& omega, Matrix& out);
void predict_omp(const ControlProblem& problem, double t, double dt, const Matrix& particles,
                 ConstVectorRef control, const Matrix& omega, Matrix& out);
void log_likelihood_serial(const ControlProblem& problem, const Matrix& particles, ConstVectorRef observation,
                           Vector& out);
void log_likelihood_omp(const ControlProblem& problem, const Matrix& particles, ConstVectorRef observation,
                        Vector& out);

} // namespace kernels

} // namespace ddfc
