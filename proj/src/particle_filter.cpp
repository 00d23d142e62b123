#include "ddfc/particle_filter.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

namespace ddfc {

namespace kernels {

namespace {

void predict_one(const ControlProblem& problem, double t, double dt, const Matrix& particles,
                 ConstVectorRef control, const Matrix& omega, Matrix& out, Index s, SdeWorkspace& ws)
{
    try {
        euler_step(problem, t, particles.col(s), control, dt, omega.col(s), out.col(s), ws);
    } catch (const DivergenceError& e) {
        std::ostringstream os;
        os << "particle " << s << ": " << e.what();
        throw DivergenceError(os.str());
    }
}

double log_likelihood_one(const ControlProblem& problem, const Matrix& precision, ConstVectorRef x,
                          ConstVectorRef observation, Vector& predicted)
{
    problem.observe(x, predicted);
    predicted = observation - predicted;
    return -0.5 * predicted.dot(precision * predicted);
}

} // namespace

void predict_serial(const ControlProblem& problem, double t, double dt, const Matrix& particles,
                    ConstVectorRef control, const Matrix& omega, Matrix& out)
{
    out.resize(particles.rows(), particles.cols());
    SdeWorkspace ws(problem.dims());
    for (Index s = 0; s < particles.cols(); ++s) {
        predict_one(problem, t, dt, particles, control, omega, out, s, ws);
    }
}

void predict_omp(const ControlProblem& problem, double t, double dt, const Matrix& particles,
                 ConstVectorRef control, const Matrix& omega, Matrix& out)
{
    out.resize(particles.rows(), particles.cols());
    std::exception_ptr error;
#pragma omp parallel
    {
        SdeWorkspace ws(problem.dims());
#pragma omp for schedule(static)
        for (Index s = 0; s < particles.cols(); ++s) {
            try {
                predict_one(problem, t, dt, particles, control, omega, out, s, ws);
            } catch (...) {
#pragma omp critical(ddfc_predict_error)
                if (!error) {
                    error = std::current_exception();
                }
            }
        }
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

void log_likelihood_serial(const ControlProblem& problem, const Matrix& particles, ConstVectorRef observation,
                           Vector& out)
{
    const Matrix& precision = problem.observation_precision();
    out.resize(particles.cols());
    Vector scratch(problem.dims().observation);
    for (Index s = 0; s < particles.cols(); ++s) {
        out[s] = log_likelihood_one(problem, precision, particles.col(s), observation, scratch);
    }
}

void log_likelihood_omp(const ControlProblem& problem, const Matrix& particles, ConstVectorRef observation,
                        Vector& out)
{
    const Matrix& precision = problem.observation_precision();
    out.resize(particles.cols());
#pragma omp parallel
    {
        Vector scratch(problem.dims().observation);
#pragma omp for schedule(static)
        for (Index s = 0; s < particles.cols(); ++s) {
            out[s] = log_likelihood_one(problem, precision, particles.col(s), observation, scratch);
        }
    }
}

} // namespace kernels

Vector WeightedCloud::normalized_weights() const
{
    const double shift = log_weights.maxCoeff();
    Vector w = (log_weights.array() - shift).exp().matrix();
    return w / w.sum();
}

Matrix predict(const ControlProblem& problem, const TimeGrid& grid, const ParticleCloud& cloud,
               ConstVectorRef applied_control, std::uint64_t seed, Execution exec)
{
    require(cloud.index < grid.steps(), "predict: cloud is already at the terminal node");
    require(cloud.particles.rows() == problem.dims().state, "predict: particle dimension mismatch");
    require(applied_control.size() == problem.dims().control, "predict: control dimension mismatch");
    Matrix out(cloud.particles.rows(), cloud.particles.cols());
    const double t = grid.time(cloud.index);
    const double dt = grid.delta(cloud.index);
    Matrix omega(cloud.particles.rows(), cloud.particles.cols());
    Rng rng(seed);
    for (Index s = 0; s < omega.cols(); ++s) {
        rng.fill_normal(omega.col(s));
    }
    if (exec == Execution::parallel) {
        kernels::predict_omp(problem, t, dt, cloud.particles, applied_control, omega, out);
    } else {
        kernels::predict_serial(problem, t, dt, cloud.particles, applied_control, omega, out);
    }
    return out;
}

WeightedCloud update_weights(const ControlProblem& problem, std::size_t index, const Matrix& predicted,
                             ConstVectorRef observation, Execution exec)
{
    require(observation.size() == problem.dims().observation, "update_weights: observation dimension mismatch");
    require(predicted.cols() >= 1, "update_weights: empty cloud");
    WeightedCloud out;
    out.index = index;
    out.particles = predicted;
    out.log_weights.resize(predicted.cols());
    if (exec == Execution::parallel) {
        kernels::log_likelihood_omp(problem, predicted, observation, out.log_weights);
    } else {
        kernels::log_likelihood_serial(problem, predicted, observation, out.log_weights);
    }
    require(out.log_weights.allFinite(), "update_weights: non-finite likelihood (observation map diverged)");
    out.max_log_weight = out.log_weights.maxCoeff();
    out.degenerate = out.max_log_weight < kDegeneracyFloor;
    out.log_weights.array() -= out.max_log_weight;
    return out;
}

ParticleCloud resample(const WeightedCloud& weighted, Rng& rng, ResamplingScheme scheme)
{
    const Index count = weighted.particles.cols();
    const Vector w = weighted.normalized_weights();

    std::vector<double> cumulative(static_cast<std::size_t>(count));
    double acc = 0.0;
    for (Index s = 0; s < count; ++s) {
        acc += w[s];
        cumulative[static_cast<std::size_t>(s)] = acc;
    }
    cumulative.back() = std::max(cumulative.back(), 1.0);

    auto pick = [&](double r) {
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        return static_cast<Index>(std::min<std::ptrdiff_t>(it - cumulative.begin(), count - 1));
    };

    ParticleCloud out;
    out.index = weighted.index;
    out.particles.resize(weighted.particles.rows(), count);
    if (scheme == ResamplingScheme::systematic) {
        const double offset = rng.uniform();
        for (Index s = 0; s < count; ++s) {
            out.particles.col(s) = weighted.particles.col(pick((static_cast<double>(s) + offset) / count));
        }
    } else {
        for (Index s = 0; s < count; ++s) {
            out.particles.col(s) = weighted.particles.col(pick(rng.uniform()));
        }
    }
    return out;
}

Vector estimate_mean(const ParticleCloud& cloud)
{
    require(cloud.size() >= 1, "estimate_mean: empty cloud");
    return cloud.particles.rowwise().mean();
}

ParticleCloud initial_cloud(const ControlProblem& problem, Index count, Rng& rng)
{
    require(count >= 1, "initial_cloud: need at least one particle");
    ParticleCloud cloud;
    cloud.index = 0;
    cloud.particles.resize(problem.dims().state, count);
    for (Index s = 0; s < count; ++s) {
        problem.sample_initial(rng, cloud.particles.col(s));
    }
    return cloud;
}

} // namespace ddfc
