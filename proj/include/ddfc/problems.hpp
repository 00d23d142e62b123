#pragma once

#include "ddfc/control_problem.hpp"
#include "ddfc/time_grid.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ddfc {

/// A(t) = constant + sin(t) * sin_part + cos(t) * cos_part.
struct TimeVaryingMatrix {
    Matrix constant;
    Matrix sin_part;
    Matrix cos_part;

    Matrix at(double t) const;
    void apply(double t, ConstVectorRef x, VectorRef out) const;
    void write(double t, MatrixRef out) const;
};

enum class LqObservation { sine, identity };

struct LqParameters {
    TimeVaryingMatrix A;
    Matrix B; // d x m
    Matrix C; // d x d
    Matrix Q;
    Matrix R;
    Matrix F;
    Vector x0;
    /// Standard deviation of the isotropic Gaussian spread around x0 (0 = point mass).
    double initial_std = 0.0;
    double obs_std = 0.1;
    LqObservation observation = LqObservation::sine;
};

/**
 * dX = (A(t) X + B u) dt + C dW,
 * f = 1/2 (x^T Q x + u^T R u),  h = 1/2 x^T F x.
 */
class LqProblem final : public ControlProblem {
public:
    explicit LqProblem(LqParameters params, std::string name = "lq");

    std::string name() const override { return name_; }
    const LqParameters& parameters() const { return p_; }

    void drift(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void diffusion(double t, ConstVectorRef x, MatrixRef out) const override;
    double running_cost(double t, ConstVectorRef x, ConstVectorRef u) const override;
    double terminal_cost(ConstVectorRef x) const override;
    void observe(ConstVectorRef x, VectorRef out) const override;

    void drift_x(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const override;
    void drift_u(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const override;
    void diffusion_x(double t, ConstVectorRef x, Index k, MatrixRef out) const override;
    void running_cost_x(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void running_cost_u(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void terminal_cost_x(ConstVectorRef x, VectorRef out) const override;

    bool state_dependent_diffusion() const override { return false; }
    void sample_initial(Rng& rng, VectorRef out) const override;

private:
    LqParameters p_;
    std::string name_;
};

struct ArctanParameters {
    double sigma = 0.05;
    double obs_std = 0.05;
    double x0 = 4.5;
    double initial_std = 0.0;
};

/// dX = atan(X + u) dt + sigma X dW,  f = 1/2 sin^2(x + u),  h = 0,  M = X + eta.
class ArctanProblem final : public ControlProblem {
public:
    explicit ArctanProblem(ArctanParameters params = {});

    std::string name() const override { return "arctan1d"; }
    const ArctanParameters& parameters() const { return p_; }

    void drift(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void diffusion(double t, ConstVectorRef x, MatrixRef out) const override;
    double running_cost(double t, ConstVectorRef x, ConstVectorRef u) const override;
    double terminal_cost(ConstVectorRef x) const override;
    void observe(ConstVectorRef x, VectorRef out) const override;

    void drift_x(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const override;
    void drift_u(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const override;
    void diffusion_x(double t, ConstVectorRef x, Index k, MatrixRef out) const override;
    void running_cost_x(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void running_cost_u(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void terminal_cost_x(ConstVectorRef x, VectorRef out) const override;

    void diffusion_x_contract(double t, ConstVectorRef x, ConstMatrixRef z, VectorRef out) const override;
    void sample_initial(Rng& rng, VectorRef out) const override;

private:
    ArctanParameters p_;
};

struct DubinsParameters {
    double sigma = 0.2;
    double delta = 10.0;
    Eigen::Vector2d target{5.0, 3.0};
    Eigen::Vector2d detector_a{6.0, 1.0};
    Eigen::Vector2d detector_b{-1.0, 4.0};
    double obs_std = 0.01;
    Eigen::Vector2d start{1.0, 1.0};
    double start_std = 1.0;
    double heading = 1.5707963267948966;
    double heading_std = 0.3;
    /// One scalar Brownian motion drives all three components.
    bool shared_noise = false;
};

/**
 * State (x, y, theta): dx = sin(theta) dt, dy = cos(theta) dt, dtheta = u dt,
 * with noise intensities (sigma, sigma, sigma^2). f = 1/2 u^2,
 * h = delta |(x, y) - target|^2, bearings to two detectors as observations.
 */
class DubinsProblem final : public ControlProblem {
public:
    explicit DubinsProblem(DubinsParameters params = {});

    std::string name() const override { return "dubins"; }
    const DubinsParameters& parameters() const { return p_; }

    void drift(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void diffusion(double t, ConstVectorRef x, MatrixRef out) const override;
    double running_cost(double t, ConstVectorRef x, ConstVectorRef u) const override;
    double terminal_cost(ConstVectorRef x) const override;
    void observe(ConstVectorRef x, VectorRef out) const override;

    void drift_x(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const override;
    void drift_u(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const override;
    void diffusion_x(double t, ConstVectorRef x, Index k, MatrixRef out) const override;
    void running_cost_x(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void running_cost_u(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const override;
    void terminal_cost_x(ConstVectorRef x, VectorRef out) const override;

    bool state_dependent_diffusion() const override { return false; }
    void sample_initial(Rng& rng, VectorRef out) const override;

    std::optional<double> terminal_distance(ConstVectorRef x) const override;
    /// A bearing's denominator (y - y_detector) changed sign between the two states.
    bool observation_branch_crossed(ConstVectorRef from, ConstVectorRef to) const override;

private:
    DubinsParameters p_;
};

/**
 * P(t_i) at every node of `grid`, integrating the Riccati equation backward
 * from P(T) = F with RK4 at `substeps` steps per interval. Throws
 * DivergenceError once ||P|| exceeds 1e12.
 */
std::vector<Matrix> riccati_solve(const LqParameters& lq, const TimeGrid& grid, int substeps = 10);

/// -R^{-1} B^T P x.
Vector lq_analytic_control(const LqParameters& lq, ConstMatrixRef P, ConstVectorRef x);

/// Block layouts for the 4-D control matrix.
enum class Lq4dLayout { block, duplicated };

LqParameters lq2d_parameters();
LqParameters lq4d_parameters(Lq4dLayout layout = Lq4dLayout::block);

/// Overrides applied on top of a named benchmark's defaults.
struct BenchmarkOptions {
    std::optional<Vector> x0;
    std::optional<double> initial_std;
    Lq4dLayout lq4d_layout = Lq4dLayout::block;
    bool shared_noise = false;
    std::optional<LqObservation> lq_observation;
};

/// "lq2d", "lq4d", "arctan1d" or "dubins"; throws ContractViolation otherwise.
std::unique_ptr<ControlProblem> make_benchmark(const std::string& name, const BenchmarkOptions& options = {});

std::vector<std::string> benchmark_names();

/// Default constant SGD step size for a named benchmark.
double default_step_size(const std::string& name);

} // namespace ddfc
