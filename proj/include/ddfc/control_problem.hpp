#pragma once

#include "ddfc/rng.hpp"
#include "ddfc/types.hpp"

#include <functional>
#include <optional>
#include <string>

namespace ddfc {

struct Dimensions {
    Index state = 0;       // d
    Index control = 0;     // m
    Index observation = 0; // ell
};

/**
 * Coefficient bundle of a partially observed controlled diffusion
 *
 *   dX = b(t, X, u) dt + sigma(t, X) dW,   X_0 ~ xi
 *   M_n = g(X_{t_n}) + eta_n,              eta_n ~ N(0, Gamma)
 *   J   = E[ int f(t, X, u) dt + h(X_T) ]
 *
 * together with the analytic partials consumed by the adjoint equation and the
 * gradient representation. The diffusion takes no control argument, so a
 * controlled diffusion cannot be expressed.
 *
 * Every output is written into a caller-owned buffer of the right shape; the
 * hot loops of the optimizer call these millions of times.
 *
 * Instances are immutable after construction and may be shared read-only
 * between threads.
 */
class ControlProblem {
public:
    /// `gamma` may be the zero matrix (noiseless observations); otherwise it
    /// must be symmetric positive definite.
    ControlProblem(Dimensions dims, Matrix gamma);
    virtual ~ControlProblem() = default;

    ControlProblem(const ControlProblem&) = default;
    ControlProblem& operator=(const ControlProblem&) = delete;

    virtual std::string name() const = 0;

    const Dimensions& dims() const { return dims_; }

    virtual void drift(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const = 0;
    virtual void diffusion(double t, ConstVectorRef x, MatrixRef out) const = 0;
    virtual double running_cost(double t, ConstVectorRef x, ConstVectorRef u) const = 0;
    virtual double terminal_cost(ConstVectorRef x) const = 0;
    virtual void observe(ConstVectorRef x, VectorRef out) const = 0;

    virtual void drift_x(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const = 0;
    virtual void drift_u(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const = 0;
    /// d x d matrix of partials d sigma / d x_k.
    virtual void diffusion_x(double t, ConstVectorRef x, Index k, MatrixRef out) const = 0;
    virtual void running_cost_x(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const = 0;
    virtual void running_cost_u(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const = 0;
    virtual void terminal_cost_x(ConstVectorRef x, VectorRef out) const = 0;

    /// False when sigma does not depend on x, letting the backward pass skip
    /// the sigma_x^T Z term entirely.
    virtual bool state_dependent_diffusion() const { return true; }

    /// (sigma_x^T Z)_k = sum_{j,r} d sigma_{jr} / d x_k * Z_{jr}.
    virtual void diffusion_x_contract(double t, ConstVectorRef x, ConstMatrixRef z, VectorRef out) const;

    /// Draws X_0 ~ xi.
    virtual void sample_initial(Rng& rng, VectorRef out) const = 0;

    /// Projection onto the admissible control set; identity for U = R^m.
    virtual void project_control(VectorRef) const {}

    /// Distance of a terminal state to the problem's target, for problems that have one.
    virtual std::optional<double> terminal_distance(ConstVectorRef) const { return std::nullopt; }

    /// True when the observation map has a branch discontinuity between two states.
    virtual bool observation_branch_crossed(ConstVectorRef, ConstVectorRef) const { return false; }

    const Matrix& observation_noise_cov() const { return gamma_; }
    /// Lower Cholesky factor of Gamma (zero when noiseless).
    const Matrix& observation_noise_factor() const { return gamma_factor_; }
    bool noiseless_observations() const { return noiseless_; }
    /// Gamma^{-1}; throws ContractViolation for noiseless problems.
    const Matrix& observation_precision() const;

private:
    Dimensions dims_;
    Matrix gamma_;
    Matrix gamma_factor_;
    Matrix gamma_inv_;
    bool noiseless_ = false;
};

/**
 * A ControlProblem assembled from callables. Every coefficient that is left
 * empty evaluates to zero (and so do its partials), which keeps small test
 * problems short to write.
 */
struct ProblemCallbacks {
    using VecFn = std::function<void(double, ConstVectorRef, ConstVectorRef, VectorRef)>;
    using MatFn = std::function<void(double, ConstVectorRef, ConstVectorRef, MatrixRef)>;
    using ScalarFn = std::function<double(double, ConstVectorRef, ConstVectorRef)>;

    std::string name = "callback";
    Dimensions dims;
    Matrix gamma;

    VecFn drift;
    std::function<void(double, ConstVectorRef, MatrixRef)> diffusion;
    ScalarFn running_cost;
    std::function<double(ConstVectorRef)> terminal_cost;
    std::function<void(ConstVectorRef, VectorRef)> observe;

    MatFn drift_x;
    MatFn drift_u;
    std::function<void(double, ConstVectorRef, Index, MatrixRef)> diffusion_x;
    VecFn running_cost_x;
    VecFn running_cost_u;
    std::function<void(ConstVectorRef, VectorRef)> terminal_cost_x;

    std::function<void(Rng&, VectorRef)> sample_initial;
};

class CallbackProblem final : public ControlProblem {
public:
    explicit CallbackProblem(ProblemCallbacks callbacks);

    std::string name() const override { return cb_.name; }

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

    bool state_dependent_diffusion() const override { return static_cast<bool>(cb_.diffusion_x); }
    void sample_initial(Rng& rng, VectorRef out) const override;

private:
    ProblemCallbacks cb_;
};

/**
 * Conditional control values u_i|_{t_n} for i = anchor..N_T, one column per
 * node. The final column is the control at the terminal node; it never moves
 * the state but is read by the last backward step.
 */
class ControlSchedule {
public:
    ControlSchedule(std::size_t anchor, Matrix values);

    static ControlSchedule zeros(std::size_t anchor, std::size_t steps, Index control_dim);

    std::size_t anchor() const { return anchor_; }
    std::size_t last_index() const { return anchor_ + static_cast<std::size_t>(values_.cols()) - 1; }
    Index control_dim() const { return values_.rows(); }

    /// Control at global node index i (anchor <= i <= last_index()).
    auto at(std::size_t i) const { return values_.col(static_cast<Index>(i - anchor_)); }
    auto at(std::size_t i) { return values_.col(static_cast<Index>(i - anchor_)); }

    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }

    /// Drops the entries before `new_anchor` (warm start for the next instant).
    ControlSchedule truncated(std::size_t new_anchor) const;

    /// Throws ContractViolation unless the schedule covers anchor..steps with
    /// `control_dim` rows and only finite entries.
    void validate(std::size_t steps, Index control_dim) const;

private:
    std::size_t anchor_;
    Matrix values_;
};

} // namespace ddfc
