#include "ddfc/control_problem.hpp"

#include <cmath>

namespace ddfc {

ControlProblem::ControlProblem(Dimensions dims, Matrix gamma) : dims_(dims), gamma_(std::move(gamma))
{
    require(dims_.state >= 1 && dims_.control >= 1 && dims_.observation >= 1,
            "problem dimensions must be positive");
    require(gamma_.rows() == dims_.observation && gamma_.cols() == dims_.observation,
            "observation covariance must be ell x ell");
    require(gamma_.allFinite(), "observation covariance must be finite");
    require((gamma_ - gamma_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + gamma_.cwiseAbs().maxCoeff()),
            "observation covariance must be symmetric");

    if (gamma_.isZero(0.0)) {
        noiseless_ = true;
        gamma_factor_ = Matrix::Zero(dims_.observation, dims_.observation);
        return;
    }
    Eigen::LLT<Matrix> llt(gamma_);
    require(llt.info() == Eigen::Success, "observation covariance must be positive definite");
    gamma_factor_ = llt.matrixL();
    gamma_inv_ = llt.solve(Matrix::Identity(dims_.observation, dims_.observation));
}

const Matrix& ControlProblem::observation_precision() const
{
    require(!noiseless_, "noiseless observations have no likelihood");
    return gamma_inv_;
}

void ControlProblem::diffusion_x_contract(double t, ConstVectorRef x, ConstMatrixRef z, VectorRef out) const
{
    const Index d = dims_.state;
    if (!state_dependent_diffusion()) {
        out.setZero();
        return;
    }
    Matrix partial(d, d);
    for (Index k = 0; k < d; ++k) {
        diffusion_x(t, x, k, partial);
        out[k] = partial.cwiseProduct(z).sum();
    }
}

CallbackProblem::CallbackProblem(ProblemCallbacks callbacks)
    : ControlProblem(callbacks.dims,
                     callbacks.gamma.size() ? callbacks.gamma
                                            : Matrix(Matrix::Identity(callbacks.dims.observation,
                                                                      callbacks.dims.observation))),
      cb_(std::move(callbacks))
{
}

void CallbackProblem::drift(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    if (cb_.drift) {
        cb_.drift(t, x, u, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::diffusion(double t, ConstVectorRef x, MatrixRef out) const
{
    if (cb_.diffusion) {
        cb_.diffusion(t, x, out);
    } else {
        out.setZero();
    }
}

double CallbackProblem::running_cost(double t, ConstVectorRef x, ConstVectorRef u) const
{
    return cb_.running_cost ? cb_.running_cost(t, x, u) : 0.0;
}

double CallbackProblem::terminal_cost(ConstVectorRef x) const
{
    return cb_.terminal_cost ? cb_.terminal_cost(x) : 0.0;
}

void CallbackProblem::observe(ConstVectorRef x, VectorRef out) const
{
    if (cb_.observe) {
        cb_.observe(x, out);
    } else {
        out = x.head(dims().observation);
    }
}

void CallbackProblem::drift_x(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const
{
    if (cb_.drift_x) {
        cb_.drift_x(t, x, u, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::drift_u(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const
{
    if (cb_.drift_u) {
        cb_.drift_u(t, x, u, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::diffusion_x(double t, ConstVectorRef x, Index k, MatrixRef out) const
{
    if (cb_.diffusion_x) {
        cb_.diffusion_x(t, x, k, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::running_cost_x(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    if (cb_.running_cost_x) {
        cb_.running_cost_x(t, x, u, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::running_cost_u(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    if (cb_.running_cost_u) {
        cb_.running_cost_u(t, x, u, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::terminal_cost_x(ConstVectorRef x, VectorRef out) const
{
    if (cb_.terminal_cost_x) {
        cb_.terminal_cost_x(x, out);
    } else {
        out.setZero();
    }
}

void CallbackProblem::sample_initial(Rng& rng, VectorRef out) const
{
    if (cb_.sample_initial) {
        cb_.sample_initial(rng, out);
    } else {
        out.setZero();
    }
}

ControlSchedule::ControlSchedule(std::size_t anchor, Matrix values) : anchor_(anchor), values_(std::move(values))
{
    require(values_.cols() >= 1, "a control schedule needs at least one entry");
}

ControlSchedule ControlSchedule::zeros(std::size_t anchor, std::size_t steps, Index control_dim)
{
    require(anchor <= steps, "schedule anchor beyond the terminal node");
    return ControlSchedule(anchor, Matrix::Zero(control_dim, static_cast<Index>(steps - anchor + 1)));
}

ControlSchedule ControlSchedule::truncated(std::size_t new_anchor) const
{
    require(new_anchor >= anchor_ && new_anchor <= last_index(), "truncation anchor outside the schedule");
    const Index offset = static_cast<Index>(new_anchor - anchor_);
    return ControlSchedule(new_anchor, values_.rightCols(values_.cols() - offset));
}

void ControlSchedule::validate(std::size_t steps, Index control_dim) const
{
    require(values_.rows() == control_dim, "schedule control dimension mismatch");
    require(last_index() == steps, "schedule must cover anchor..N_T");
    require(values_.allFinite(), "schedule has non-finite entries");
}

} // namespace ddfc
