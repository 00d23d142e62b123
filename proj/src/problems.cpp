#include "ddfc/problems.hpp"

#include <cmath>
#include <sstream>

namespace ddfc {

namespace {

Matrix scaled_identity(Index n, double s) { return Matrix::Identity(n, n) * s; }

Matrix diagonal(std::initializer_list<double> entries)
{
    Vector v(static_cast<Index>(entries.size()));
    Index k = 0;
    for (double e : entries) {
        v[k++] = e;
    }
    return v.asDiagonal();
}

} // namespace

// ---------------------------------------------------------------- TimeVaryingMatrix

Matrix TimeVaryingMatrix::at(double t) const
{
    Matrix out(constant.rows(), constant.cols());
    write(t, out);
    return out;
}

void TimeVaryingMatrix::apply(double t, ConstVectorRef x, VectorRef out) const
{
    out.noalias() = constant * x;
    out.noalias() += std::sin(t) * (sin_part * x);
    out.noalias() += std::cos(t) * (cos_part * x);
}

void TimeVaryingMatrix::write(double t, MatrixRef out) const
{
    out = constant + std::sin(t) * sin_part + std::cos(t) * cos_part;
}

// ---------------------------------------------------------------- LQ

LqProblem::LqProblem(LqParameters params, std::string name)
    : ControlProblem(Dimensions{params.B.rows(), params.B.cols(), params.B.rows()},
                     scaled_identity(params.B.rows(), params.obs_std * params.obs_std)),
      p_(std::move(params)), name_(std::move(name))
{
    const Index d = p_.B.rows();
    const Index m = p_.B.cols();
    auto square = [d](const Matrix& M) { return M.rows() == d && M.cols() == d; };
    require(square(p_.A.constant) && square(p_.A.sin_part) && square(p_.A.cos_part), "LQ: A(t) must be d x d");
    require(square(p_.C) && square(p_.Q) && square(p_.F), "LQ: C, Q, F must be d x d");
    require(p_.R.rows() == m && p_.R.cols() == m, "LQ: R must be m x m");
    require(p_.x0.size() == d, "LQ: x0 must have d entries");
    require(p_.initial_std >= 0.0, "LQ: initial_std must be >= 0");
    require(p_.R.isApprox(p_.R.transpose()) && Eigen::LLT<Matrix>(p_.R).info() == Eigen::Success,
            "LQ: R must be symmetric positive definite");
    for (const Matrix* M : {&p_.Q, &p_.F}) {
        require(M->isApprox(M->transpose()), "LQ: Q and F must be symmetric");
        require(Eigen::SelfAdjointEigenSolver<Matrix>(*M).eigenvalues().minCoeff() >= -1e-12,
                "LQ: Q and F must be positive semidefinite");
    }
}

void LqProblem::drift(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    p_.A.apply(t, x, out);
    out.noalias() += p_.B * u;
}

void LqProblem::diffusion(double, ConstVectorRef, MatrixRef out) const { out = p_.C; }

double LqProblem::running_cost(double, ConstVectorRef x, ConstVectorRef u) const
{
    return 0.5 * (x.dot(p_.Q * x) + u.dot(p_.R * u));
}

double LqProblem::terminal_cost(ConstVectorRef x) const { return 0.5 * x.dot(p_.F * x); }

void LqProblem::observe(ConstVectorRef x, VectorRef out) const
{
    if (p_.observation == LqObservation::sine) {
        out = x.array().sin().matrix();
    } else {
        out = x;
    }
}

void LqProblem::drift_x(double t, ConstVectorRef, ConstVectorRef, MatrixRef out) const { p_.A.write(t, out); }

void LqProblem::drift_u(double, ConstVectorRef, ConstVectorRef, MatrixRef out) const { out = p_.B; }

void LqProblem::diffusion_x(double, ConstVectorRef, Index, MatrixRef out) const { out.setZero(); }

void LqProblem::running_cost_x(double, ConstVectorRef x, ConstVectorRef, VectorRef out) const
{
    out.noalias() = p_.Q * x;
}

void LqProblem::running_cost_u(double, ConstVectorRef, ConstVectorRef u, VectorRef out) const
{
    out.noalias() = p_.R * u;
}

void LqProblem::terminal_cost_x(ConstVectorRef x, VectorRef out) const { out.noalias() = p_.F * x; }

void LqProblem::sample_initial(Rng& rng, VectorRef out) const
{
    out = p_.x0;
    if (p_.initial_std > 0.0) {
        for (Index k = 0; k < out.size(); ++k) {
            out[k] += p_.initial_std * rng.normal();
        }
    }
}

// ---------------------------------------------------------------- arctan

ArctanProblem::ArctanProblem(ArctanParameters params)
    : ControlProblem(Dimensions{1, 1, 1}, scaled_identity(1, params.obs_std * params.obs_std)), p_(params)
{
    require(p_.sigma >= 0.0 && p_.initial_std >= 0.0, "arctan: sigma and initial_std must be >= 0");
}

void ArctanProblem::drift(double, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    out[0] = std::atan(x[0] + u[0]);
}

void ArctanProblem::diffusion(double, ConstVectorRef x, MatrixRef out) const { out(0, 0) = p_.sigma * x[0]; }

double ArctanProblem::running_cost(double, ConstVectorRef x, ConstVectorRef u) const
{
    const double s = std::sin(x[0] + u[0]);
    return 0.5 * s * s;
}

double ArctanProblem::terminal_cost(ConstVectorRef) const { return 0.0; }

void ArctanProblem::observe(ConstVectorRef x, VectorRef out) const { out[0] = x[0]; }

void ArctanProblem::drift_x(double, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const
{
    const double v = x[0] + u[0];
    out(0, 0) = 1.0 / (1.0 + v * v);
}

void ArctanProblem::drift_u(double t, ConstVectorRef x, ConstVectorRef u, MatrixRef out) const
{
    drift_x(t, x, u, out);
}

void ArctanProblem::diffusion_x(double, ConstVectorRef, Index, MatrixRef out) const { out(0, 0) = p_.sigma; }

void ArctanProblem::running_cost_x(double, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    const double v = x[0] + u[0];
    out[0] = std::sin(v) * std::cos(v);
}

void ArctanProblem::running_cost_u(double t, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    running_cost_x(t, x, u, out);
}

void ArctanProblem::terminal_cost_x(ConstVectorRef, VectorRef out) const { out[0] = 0.0; }

void ArctanProblem::diffusion_x_contract(double, ConstVectorRef, ConstMatrixRef z, VectorRef out) const
{
    out[0] = p_.sigma * z(0, 0);
}

void ArctanProblem::sample_initial(Rng& rng, VectorRef out) const
{
    out[0] = p_.x0;
    if (p_.initial_std > 0.0) {
        out[0] += p_.initial_std * rng.normal();
    }
}

// ---------------------------------------------------------------- Dubins

DubinsProblem::DubinsProblem(DubinsParameters params)
    : ControlProblem(Dimensions{3, 1, 2}, scaled_identity(2, params.obs_std * params.obs_std)), p_(params)
{
    require(p_.sigma >= 0.0 && p_.delta >= 0.0, "dubins: sigma and delta must be >= 0");
    require(p_.start_std >= 0.0 && p_.heading_std >= 0.0, "dubins: initial spreads must be >= 0");
}

void DubinsProblem::drift(double, ConstVectorRef x, ConstVectorRef u, VectorRef out) const
{
    out[0] = std::sin(x[2]);
    out[1] = std::cos(x[2]);
    out[2] = u[0];
}

void DubinsProblem::diffusion(double, ConstVectorRef, MatrixRef out) const
{
    out.setZero();
    const double s2 = p_.sigma * p_.sigma;
    if (p_.shared_noise) {
        out(0, 0) = p_.sigma;
        out(1, 0) = p_.sigma;
        out(2, 0) = s2;
    } else {
        out(0, 0) = p_.sigma;
        out(1, 1) = p_.sigma;
        out(2, 2) = s2;
    }
}

double DubinsProblem::running_cost(double, ConstVectorRef, ConstVectorRef u) const { return 0.5 * u[0] * u[0]; }

double DubinsProblem::terminal_cost(ConstVectorRef x) const
{
    return p_.delta * (x.head<2>() - p_.target).squaredNorm();
}

void DubinsProblem::observe(ConstVectorRef x, VectorRef out) const
{
    out[0] = std::atan((x[0] - p_.detector_a[0]) / (x[1] - p_.detector_a[1]));
    out[1] = std::atan((x[0] - p_.detector_b[0]) / (x[1] - p_.detector_b[1]));
}

void DubinsProblem::drift_x(double, ConstVectorRef x, ConstVectorRef, MatrixRef out) const
{
    out.setZero();
    out(0, 2) = std::cos(x[2]);
    out(1, 2) = -std::sin(x[2]);
}

void DubinsProblem::drift_u(double, ConstVectorRef, ConstVectorRef, MatrixRef out) const
{
    out.setZero();
    out(2, 0) = 1.0;
}

void DubinsProblem::diffusion_x(double, ConstVectorRef, Index, MatrixRef out) const { out.setZero(); }

void DubinsProblem::running_cost_x(double, ConstVectorRef, ConstVectorRef, VectorRef out) const { out.setZero(); }

void DubinsProblem::running_cost_u(double, ConstVectorRef, ConstVectorRef u, VectorRef out) const { out[0] = u[0]; }

void DubinsProblem::terminal_cost_x(ConstVectorRef x, VectorRef out) const
{
    out.head<2>() = 2.0 * p_.delta * (x.head<2>() - p_.target);
    out[2] = 0.0;
}

void DubinsProblem::sample_initial(Rng& rng, VectorRef out) const
{
    out[0] = p_.start[0] + p_.start_std * rng.normal();
    out[1] = p_.start[1] + p_.start_std * rng.normal();
    out[2] = p_.heading + p_.heading_std * rng.normal();
}

std::optional<double> DubinsProblem::terminal_distance(ConstVectorRef x) const
{
    return (x.head<2>() - p_.target).norm();
}

bool DubinsProblem::observation_branch_crossed(ConstVectorRef from, ConstVectorRef to) const
{
    auto flipped = [&](double level) { return (from[1] - level) * (to[1] - level) < 0.0; };
    return flipped(p_.detector_a[1]) || flipped(p_.detector_b[1]);
}

// ---------------------------------------------------------------- Riccati

std::vector<Matrix> riccati_solve(const LqParameters& lq, const TimeGrid& grid, int substeps)
{
    require(substeps >= 1, "riccati_solve: substeps must be >= 1");
    Eigen::LLT<Matrix> r_llt(lq.R);
    require(r_llt.info() == Eigen::Success, "riccati_solve: R must be positive definite");
    const Matrix S = lq.B * r_llt.solve(lq.B.transpose());
    const Index d = lq.F.rows();

    auto rhs = [&](double t, const Matrix& P) -> Matrix {
        const Matrix A = lq.A.at(t);
        return -P * A - A.transpose() * P + P * S * P - lq.Q;
    };

    std::vector<Matrix> out(grid.steps() + 1, Matrix(d, d));
    Matrix P = lq.F;
    out[grid.steps()] = P;
    for (std::size_t i = grid.steps(); i-- > 0;) {
        const double h = -grid.delta(i) / substeps;
        double t = grid.time(i + 1);
        for (int k = 0; k < substeps; ++k) {
            const Matrix k1 = rhs(t, P);
            const Matrix k2 = rhs(t + 0.5 * h, P + 0.5 * h * k1);
            const Matrix k3 = rhs(t + 0.5 * h, P + 0.5 * h * k2);
            const Matrix k4 = rhs(t + h, P + h * k3);
            P += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            P = 0.5 * (P + P.transpose()).eval();
            t += h;
            if (!P.allFinite() || P.norm() > 1e12) {
                std::ostringstream os;
                os << "Riccati solution escapes to infinity near t=" << t;
                throw DivergenceError(os.str());
            }
        }
        out[i] = P;
    }
    return out;
}

Vector lq_analytic_control(const LqParameters& lq, ConstMatrixRef P, ConstVectorRef x)
{
    return -lq.R.llt().solve(lq.B.transpose() * (P * x));
}

// ---------------------------------------------------------------- registry

LqParameters lq2d_parameters()
{
    LqParameters p;
    p.A.constant = Matrix::Zero(2, 2);
    p.A.sin_part = diagonal({2.0, 0.0});
    p.A.cos_part = diagonal({0.0, 1.0});
    p.B = Matrix(2, 1);
    p.B << 0.5, 0.5;
    p.C = scaled_identity(2, 0.1);
    p.Q = Matrix::Identity(2, 2);
    p.R = Matrix::Identity(1, 1);
    p.F = Matrix::Identity(2, 2);
    p.x0 = Vector(2);
    p.x0 << 1.0, -2.0;
    p.obs_std = 0.1;
    return p;
}

LqParameters lq4d_parameters(Lq4dLayout layout)
{
    LqParameters p;
    p.A.constant = diagonal({0.0, 0.0, 1.0, 0.5});
    p.A.sin_part = diagonal({2.0, 0.0, 0.0, 0.0});
    p.A.cos_part = diagonal({0.0, 1.0, 0.0, 0.0});
    p.B = Matrix::Zero(4, 2);
    if (layout == Lq4dLayout::block) {
        p.B(0, 0) = 0.5;
        p.B(1, 0) = 0.5;
        p.B(2, 1) = 1.0;
        p.B(3, 1) = 1.0;
    } else {
        p.B(0, 0) = 0.5;
        p.B(1, 1) = 0.5;
        p.B(2, 0) = 1.0;
        p.B(3, 1) = 1.0;
    }
    p.C = scaled_identity(4, 0.1);
    p.Q = Matrix::Identity(4, 4);
    p.R = Matrix::Identity(2, 2);
    p.F = Matrix::Identity(4, 4);
    p.x0 = Vector(4);
    p.x0 << 1.0, 2.0, -1.0, 2.0;
    p.obs_std = 0.1;
    return p;
}

std::vector<std::string> benchmark_names() { return {"lq2d", "lq4d", "arctan1d", "dubins"}; }

std::unique_ptr<ControlProblem> make_benchmark(const std::string& name, const BenchmarkOptions& options)
{
    if (name == "lq2d" || name == "lq4d") {
        LqParameters p = name == "lq2d" ? lq2d_parameters() : lq4d_parameters(options.lq4d_layout);
        if (options.x0) {
            require(options.x0->size() == p.x0.size(), name + ": x0 has the wrong dimension");
            p.x0 = *options.x0;
        }
        if (options.initial_std) {
            p.initial_std = *options.initial_std;
        }
        if (options.lq_observation) {
            p.observation = *options.lq_observation;
        }
        return std::make_unique<LqProblem>(std::move(p), name);
    }
    if (name == "arctan1d") {
        ArctanParameters p;
        if (options.x0) {
            require(options.x0->size() == 1, "arctan1d: x0 must be a scalar");
            p.x0 = (*options.x0)[0];
        }
        if (options.initial_std) {
            p.initial_std = *options.initial_std;
        }
        return std::make_unique<ArctanProblem>(p);
    }
    if (name == "dubins") {
        DubinsParameters p;
        p.shared_noise = options.shared_noise;
        if (options.x0) {
            require(options.x0->size() == 3, "dubins: x0 must be (x, y, theta)");
            p.start = options.x0->head<2>();
            p.heading = (*options.x0)[2];
        }
        if (options.initial_std) {
            p.start_std = *options.initial_std;
        }
        return std::make_unique<DubinsProblem>(p);
    }
    throw ContractViolation("unknown problem '" + name + "'");
}

double default_step_size(const std::string& name)
{
    if (name == "lq2d" || name == "lq4d") {
        return 0.1;
    }
    if (name == "arctan1d") {
        return 0.5;
    }
    if (name == "dubins") {
        return 0.2;
    }
    throw ContractViolation("unknown problem '" + name + "'");
}

} // namespace ddfc
