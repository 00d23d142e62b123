#include "ddfc/cost.hpp"
#include "ddfc/metrics.hpp"
#include "ddfc/problems.hpp"
#include "ddfc/sde.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace ddfc;

namespace {

LqParameters scalar_riccati(double f)
{
    LqParameters p;
    p.A = {Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
    p.B = Matrix::Ones(1, 1);
    p.C = Matrix::Zero(1, 1);
    p.Q = Matrix::Zero(1, 1);
    p.R = Matrix::Ones(1, 1);
    p.F = Matrix::Constant(1, 1, f);
    p.x0 = Vector::Ones(1);
    return p;
}

} // namespace

TEST(Riccati, ZeroDataGivesZero)
{
    LqParameters p = lq2d_parameters();
    p.Q.setZero();
    p.F.setZero();
    const auto P = riccati_solve(p, TimeGrid::uniform(0.0, 1.0, 50));
    for (const auto& m : P) {
        EXPECT_TRUE(m.isZero(0.0));
    }
}

TEST(Riccati, ScalarClosedForm)
{
    for (double f : {0.5, 2.0, 7.0}) {
        const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 500);
        const auto P = riccati_solve(scalar_riccati(f), grid);
        for (std::size_t i = 0; i <= grid.steps(); ++i) {
            const double exact = f / (1.0 + f * (1.0 - grid.time(i)));
            EXPECT_NEAR(P[i](0, 0), exact, 1e-8);
        }
    }
}

TEST(Riccati, TerminalValueIsF)
{
    const LqParameters p = lq2d_parameters();
    const auto P = riccati_solve(p, TimeGrid::uniform(0.0, 1.0, 50));
    EXPECT_EQ(P.back(), Matrix::Identity(2, 2));
}

TEST(Riccati, SymmetricPositiveSemidefinite)
{
    for (const LqParameters& p : {lq2d_parameters(), lq4d_parameters(Lq4dLayout::block),
                                  lq4d_parameters(Lq4dLayout::duplicated)}) {
        const auto P = riccati_solve(p, TimeGrid::uniform(0.0, 1.0, 50));
        for (const auto& m : P) {
            EXPECT_EQ(m, m.transpose());
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(m).eigenvalues().minCoeff(), -1e-10);
        }
    }
}

TEST(Riccati, FiniteEscapeIsReported)
{
    // Unstable A with almost no control authority: P grows like exp(2 a (T - t)).
    LqParameters p = scalar_riccati(1.0);
    p.A.constant(0, 0) = 30.0;
    p.Q(0, 0) = 1.0;
    p.R(0, 0) = 1e12;
    EXPECT_THROW(riccati_solve(p, TimeGrid::uniform(0.0, 1.0, 50)), DivergenceError);
}

TEST(AnalyticControl, Arithmetic)
{
    const LqParameters p = scalar_riccati(1.0);
    EXPECT_EQ(lq_analytic_control(p, Matrix::Constant(1, 1, 2.0), Vector::Constant(1, 3.0))[0], -6.0);
    EXPECT_EQ(lq_analytic_control(p, Matrix::Constant(1, 1, 2.0), Vector::Zero(1))[0], 0.0);
    EXPECT_EQ(lq_analytic_control(p, Matrix::Zero(1, 1), Vector::Constant(1, 3.0))[0], 0.0);
}

TEST(AnalyticControl, BeatsZeroControlWithoutNoise)
{
    LqParameters p = lq2d_parameters();
    p.C.setZero();
    const LqProblem problem(p);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 200);
    const auto P = riccati_solve(p, grid);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector x0 = 2.0 * Vector::Random(2);
        Matrix xs(2, 201), xz(2, 201), us(1, 200);
        xs.col(0) = x0;
        xz.col(0) = x0;
        const Vector omega = Vector::Zero(2);
        for (std::size_t i = 0; i < 200; ++i) {
            const auto c = static_cast<Index>(i);
            us.col(c) = lq_analytic_control(p, P[i], xs.col(c));
            xs.col(c + 1) = euler_step(problem, grid.time(i), xs.col(c), us.col(c), grid.delta(i), omega);
            xz.col(c + 1) = euler_step(problem, grid.time(i), xz.col(c), Vector::Zero(1), grid.delta(i), omega);
        }
        EXPECT_LT(evaluate_cost(problem, grid, xs, us), evaluate_cost(problem, grid, xz, Matrix::Zero(1, 200)));
    }
}

TEST(Benchmarks, Lq2dCoefficients)
{
    const LqParameters p = lq2d_parameters();
    EXPECT_EQ(p.B.rows(), 2);
    EXPECT_EQ(p.B.cols(), 1);
    EXPECT_TRUE(p.C.isApprox(0.1 * Matrix::Identity(2, 2)));
    EXPECT_EQ(p.x0, (Vector(2) << 1.0, -2.0).finished());
    const Matrix A = p.A.at(0.7);
    EXPECT_NEAR(A(0, 0), 2.0 * std::sin(0.7), 1e-15);
    EXPECT_NEAR(A(1, 1), std::cos(0.7), 1e-15);
    EXPECT_EQ(A(0, 1), 0.0);
    const auto problem = make_benchmark("lq2d");
    EXPECT_TRUE(problem->observation_noise_cov().isApprox(0.01 * Matrix::Identity(2, 2)));
}

TEST(Benchmarks, Lq4dLayouts)
{
    const LqParameters block = lq4d_parameters(Lq4dLayout::block);
    const LqParameters dup = lq4d_parameters(Lq4dLayout::duplicated);
    EXPECT_EQ(block.B.rows(), 4);
    EXPECT_EQ(block.B.cols(), 2);
    EXPECT_EQ(dup.B.cols(), 2);
    EXPECT_NE(block.B, dup.B);
    EXPECT_EQ(block.x0, (Vector(4) << 1.0, 2.0, -1.0, 2.0).finished());
    const Matrix A = block.A.at(0.3);
    EXPECT_NEAR(A(2, 2), 1.0, 1e-15);
    EXPECT_NEAR(A(3, 3), 0.5, 1e-15);
}

TEST(Benchmarks, ArctanIdentities)
{
    const ArctanProblem problem;
    Rng rng(1);
    for (int k = 0; k < 20; ++k) {
        Vector x(1), u(1);
        x << 3.0 + 3.0 * rng.uniform();
        u << rng.normal();
        Matrix bu(1, 1);
        Vector fu(1);
        problem.drift_u(0.0, x, u, bu);
        problem.running_cost_u(0.0, x, u, fu);
        const double s = x[0] + u[0];
        EXPECT_NEAR(bu(0, 0), 1.0 / (1.0 + s * s), 1e-15);
        EXPECT_NEAR(fu[0], std::sin(s) * std::cos(s), 1e-15);
        EXPECT_EQ(problem.terminal_cost(x), 0.0);
    }
    Vector x0(1);
    problem.sample_initial(rng, x0);
    EXPECT_EQ(x0[0], 4.5);
}

TEST(Benchmarks, DubinsIdentities)
{
    const DubinsProblem problem;
    const Vector x = (Vector(3) << 2.0, 1.5, 0.4).finished();
    const Vector u = Vector::Constant(1, 0.7);
    Vector b(3), fu(1);
    Matrix bu(3, 1), sigma(3, 3);
    problem.drift(0.0, x, u, b);
    problem.drift_u(0.0, x, u, bu);
    problem.running_cost_u(0.0, x, u, fu);
    problem.diffusion(0.0, x, sigma);
    EXPECT_EQ(b, (Vector(3) << std::sin(0.4), std::cos(0.4), 0.7).finished());
    EXPECT_EQ(bu, (Matrix(3, 1) << 0.0, 0.0, 1.0).finished());
    EXPECT_EQ(fu[0], 0.7);
    EXPECT_TRUE(sigma.isApprox(Vector(Eigen::Vector3d(0.2, 0.2, 0.04)).asDiagonal().toDenseMatrix()));
    EXPECT_NEAR(problem.terminal_cost(x), 10.0 * (9.0 + 2.25), 1e-12);
    EXPECT_NEAR(*problem.terminal_distance(x), std::sqrt(11.25), 1e-15);
    EXPECT_TRUE(problem.observation_branch_crossed((Vector(3) << 0.0, 0.9, 0.0).finished(),
                                                   (Vector(3) << 0.0, 1.1, 0.0).finished()));
    EXPECT_FALSE(problem.observation_branch_crossed((Vector(3) << 0.0, 1.1, 0.0).finished(),
                                                    (Vector(3) << 0.0, 1.2, 0.0).finished()));

    DubinsParameters shared;
    shared.shared_noise = true;
    const DubinsProblem one_w(shared);
    one_w.diffusion(0.0, x, sigma);
    EXPECT_TRUE(sigma.col(0).isApprox((Vector(3) << 0.2, 0.2, 0.04).finished(), 1e-15));
    EXPECT_TRUE(sigma.rightCols(2).isZero(0.0));
}

TEST(Benchmarks, DubinsInitialPerturbation)
{
    const DubinsProblem problem;
    Rng rng(9);
    const int draws = 20000;
    Eigen::Vector3d s = Eigen::Vector3d::Zero(), s2 = Eigen::Vector3d::Zero();
    Vector x(3);
    for (int k = 0; k < draws; ++k) {
        problem.sample_initial(rng, x);
        s += x;
        s2 += x.cwiseProduct(x);
    }
    const Eigen::Vector3d mean = s / draws;
    const Eigen::Vector3d sd = (s2 / draws - mean.cwiseProduct(mean)).cwiseSqrt();
    EXPECT_NEAR(mean[0], 1.0, 0.04);
    EXPECT_NEAR(mean[1], 1.0, 0.04);
    EXPECT_NEAR(mean[2], M_PI / 2, 0.012);
    EXPECT_NEAR(sd[0], 1.0, 0.03);
    EXPECT_NEAR(sd[2], 0.3, 0.01);
}

TEST(Benchmarks, NamedRegistry)
{
    for (const auto& name : benchmark_names()) {
        const auto problem = make_benchmark(name);
        EXPECT_EQ(problem->name(), name);
        EXPECT_GT(default_step_size(name), 0.0);
    }
    EXPECT_THROW(make_benchmark("lq3d"), ContractViolation);
    EXPECT_EQ(default_step_size("lq2d"), 0.1);
    EXPECT_EQ(default_step_size("arctan1d"), 0.5);
    EXPECT_EQ(default_step_size("dubins"), 0.2);
}

TEST(Metrics, AccumulatedRmse)
{
    const Matrix a = Matrix::Random(2, 30);
    EXPECT_EQ(accumulated_rmse({a, a}, {a, a}), 0.0);
    const double c = 0.3;
    const Matrix u = Matrix::Random(1, 50);
    EXPECT_NEAR(accumulated_rmse({u.array() + c}, {u}), c * std::sqrt(50.0), 1e-12);
    EXPECT_NEAR(accumulated_rmse({u.array() + c, u}, {u, u}), c * std::sqrt(25.0), 1e-12);
    EXPECT_THROW(accumulated_rmse({u}, {Matrix::Zero(1, 49)}), ContractViolation);
    EXPECT_THROW(accumulated_rmse({}, {}), ContractViolation);
}

TEST(Metrics, AverageCostTrajectory)
{
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 20);
    Vector deltas(20);
    for (std::size_t i = 0; i < 20; ++i) {
        deltas[static_cast<Index>(i)] = grid.delta(i);
    }
    // Constant integrand (1/2) sin^2 = c / 2 accumulates to c t / 2.
    const double c = 0.36;
    const Vector acc = accumulate_running_cost(Vector::Constant(20, 0.5 * c), deltas);
    const Vector avg = avg_cost_trajectory({acc, acc});
    EXPECT_EQ(avg[0], 0.0);
    for (std::size_t i = 0; i <= 20; ++i) {
        EXPECT_NEAR(avg[static_cast<Index>(i)], c * grid.time(i) / 2.0, 1e-15);
    }
    const Vector other = 3.0 * acc;
    EXPECT_NEAR(avg_cost_trajectory({acc, other})[20], 2.0 * acc[20], 1e-15);
}

TEST(Metrics, MeanAndStandardError)
{
    EXPECT_EQ(mean({1.0, 2.0, 3.0}), 2.0);
    EXPECT_NEAR(standard_error({1.0, 2.0, 3.0}), 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_EQ(standard_error({4.0}), 0.0);
}
