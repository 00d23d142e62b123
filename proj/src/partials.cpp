#include "ddfc/partials.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

namespace ddfc {

namespace {

constexpr double kRelativeStep = 1e-5;

double step_for(double v) { return kRelativeStep * std::max(1.0, std::abs(v)); }

double relative_error(ConstMatrixRef analytic, ConstMatrixRef fd)
{
    if (analytic.size() == 0) {
        return 0.0;
    }
    if (!analytic.allFinite() || !fd.allFinite()) {
        return std::numeric_limits<double>::infinity();
    }
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

} // namespace

bool PartialsReport::passed() const { return failures.empty() && flagged().empty(); }

std::vector<std::string> PartialsReport::flagged() const
{
    std::vector<std::string> out;
    for (const auto& [name, err] : max_error) {
        if (!(err <= tolerance)) {
            out.push_back(name);
        }
    }
    return out;
}

std::map<std::string, double> partial_errors_at(const ControlProblem& problem, double t, ConstVectorRef x,
                                                ConstVectorRef u)
{
    const Index d = problem.dims().state;
    const Index m = problem.dims().control;
    std::map<std::string, double> errors;

    Vector xp = x, xm = x, up = u, um = u;
    Vector bp(d), bm(d);

    // b_x and f_x, h_x
    Matrix bx(d, d), bx_fd(d, d);
    problem.drift_x(t, x, u, bx);
    Vector fx(d), hx(d);
    problem.running_cost_x(t, x, u, fx);
    problem.terminal_cost_x(x, hx);
    Vector fx_fd(d), hx_fd(d);
    Matrix sp(d, d), sm(d, d), sx(d, d);
    double sigma_err = 0.0;
    for (Index k = 0; k < d; ++k) {
        const double h = step_for(x[k]);
        xp = x;
        xm = x;
        xp[k] += h;
        xm[k] -= h;
        problem.drift(t, xp, u, bp);
        problem.drift(t, xm, u, bm);
        bx_fd.col(k) = (bp - bm) / (2.0 * h);
        fx_fd[k] = (problem.running_cost(t, xp, u) - problem.running_cost(t, xm, u)) / (2.0 * h);
        hx_fd[k] = (problem.terminal_cost(xp) - problem.terminal_cost(xm)) / (2.0 * h);

        problem.diffusion(t, xp, sp);
        problem.diffusion(t, xm, sm);
        if (problem.state_dependent_diffusion()) {
            problem.diffusion_x(t, x, k, sx);
        } else {
            sx.setZero();
        }
        sigma_err = std::max(sigma_err, relative_error(sx, (sp - sm) / (2.0 * h)));
    }
    errors["b_x"] = relative_error(bx, bx_fd);
    errors["f_x"] = relative_error(fx, fx_fd);
    errors["h_x"] = relative_error(hx, hx_fd);
    errors["sigma_x"] = sigma_err;

    Matrix bu(d, m), bu_fd(d, m);
    problem.drift_u(t, x, u, bu);
    Vector fu(m), fu_fd(m);
    problem.running_cost_u(t, x, u, fu);
    for (Index k = 0; k < m; ++k) {
        const double h = step_for(u[k]);
        up = u;
        um = u;
        up[k] += h;
        um[k] -= h;
        problem.drift(t, x, up, bp);
        problem.drift(t, x, um, bm);
        bu_fd.col(k) = (bp - bm) / (2.0 * h);
        fu_fd[k] = (problem.running_cost(t, x, up) - problem.running_cost(t, x, um)) / (2.0 * h);
    }
    errors["b_u"] = relative_error(bu, bu_fd);
    errors["f_u"] = relative_error(fu, fu_fd);
    return errors;
}

PartialsReport check_partials(const ControlProblem& problem, int trials, std::uint64_t seed, double t_lo,
                              double t_hi)
{
    require(trials >= 1, "check_partials needs at least one trial");
    require(t_hi >= t_lo, "check_partials needs t_lo <= t_hi");
    const Index d = problem.dims().state;
    const Index m = problem.dims().control;

    PartialsReport report;
    for (const char* key : {"b_x", "b_u", "sigma_x", "f_x", "f_u", "h_x"}) {
        report.max_error[key] = 0.0;
    }

    Rng rng(seed);
    Vector x(d), u(m), noise(d);
    for (int trial = 0; trial < trials; ++trial) {
        const double t = t_lo + (t_hi - t_lo) * rng.uniform();
        problem.sample_initial(rng, x);
        rng.fill_normal(noise);
        x += noise;
        rng.fill_normal(u);

        const auto errors = partial_errors_at(problem, t, x, u);
        bool finite = true;
        for (const auto& [name, err] : errors) {
            if (!std::isfinite(err)) {
                finite = false;
                continue;
            }
            report.max_error[name] = std::max(report.max_error[name], err);
        }
        if (!finite) {
            std::ostringstream os;
            os << "non-finite coefficient at t=" << t << " x=" << format_vector(x) << " u=" << format_vector(u);
            report.failures.push_back(os.str());
        }
    }
    return report;
}

} // namespace ddfc
