// Acceptance checks: one PASS/FAIL line per criterion.
//   acceptance            run every criterion
//   acceptance --only N   run criterion N
#include "../support/oracles.hpp"

#include "ddfc/experiment.hpp"
#include "ddfc/problems.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace ddfc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

ExperimentConfig shipped(const std::string& name)
{
    return ExperimentConfig::load(fs::path(DDFC_CONFIG_DIR) / name);
}

ExperimentSummary campaign(ExperimentConfig config)
{
    config.workers = 1;
    config.parallel_kernels = false;
    ExperimentSummary s = run_experiment(config, false);
    if (!s.ok()) {
        throw DivergenceError("campaign aborted: " + s.failures.front().message);
    }
    return s;
}

Outcome lq_rmse(const std::string& config_name, double threshold)
{
    const ExperimentConfig config = shipped(config_name);
    const ExperimentSummary s = campaign(config);
    const double rmse = s.metrics["rmse_accumulated"].get<double>();
    const auto& d = s.metrics["diagnostics"];
    return {rmse <= threshold,
            config.problem + " accumulated RMSE over " + std::to_string(config.repeats) + " repeats = " + fmt(rmse) +
                " (threshold <= " + fmt(threshold) + "; vs true state " + fmt(d["rmse_vs_true_state"].get<double>()) +
                ", vs filter estimate " + fmt(d["rmse_vs_filter_estimate"].get<double>()) + "; mean run " +
                fmt(s.metrics["wall_time_mean_s"].get<double>()) + " s)"};
}

Outcome criterion1() { return lq_rmse("lq2d.json", 0.15); }

Outcome criterion2() { return lq_rmse("lq4d.json", 0.13); }

Outcome criterion3()
{
    const ExperimentSummary pf = campaign(shipped("arctan_pfsgd.json"));
    const ExperimentSummary full = campaign(shipped("arctan_full_coarse.json"));
    const double cost_pf = pf.metrics["running_cost_final_mean"].get<double>();
    const double cost_full = full.metrics["running_cost_final_mean"].get<double>();
    const double wall_pf = pf.metrics["wall_time_mean_s"].get<double>();
    const double wall_full = full.metrics["wall_time_mean_s"].get<double>();
    const bool pass = cost_pf <= 0.005 && cost_pf < cost_full && wall_pf <= wall_full / 10.0;
    return {pass, "arctan1d PF-SGD J(1) = " + fmt(cost_pf) + " (<= 0.005), full-solution coarse J(1) = " +
                      fmt(cost_full) + " (PF-SGD must be lower), wall time " + fmt(wall_pf) + " s vs " +
                      fmt(wall_full) + " s (ratio " + fmt(wall_pf / wall_full) + ", <= 0.1)"};
}

Outcome criterion4()
{
    const ExperimentSummary s = campaign(shipped("dubins.json"));
    const double dist = s.metrics["terminal_distance_mean"].get<double>();
    return {dist <= 0.5, "dubins mean terminal distance to (5,3) over " +
                             std::to_string(s.runs.size()) + " repeats = " + fmt(dist) + " (threshold <= 0.5; +/- " +
                             fmt(s.metrics["terminal_distance_se"].get<double>()) + ")"};
}

Outcome criterion5()
{
    const oracle::LinearGaussian lg;
    const auto study = oracle::filter_vs_kalman(lg, 0.02, 50, 10000, 50, 515);
    return {study.worst_z <= 4.0, "particle filter (S = 10000, 50 steps, 50 replicates) vs Kalman posterior mean: "
                                  "worst deviation " + fmt(study.worst_z) + " standard errors at step " +
                                  std::to_string(study.worst_step) + " (threshold <= 4)"};
}

Outcome criterion6()
{
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 50);
    const auto lq = make_benchmark("lq2d");
    Vector x_lq(2);
    x_lq << 1.0, -2.0;
    ControlSchedule s_lq = ControlSchedule::zeros(0, 50, 1);
    s_lq.values().setConstant(0.5);
    const auto g_lq = oracle::gradient_vs_fd(*lq, grid, x_lq, s_lq, 0, 0, 10000, 616);

    const auto arctan = make_benchmark("arctan1d");
    const Vector x_ar = Vector::Constant(1, 4.5);
    ControlSchedule s_ar = ControlSchedule::zeros(0, 50, 1);
    s_ar.values().setConstant(-1.0);
    const auto g_ar = oracle::gradient_vs_fd(*arctan, grid, x_ar, s_ar, 0, 0, 10000, 617);

    auto line = [](const std::string& name, const oracle::GradientStudy& g) {
        return name + " mean G = " + fmt(g.gradient_mean) + " vs FD " + fmt(g.fd_mean) + " (|diff| " +
               fmt(std::abs(g.gradient_mean - g.fd_mean)) + " <= " + fmt(g.tolerance()) + ")";
    };
    return {g_lq.agrees() && g_ar.agrees(), line("lq2d", g_lq) + "; " + line("arctan1d", g_ar)};
}

Outcome criterion7()
{
    // Riccati: A = 0, B = R = 1, Q = 0, F = f gives P(t) = f / (1 + f (T - t)).
    LqParameters p;
    p.A = {Matrix::Zero(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1)};
    p.B = Matrix::Ones(1, 1);
    p.C = Matrix::Zero(1, 1);
    p.Q = Matrix::Zero(1, 1);
    p.R = Matrix::Ones(1, 1);
    const double f = 2.0;
    p.F = Matrix::Constant(1, 1, f);
    p.x0 = Vector::Zero(1);
    const TimeGrid fine = TimeGrid::uniform(0.0, 1.0, 500);
    const auto P = riccati_solve(p, fine);
    double riccati_err = 0.0;
    for (std::size_t i = 0; i <= fine.steps(); ++i) {
        riccati_err = std::max(riccati_err, std::abs(P[i](0, 0) - f / (1.0 + f * (1.0 - fine.time(i)))));
    }

    // Single-path adjoint against the closed-form linear recursion.
    const double a = 0.7, q = 0.4, hp = 1.3;
    const CallbackProblem lin = oracle::linear_adjoint_problem(a, q, hp);
    const TimeGrid grid = TimeGrid::uniform(0.0, 1.0, 50);
    const ControlSchedule sched = ControlSchedule::zeros(0, 50, 1);
    Rng rng(717);
    const StatePath path = simulate_path(lin, grid, 0, Vector::Zero(1), sched, rng);
    const AdjointPath adj = backward_single_path(lin, grid, path, sched);
    double recursion_err = 0.0;
    for (std::size_t i = 0; i <= 50; ++i) {
        const double expected = oracle::linear_adjoint(hp, a, q, grid.delta(0), 50 - i);
        recursion_err = std::max(recursion_err, std::abs(adj.y(i)[0] - expected) / std::max(1.0, std::abs(expected)));
    }

    const auto gbm = oracle::gbm_strong_order(2.0, 1.0, 2000, 718);
    const bool pass = riccati_err <= 1e-8 && recursion_err <= 1e-13 && gbm.slope >= 0.4 && gbm.slope <= 0.6;
    return {pass, "Riccati RK4 max error " + fmt(riccati_err) + " (<= 1e-8); adjoint recursion max relative error " +
                      fmt(recursion_err) + " (<= 1e-13); GBM strong-order slope " + fmt(gbm.slope) +
                      " (in [0.4, 0.6])"};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// metrics.json with every wall-clock field removed.
std::string metrics_without_timing(const fs::path& p)
{
    nlohmann::json doc = nlohmann::json::parse(slurp(p));
    doc.erase("wall_time_mean_s");
    doc.erase("wall_time_total_s");
    for (auto& r : doc["per_repeat"]) {
        r.erase("wall_time_s");
    }
    doc["config_echo"].erase("output_dir");
    return doc.dump();
}

Outcome criterion8()
{
    const fs::path root = fs::temp_directory_path() / ("ddfc_determinism_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path config = fs::path(DDFC_CONFIG_DIR) / "determinism.json";
    for (const char* run : {"first", "second"}) {
        const std::string cmd = std::string("\"") + DDFC_EXE + "\" run --config \"" + config.string() +
                                "\" --seed 4242 --workers 1 --out \"" + (root / run).string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) {
            return {false, "ddfc run failed: " + cmd};
        }
    }
    std::size_t compared = 0;
    std::string mismatch;
    for (const auto& entry : fs::recursive_directory_iterator(root / "first")) {
        if (!entry.is_regular_file()) {
            continue;
        }
        const fs::path rel = fs::relative(entry.path(), root / "first");
        const fs::path other = root / "second" / rel;
        const bool same = rel.filename() == "metrics.json"
                              ? metrics_without_timing(entry.path()) == metrics_without_timing(other)
                              : fs::exists(other) && slurp(entry.path()) == slurp(other);
        ++compared;
        if (!same && mismatch.empty()) {
            mismatch = rel.string();
        }
    }
    fs::remove_all(root);
    return {mismatch.empty() && compared > 0,
            std::to_string(compared) + " output files compared across two invocations" +
                (mismatch.empty() ? ", all byte-identical (metrics.json modulo wall-clock fields)"
                                  : ", first mismatch: " + mismatch)};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"C1 LQ 2D reproduction", criterion1},   {"C2 LQ 4D reproduction", criterion2},
        {"C3 Example 2 cost dominance", criterion3}, {"C4 Dubins targeting", criterion4},
        {"C5 filter correctness", criterion5},  {"C6 gradient correctness", criterion6},
        {"C7 oracle suite", criterion7},        {"C8 determinism", criterion8},
    };
    int only = 0;
    if (argc == 3 && std::string(argv[1]) == "--only") {
        only = std::atoi(argv[2]);
    }
    bool all_pass = true;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<int>(k + 1) != only) {
            continue;
        }
        const auto started = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("aborted: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << criteria[k].first << ": " << o.detail << " [" << fmt(secs)
                  << " s]" << std::endl;
        all_pass = all_pass && o.pass;
    }
    return all_pass ? 0 : 1;
}
