// ddfc: run, compare and validate data-driven feedback control experiments.
#include "ddfc/experiment.hpp"
#include "ddfc/partials.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace ddfc;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kDivergence = 2;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> repeats;
    std::optional<std::size_t> workers;
    std::optional<std::string> out;

    void apply(ExperimentConfig& c) const
    {
        if (seed) {
            c.seed = *seed;
        }
        if (repeats) {
            c.repeats = *repeats;
        }
        if (workers) {
            c.workers = *workers;
        }
        if (out) {
            c.output_dir = *out;
        }
        c.validate();
    }
};

int run_command(const std::string& config_path, const Overrides& overrides)
{
    ExperimentConfig config = ExperimentConfig::load(config_path);
    overrides.apply(config);
    const ExperimentSummary summary = run_experiment(config);
    if (!summary.ok()) {
        for (const auto& f : summary.failures) {
            std::cerr << "repeat " << f.repeat << " (seed " << f.seed << ") " << f.kind << ": " << f.message << '\n';
        }
        std::cerr << "error manifest written to " << config.output_dir << "/errors.json\n";
        return kDivergence;
    }
    const auto& m = summary.metrics;
    std::cout << config.problem << ": " << summary.runs.size() << " repeats, cost_final_mean="
              << m["cost_final_mean"].get<double>();
    if (!m["rmse_accumulated"].is_null()) {
        std::cout << ", rmse_accumulated=" << m["rmse_accumulated"].get<double>();
    }
    if (!m["terminal_distance_mean"].is_null()) {
        std::cout << ", terminal_distance_mean=" << m["terminal_distance_mean"].get<double>();
    }
    std::cout << ", wall_time_mean_s=" << m["wall_time_mean_s"].get<double>() << '\n';
    return kOk;
}

int compare_command(const std::string& a_path, const std::string& b_path, const std::string& out)
{
    const ExperimentConfig a = ExperimentConfig::load(a_path);
    const ExperimentConfig b = ExperimentConfig::load(b_path);
    const ComparisonReport report = compare_methods(a, b, out);
    std::cout << report.table.dump(2) << '\n';
    return kOk;
}

int validate_command(const std::string& config_path)
{
    const ExperimentConfig config = ExperimentConfig::load(config_path);
    const auto problem = make_benchmark(config.problem, config.problem_options);
    const PartialsReport report = check_partials(*problem, 200, config.seed, config.t0, config.T);
    for (const auto& [name, err] : report.max_error) {
        std::cout << name << " max relative error " << err << '\n';
    }
    for (const auto& f : report.failures) {
        std::cout << "failure: " << f << '\n';
    }
    if (!report.passed()) {
        std::cout << "partials check FAILED\n";
        return kValidationFailure;
    }
    std::cout << "config and partials OK\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Data-driven feedback control experiments"};
    app.require_subcommand(1);

    std::string config_path, a_path, b_path, out_dir;
    Overrides overrides;

    auto* run = app.add_subcommand("run", "Run a seeded repeat campaign");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--seed", overrides.seed, "Base seed");
    run->add_option("--repeats", overrides.repeats, "Number of repeats");
    run->add_option("--workers", overrides.workers, "Worker threads for repeats");
    run->add_option("--out", overrides.out, "Output directory");

    auto* compare = app.add_subcommand("compare", "Compare two campaigns on the same problem");
    compare->add_option("--a", a_path, "First config")->required();
    compare->add_option("--b", b_path, "Second config")->required();
    compare->add_option("--out", out_dir, "Output directory")->required();

    auto* validate = app.add_subcommand("validate", "Check a config and the problem's partials");
    validate->add_option("--config", config_path, "JSON config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidationFailure;
    }

    try {
        if (*run) {
            return run_command(config_path, overrides);
        }
        if (*compare) {
            return compare_command(a_path, b_path, out_dir);
        }
        return validate_command(config_path);
    } catch (const ContractViolation& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidationFailure;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return kDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDivergence;
    }
}
