#pragma once

#include "ddfc/optimizer.hpp"
#include "ddfc/problems.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ddfc {

struct ExperimentConfig {
    std::string problem = "lq2d";
    double t0 = 0.0;
    double T = 1.0;
    double dt = 0.02;
    std::size_t steps = 50; // N_T
    std::size_t repeats = 1;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool parallel_kernels = false;
    std::string output_dir = "out";

    FeedbackConfig feedback;
    BenchmarkOptions problem_options;

    /// Reads a flat JSON object; unknown keys, wrong types and inconsistent
    /// horizons raise ContractViolation.
    static ExperimentConfig from_json(const nlohmann::json& doc);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Fully resolved settings, defaults included.
    nlohmann::json to_json() const;

    void validate() const;
    TimeGrid grid() const;
};

struct RepeatFailure {
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::string kind;
    std::string message;
};

struct ExperimentSummary {
    std::vector<FeedbackRunResult> runs; // successful repeats, in repeat order
    std::vector<std::size_t> repeat_index;
    std::vector<RepeatFailure> failures;
    nlohmann::json metrics;
    Vector cost_times;
    Vector cost_mean;

    bool ok() const { return failures.empty(); }
};

/// LQ problems get the Riccati feedback as reference; others get none.
ReferenceController make_reference(const ControlProblem& problem, const TimeGrid& grid);

/**
 * M independent feedback loops (repeat r uses seed + r) on `workers` threads,
 * per-repeat CSVs under output_dir/repeat_XXX, then metrics.json (or
 * errors.json when a repeat aborts).
 */
ExperimentSummary run_experiment(const ExperimentConfig& config, bool write_outputs = true);

struct ComparisonReport {
    Vector times;
    Vector cost_a;
    Vector cost_b;
    nlohmann::json table;
};

/// Runs both campaigns and aligns b's mean cost trajectory onto a's times.
ComparisonReport compare_methods(const ExperimentConfig& a, const ExperimentConfig& b,
                                 const std::filesystem::path& out_dir);

// CSV with a header row and 17-significant-digit numbers.
struct CsvTable {
    std::vector<std::string> header;
    Matrix rows; // one row per record
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const Matrix& rows);
CsvTable read_csv(const std::filesystem::path& path);

/// Header "t, <prefix>_1..<prefix>_k" and rows (times[j], columns(:, j)).
void write_series(const std::filesystem::path& path, const std::string& prefix, ConstVectorRef times,
                  const Matrix& columns);

/// Piecewise-linear resampling of (x, y) onto `at`, clamped at the ends.
Vector interpolate_series(ConstVectorRef x, ConstVectorRef y, ConstVectorRef at);

} // namespace ddfc
