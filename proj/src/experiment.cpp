#include "ddfc/experiment.hpp"

#include "ddfc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace ddfc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& known_keys()
{
    static const std::set<std::string> keys = {
        "problem",     "t0",           "T",           "dt",            "N_T",          "repeats",
        "seed",        "workers",      "parallel_kernels", "output_dir", "method",     "S",
        "L",           "rho",          "decay",       "init_mode",     "clip_norm",    "resampling",
        "truth_substeps", "share_initial", "record_clouds", "domain",  "dx",           "K",
        "Lambda",      "iterations",   "full_rho",    "x0",            "initial_std",  "lq4d_layout",
        "shared_noise", "lq_observation",
    };
    return keys;
}

template <typename T>
T read(const json& doc, const std::string& key)
{
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw ContractViolation("config key '" + key + "' has the wrong type");
    }
}

std::size_t read_count(const json& doc, const std::string& key)
{
    const json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ContractViolation("config key '" + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

template <typename E>
E read_enum(const json& doc, const std::string& key, std::initializer_list<std::pair<const char*, E>> options)
{
    const auto value = read<std::string>(doc, key);
    for (const auto& [name, e] : options) {
        if (value == name) {
            return e;
        }
    }
    throw ContractViolation("config key '" + key + "' has unknown value '" + value + "'");
}

const char* method_name(Method m) { return m == Method::pf_sgd ? "pf_sgd" : "full_solution"; }

std::string format_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

} // namespace

// ---------------------------------------------------------------- config

ExperimentConfig ExperimentConfig::from_json(const json& doc)
{
    require(doc.is_object(), "config must be a JSON object");
    for (const auto& item : doc.items()) {
        require(known_keys().count(item.key()) == 1, "unknown config key '" + item.key() + "'");
    }

    ExperimentConfig c;
    if (doc.contains("problem")) {
        c.problem = read<std::string>(doc, "problem");
    }
    const auto names = benchmark_names();
    require(std::find(names.begin(), names.end(), c.problem) != names.end(),
            "unknown problem '" + c.problem + "'");

    if (doc.contains("t0")) {
        c.t0 = read<double>(doc, "t0");
    }
    if (doc.contains("T")) {
        c.T = read<double>(doc, "T");
    }
    require(c.T > c.t0, "T must exceed t0");
    const bool has_dt = doc.contains("dt");
    const bool has_steps = doc.contains("N_T");
    if (has_dt) {
        c.dt = read<double>(doc, "dt");
        require(c.dt > 0.0, "dt must be > 0");
    }
    if (has_steps) {
        c.steps = read_count(doc, "N_T");
        require(c.steps >= 1, "N_T must be >= 1");
    }
    if (!has_steps) {
        c.steps = static_cast<std::size_t>(std::llround((c.T - c.t0) / c.dt));
        require(c.steps >= 1, "dt exceeds the horizon");
    } else if (!has_dt) {
        c.dt = (c.T - c.t0) / static_cast<double>(c.steps);
    }

    if (doc.contains("repeats")) {
        c.repeats = read_count(doc, "repeats");
    }
    if (doc.contains("seed")) {
        c.seed = read<std::uint64_t>(doc, "seed");
    }
    if (doc.contains("workers")) {
        c.workers = read_count(doc, "workers");
    }
    if (doc.contains("parallel_kernels")) {
        c.parallel_kernels = read<bool>(doc, "parallel_kernels");
    }
    if (doc.contains("output_dir")) {
        c.output_dir = read<std::string>(doc, "output_dir");
    }

    FeedbackConfig& f = c.feedback;
    OptimizerConfig& o = f.optimizer;
    if (doc.contains("method")) {
        f.method = read_enum<Method>(doc, "method", {{"pf_sgd", Method::pf_sgd}, {"full_solution", Method::full_solution}});
    }
    if (doc.contains("S")) {
        o.particles = static_cast<Index>(read_count(doc, "S"));
    }
    if (doc.contains("L")) {
        o.iterations = read_count(doc, "L");
    }
    o.rho = doc.contains("rho") ? read<double>(doc, "rho") : default_step_size(c.problem);
    if (doc.contains("decay")) {
        o.decay = read<double>(doc, "decay");
    }
    if (doc.contains("init_mode")) {
        o.init_mode = read_enum<InitMode>(doc, "init_mode", {{"zero", InitMode::zero}, {"warm_start", InitMode::warm_start}});
    }
    if (doc.contains("clip_norm")) {
        o.clip_norm = read<double>(doc, "clip_norm");
    }
    if (doc.contains("resampling")) {
        f.resampling = read_enum<ResamplingScheme>(
            doc, "resampling", {{"multinomial", ResamplingScheme::multinomial}, {"systematic", ResamplingScheme::systematic}});
    }
    if (doc.contains("truth_substeps")) {
        f.truth_substeps = read_count(doc, "truth_substeps");
    }
    if (doc.contains("share_initial")) {
        f.share_initial = read<bool>(doc, "share_initial");
    }
    if (doc.contains("record_clouds")) {
        f.record_clouds = read<bool>(doc, "record_clouds");
    }
    if (doc.contains("domain")) {
        const auto domain = read<std::vector<double>>(doc, "domain");
        require(domain.size() == 2, "domain must be [lo, hi]");
        f.full.lo = domain[0];
        f.full.hi = domain[1];
    }
    if (doc.contains("dx")) {
        f.full.dx = read<double>(doc, "dx");
    }
    if (doc.contains("K")) {
        f.full.samples = read_count(doc, "K");
    }
    if (doc.contains("Lambda")) {
        f.full.paths = read_count(doc, "Lambda");
    }
    if (doc.contains("iterations")) {
        f.full.iterations = read_count(doc, "iterations");
    }
    if (doc.contains("full_rho")) {
        f.full.rho = read<double>(doc, "full_rho");
    }

    BenchmarkOptions& p = c.problem_options;
    if (doc.contains("x0")) {
        const auto x0 = read<std::vector<double>>(doc, "x0");
        p.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Index>(x0.size()));
    }
    if (doc.contains("initial_std")) {
        p.initial_std = read<double>(doc, "initial_std");
    }
    if (doc.contains("lq4d_layout")) {
        p.lq4d_layout = read_enum<Lq4dLayout>(doc, "lq4d_layout", {{"block", Lq4dLayout::block}, {"duplicated", Lq4dLayout::duplicated}});
    }
    if (doc.contains("shared_noise")) {
        p.shared_noise = read<bool>(doc, "shared_noise");
    }
    if (doc.contains("lq_observation")) {
        p.lq_observation = read_enum<LqObservation>(doc, "lq_observation", {{"sine", LqObservation::sine}, {"identity", LqObservation::identity}});
    }

    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ContractViolation("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(doc);
}

void ExperimentConfig::validate() const
{
    require(repeats >= 1, "repeats must be >= 1");
    require(workers >= 1, "workers must be >= 1");
    require(steps >= 1 && dt > 0.0, "the horizon needs N_T >= 1 and dt > 0");
    require(std::abs(dt * static_cast<double>(steps) - (T - t0)) <= 1e-12 * std::max(1.0, std::abs(T - t0)),
            "dt * N_T must equal T - t0");
    require(feedback.truth_substeps >= 1, "truth_substeps must be >= 1");
    feedback.optimizer.validate();
    if (feedback.method == Method::full_solution) {
        feedback.full.validate();
        require(problem == "arctan1d", "the full-solution method needs a one-dimensional problem");
    }
    // Building the problem checks problem-specific options such as x0's dimension.
    make_benchmark(problem, problem_options);
}

TimeGrid ExperimentConfig::grid() const { return TimeGrid::uniform(t0, T, steps); }

json ExperimentConfig::to_json() const
{
    const FeedbackConfig& f = feedback;
    const OptimizerConfig& o = f.optimizer;
    json doc = {
        {"problem", problem},
        {"t0", t0},
        {"T", T},
        {"dt", dt},
        {"N_T", steps},
        {"repeats", repeats},
        {"seed", seed},
        {"workers", workers},
        {"parallel_kernels", parallel_kernels},
        {"output_dir", output_dir},
        {"method", method_name(f.method)},
        {"S", o.particles},
        {"L", o.iterations},
        {"rho", o.rho},
        {"decay", o.decay},
        {"init_mode", o.init_mode == InitMode::zero ? "zero" : "warm_start"},
        {"clip_norm", o.clip_norm},
        {"resampling", f.resampling == ResamplingScheme::multinomial ? "multinomial" : "systematic"},
        {"truth_substeps", f.truth_substeps},
        {"share_initial", f.share_initial},
        {"record_clouds", f.record_clouds},
        {"lq4d_layout", problem_options.lq4d_layout == Lq4dLayout::block ? "block" : "duplicated"},
        {"shared_noise", problem_options.shared_noise},
    };
    if (f.method == Method::full_solution) {
        doc["domain"] = {f.full.lo, f.full.hi};
        doc["dx"] = f.full.dx;
        doc["K"] = f.full.samples;
        doc["Lambda"] = f.full.paths;
        doc["iterations"] = f.full.iterations;
        doc["full_rho"] = f.full.rho;
    }
    if (problem_options.x0) {
        doc["x0"] = std::vector<double>(problem_options.x0->data(),
                                        problem_options.x0->data() + problem_options.x0->size());
    }
    if (problem_options.initial_std) {
        doc["initial_std"] = *problem_options.initial_std;
    }
    if (problem_options.lq_observation) {
        doc["lq_observation"] = *problem_options.lq_observation == LqObservation::sine ? "sine" : "identity";
    }
    return doc;
}

// ---------------------------------------------------------------- CSV

void write_csv(const fs::path& path, const std::vector<std::string>& header, const Matrix& rows)
{
    require(static_cast<Index>(header.size()) == rows.cols(), "write_csv: header and column count differ");
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path.string());
    for (std::size_t k = 0; k < header.size(); ++k) {
        out << (k ? "," : "") << header[k];
    }
    out << '\n';
    for (Index r = 0; r < rows.rows(); ++r) {
        for (Index k = 0; k < rows.cols(); ++k) {
            out << (k ? "," : "") << format_number(rows(r, k));
        }
        out << '\n';
    }
    require(static_cast<bool>(out), "failed while writing " + path.string());
}

CsvTable read_csv(const fs::path& path)
{
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path.string());
    CsvTable table;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), path.string() + " has no header");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            table.header.push_back(cell);
        }
    }
    std::vector<std::vector<double>> records;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> record;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            require(end != cell.c_str() && *end == '\0', path.string() + ": bad number '" + cell + "'");
            record.push_back(v);
        }
        require(record.size() == table.header.size(), path.string() + ": ragged row");
        records.push_back(std::move(record));
    }
    table.rows.resize(static_cast<Index>(records.size()), static_cast<Index>(table.header.size()));
    for (std::size_t r = 0; r < records.size(); ++r) {
        for (std::size_t k = 0; k < records[r].size(); ++k) {
            table.rows(static_cast<Index>(r), static_cast<Index>(k)) = records[r][k];
        }
    }
    return table;
}

void write_series(const fs::path& path, const std::string& prefix, ConstVectorRef times, const Matrix& columns)
{
    require(times.size() == columns.cols(), "write_series: one time per column");
    std::vector<std::string> header{"t"};
    for (Index k = 0; k < columns.rows(); ++k) {
        header.push_back(prefix + "_" + std::to_string(k + 1));
    }
    Matrix rows(columns.cols(), columns.rows() + 1);
    rows.col(0) = times;
    rows.rightCols(columns.rows()) = columns.transpose();
    write_csv(path, header, rows);
}

Vector interpolate_series(ConstVectorRef x, ConstVectorRef y, ConstVectorRef at)
{
    require(x.size() == y.size() && x.size() >= 1, "interpolate_series: x and y must align");
    Vector out(at.size());
    const double* begin = x.data();
    const double* end = x.data() + x.size();
    for (Index k = 0; k < at.size(); ++k) {
        const double q = at[k];
        if (q <= x[0]) {
            out[k] = y[0];
            continue;
        }
        if (q >= x[x.size() - 1]) {
            out[k] = y[y.size() - 1];
            continue;
        }
        const auto j = static_cast<Index>(std::upper_bound(begin, end, q) - begin);
        const double w = (q - x[j - 1]) / (x[j] - x[j - 1]);
        out[k] = (1.0 - w) * y[j - 1] + w * y[j];
    }
    return out;
}

// ---------------------------------------------------------------- campaigns

ReferenceController make_reference(const ControlProblem& problem, const TimeGrid& grid)
{
    const auto* lq = dynamic_cast<const LqProblem*>(&problem);
    if (!lq) {
        return {};
    }
    auto P = std::make_shared<std::vector<Matrix>>(riccati_solve(lq->parameters(), grid));
    const LqParameters params = lq->parameters();
    return [P, params](std::size_t n, ConstVectorRef x, VectorRef u) { u = lq_analytic_control(params, (*P)[n], x); };
}

namespace {

void write_repeat(const fs::path& dir, const ControlProblem& problem, const TimeGrid& grid,
                  const FeedbackRunResult& run)
{
    fs::create_directories(dir);
    const Vector node_times = Eigen::Map<const Vector>(grid.nodes().data(), static_cast<Index>(grid.nodes().size()));
    const Vector control_times = node_times.head(static_cast<Index>(grid.steps()));
    write_series(dir / "control.csv", "u", control_times, run.controls);
    if (run.reference.size()) {
        write_series(dir / "control_reference.csv", "u", control_times, run.reference);
        write_series(dir / "state_reference.csv", "x", run.truth_times, run.reference_states);
    }
    write_series(dir / "state_true.csv", "x", run.truth_times, run.true_states);
    write_series(dir / "state_estimate.csv", "x", node_times, run.filter_means);
    write_series(dir / "observations.csv", "m", node_times.tail(static_cast<Index>(grid.steps())), run.observations);
    write_csv(dir / "cost.csv", {"t", "J"},
              (Matrix(run.truth_times.size(), 2) << run.truth_times, run.running_cost).finished());
    if (!run.clouds.empty()) {
        const Index d = problem.dims().state;
        Index total = 0;
        for (const Matrix& c : run.clouds) {
            total += c.cols();
        }
        std::vector<std::string> header{"step", "particle_index"};
        for (Index k = 0; k < d; ++k) {
            header.push_back("x_" + std::to_string(k + 1));
        }
        Matrix rows(total, d + 2);
        Index r = 0;
        for (std::size_t step = 0; step < run.clouds.size(); ++step) {
            for (Index s = 0; s < run.clouds[step].cols(); ++s, ++r) {
                rows(r, 0) = static_cast<double>(step);
                rows(r, 1) = static_cast<double>(s);
                rows.row(r).tail(d) = run.clouds[step].col(s).transpose();
            }
        }
        write_csv(dir / "clouds.csv", header, rows);
    }
}

std::string repeat_dir_name(std::size_t r)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "repeat_%03zu", r);
    return buf;
}

json build_metrics(const ExperimentConfig& config, const ReferenceController& reference,
                   const ExperimentSummary& summary)
{
    json m;
    std::vector<double> costs, walls, distances;
    std::vector<Matrix> est, ref, ref_truth, ref_estimate;
    Diagnostics diag;
    json per_repeat = json::array();
    const std::size_t sub = config.feedback.truth_substeps;
    for (std::size_t k = 0; k < summary.runs.size(); ++k) {
        const FeedbackRunResult& run = summary.runs[k];
        costs.push_back(run.cost);
        walls.push_back(run.wall_time);
        if (run.terminal_distance) {
            distances.push_back(*run.terminal_distance);
        }
        diag.merge(run.diagnostics);
        if (reference) {
            est.push_back(run.controls);
            ref.push_back(run.reference);
            Matrix on_truth(run.controls.rows(), run.controls.cols());
            Matrix on_estimate(run.controls.rows(), run.controls.cols());
            for (Index n = 0; n < run.controls.cols(); ++n) {
                reference(static_cast<std::size_t>(n), run.true_states.col(n * static_cast<Index>(sub)),
                          on_truth.col(n));
                reference(static_cast<std::size_t>(n), run.filter_means.col(n), on_estimate.col(n));
            }
            ref_truth.push_back(std::move(on_truth));
            ref_estimate.push_back(std::move(on_estimate));
        }
        per_repeat.push_back({{"repeat", summary.repeat_index[k]},
                              {"seed", config.seed + summary.repeat_index[k]},
                              {"cost", run.cost},
                              {"terminal_distance", optional_number(run.terminal_distance)},
                              {"wall_time_s", run.wall_time}});
    }

    m["rmse_accumulated"] = reference ? json(accumulated_rmse(est, ref)) : json(nullptr);
    m["cost_final_mean"] = mean(costs);
    m["cost_final_se"] = standard_error(costs);
    m["running_cost_final_mean"] = summary.cost_mean[summary.cost_mean.size() - 1];
    m["terminal_distance_mean"] = distances.empty() ? json(nullptr) : json(mean(distances));
    m["terminal_distance_se"] = distances.empty() ? json(nullptr) : json(standard_error(distances));
    m["wall_time_mean_s"] = mean(walls);
    m["wall_time_total_s"] = mean(walls) * static_cast<double>(walls.size());
    m["repeats"] = summary.runs.size();
    m["per_repeat"] = per_repeat;
    m["config_echo"] = config.to_json();
    json d = {{"clip_events", diag.clip_events},
              {"clamp_events", diag.clamp_events},
              {"degenerate_updates", diag.degenerate_updates},
              {"observation_branch_crossings", diag.branch_crossings},
              {"min_max_log_weight", diag.min_max_log_weight}};
    if (reference) {
        d["rmse_vs_true_state"] = accumulated_rmse(est, ref_truth);
        d["rmse_vs_filter_estimate"] = accumulated_rmse(est, ref_estimate);
    }
    m["diagnostics"] = d;
    return m;
}

void write_json(const fs::path& path, const json& doc)
{
    std::ofstream out(path, std::ios::binary);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

} // namespace

ExperimentSummary run_experiment(const ExperimentConfig& config, bool write_outputs)
{
    config.validate();
    const auto problem = make_benchmark(config.problem, config.problem_options);
    const TimeGrid grid = config.grid();
    const ReferenceController reference = make_reference(*problem, grid);

    FeedbackConfig feedback = config.feedback;
    feedback.exec = (config.parallel_kernels && config.workers == 1) ? Execution::parallel : Execution::serial;

    const std::size_t M = config.repeats;
    std::vector<std::optional<FeedbackRunResult>> results(M);
    std::vector<std::optional<RepeatFailure>> failures(M);

#pragma omp parallel for num_threads(static_cast<int>(config.workers)) schedule(dynamic, 1)
    for (std::size_t r = 0; r < M; ++r) {
        const std::uint64_t seed = config.seed + r;
        try {
            results[r] = run_feedback_loop(*problem, grid, feedback, seed, reference);
        } catch (const DivergenceError& e) {
            failures[r] = RepeatFailure{r, seed, "divergence", e.what()};
        } catch (const ContractViolation& e) {
            failures[r] = RepeatFailure{r, seed, "validation", e.what()};
        } catch (const std::exception& e) {
            failures[r] = RepeatFailure{r, seed, "error", e.what()};
        }
    }

    ExperimentSummary summary;
    for (std::size_t r = 0; r < M; ++r) {
        if (results[r]) {
            summary.runs.push_back(std::move(*results[r]));
            summary.repeat_index.push_back(r);
        }
        if (failures[r]) {
            summary.failures.push_back(*failures[r]);
        }
    }
    if (!summary.runs.empty()) {
        std::vector<Vector> running;
        for (const auto& run : summary.runs) {
            running.push_back(run.running_cost);
        }
        summary.cost_times = summary.runs.front().truth_times;
        summary.cost_mean = avg_cost_trajectory(running);
    }
    if (summary.ok()) {
        summary.metrics = build_metrics(config, reference, summary);
    }

    if (write_outputs) {
        const fs::path out(config.output_dir);
        fs::create_directories(out);
        for (std::size_t k = 0; k < summary.runs.size(); ++k) {
            write_repeat(out / repeat_dir_name(summary.repeat_index[k]), *problem, grid, summary.runs[k]);
        }
        if (!summary.runs.empty()) {
            write_csv(out / "cost_mean.csv", {"t", "J"},
                      (Matrix(summary.cost_times.size(), 2) << summary.cost_times, summary.cost_mean).finished());
        }
        if (summary.ok()) {
            write_json(out / "metrics.json", summary.metrics);
        } else {
            json manifest = json::array();
            for (const auto& f : summary.failures) {
                manifest.push_back({{"repeat", f.repeat}, {"seed", f.seed}, {"kind", f.kind}, {"message", f.message}});
            }
            write_json(out / "errors.json", {{"failures", manifest}, {"config_echo", config.to_json()}});
        }
    }
    return summary;
}

ComparisonReport compare_methods(const ExperimentConfig& a, const ExperimentConfig& b, const fs::path& out_dir)
{
    require(a.problem == b.problem, "compare: configs use different problems");
    require(a.t0 == b.t0 && a.T == b.T, "compare: configs use different horizons");

    ExperimentConfig ca = a, cb = b;
    ca.output_dir = (out_dir / "a").string();
    cb.output_dir = (out_dir / "b").string();
    const ExperimentSummary sa = run_experiment(ca);
    const ExperimentSummary sb = run_experiment(cb);
    if (!sa.ok() || !sb.ok()) {
        const auto& f = sa.ok() ? sb.failures.front() : sa.failures.front();
        throw DivergenceError("compare: a campaign aborted (repeat " + std::to_string(f.repeat) + "): " + f.message);
    }

    ComparisonReport report;
    report.times = sa.cost_times;
    report.cost_a = sa.cost_mean;
    report.cost_b = interpolate_series(sb.cost_times, sb.cost_mean, sa.cost_times);

    auto side = [](const ExperimentConfig& c, const ExperimentSummary& s) {
        return json{{"method", method_name(c.feedback.method)},
                    {"N_T", c.steps},
                    {"dt", c.dt},
                    {"cost_final_mean", s.metrics["cost_final_mean"]},
                    {"running_cost_final_mean", s.metrics["running_cost_final_mean"]},
                    {"wall_time_mean_s", s.metrics["wall_time_mean_s"]}};
    };
    const double wall_a = sa.metrics["wall_time_mean_s"].get<double>();
    const double wall_b = sb.metrics["wall_time_mean_s"].get<double>();
    report.table = {{"problem", a.problem},
                    {"a", side(ca, sa)},
                    {"b", side(cb, sb)},
                    {"wall_time_ratio_a_over_b", wall_b > 0.0 ? json(wall_a / wall_b) : json(nullptr)}};

    fs::create_directories(out_dir);
    Matrix rows(report.times.size(), 3);
    rows << report.times, report.cost_a, report.cost_b;
    write_csv(out_dir / "comparison.csv", {"t", "cost_a", "cost_b"}, rows);
    write_json(out_dir / "comparison.json", report.table);
    return report;
}

} // namespace ddfc
