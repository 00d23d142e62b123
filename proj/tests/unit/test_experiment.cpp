#include "ddfc/experiment.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace ddfc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch_root()
{
    return fs::temp_directory_path() / ("ddfc_unit_" + std::to_string(::getpid()));
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = scratch_root() / name;
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json small_lq(const fs::path& out)
{
    return {{"problem", "lq2d"}, {"T", 0.2},  {"dt", 0.02}, {"S", 40},       {"L", 30},
            {"repeats", 2},      {"seed", 5}, {"workers", 1}, {"output_dir", out.string()}};
}

int run_cli(const std::string& args)
{
    const int status = std::system((std::string(DDFC_EXE) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(ExperimentConfig, ZeroRepeatsWritesNothing)
{
    const fs::path out = scratch("zero_repeats");
    json doc = small_lq(out);
    doc["repeats"] = 0;
    EXPECT_THROW(run_experiment(ExperimentConfig::from_json(doc)), ContractViolation);
    EXPECT_FALSE(fs::exists(out));
}

TEST(ExperimentConfig, HorizonMismatchRejected)
{
    json doc = small_lq(scratch("mismatch"));
    doc["N_T"] = 12;
    EXPECT_THROW(ExperimentConfig::from_json(doc).validate(), ContractViolation);
}

TEST(ExperimentConfig, UnknownKeyAndWrongTypeRejected)
{
    json doc = small_lq(scratch("unknown"));
    doc["particles"] = 10;
    EXPECT_THROW(ExperimentConfig::from_json(doc), ContractViolation);
    doc = small_lq(scratch("unknown"));
    doc["S"] = "many";
    EXPECT_THROW(ExperimentConfig::from_json(doc), ContractViolation);
    doc = small_lq(scratch("unknown"));
    doc["method"] = "newton";
    EXPECT_THROW(ExperimentConfig::from_json(doc), ContractViolation);
}

TEST(ExperimentConfig, FullSolutionNeedsOneDimensionalProblem)
{
    json doc = small_lq(scratch("full"));
    doc["method"] = "full_solution";
    EXPECT_THROW(ExperimentConfig::from_json(doc).validate(), ContractViolation);
}

TEST(ExperimentConfig, DefaultsAndRoundTrip)
{
    const ExperimentConfig c = ExperimentConfig::from_json({{"problem", "dubins"}, {"dt", 0.02}});
    EXPECT_EQ(c.steps, 50u);
    EXPECT_EQ(c.feedback.optimizer.rho, 0.2);
    const ExperimentConfig again = ExperimentConfig::from_json(c.to_json());
    EXPECT_EQ(again.to_json(), c.to_json());
}

TEST(ExperimentConfig, ShippedConfigsLoad)
{
    for (const auto& entry : fs::directory_iterator(DDFC_CONFIG_DIR)) {
        if (entry.path().extension() == ".json") {
            EXPECT_NO_THROW(ExperimentConfig::load(entry.path()).validate()) << entry.path();
        }
    }
}

TEST(Csv, RoundTripIsExact)
{
    const fs::path dir = scratch("csv");
    fs::create_directories(dir);
    Matrix rows = Matrix::Random(7, 3);
    rows(0, 0) = 1.0 / 3.0;
    rows(1, 1) = -2.5e-300;
    rows(2, 2) = 123456789.123456789;
    write_csv(dir / "a.csv", {"t", "x_1", "x_2"}, rows);
    const CsvTable table = read_csv(dir / "a.csv");
    EXPECT_EQ(table.header, (std::vector<std::string>{"t", "x_1", "x_2"}));
    EXPECT_EQ(table.rows, rows);

    const Vector times = Vector::LinSpaced(4, 0.0, 0.3);
    const Matrix cols = Matrix::Random(2, 4);
    write_series(dir / "s.csv", "u", times, cols);
    const CsvTable series = read_csv(dir / "s.csv");
    EXPECT_EQ(series.header, (std::vector<std::string>{"t", "u_1", "u_2"}));
    EXPECT_EQ(series.rows.col(0), times);
    EXPECT_EQ(series.rows.rightCols(2), cols.transpose());
    EXPECT_THROW(write_csv(dir / "b.csv", {"t"}, rows), ContractViolation);
}

TEST(Csv, InterpolateSeries)
{
    const Vector x = (Vector(3) << 0.0, 1.0, 2.0).finished();
    const Vector y = (Vector(3) << 0.0, 10.0, 30.0).finished();
    const Vector at = (Vector(5) << -1.0, 0.25, 1.0, 1.5, 3.0).finished();
    const Vector out = interpolate_series(x, y, at);
    EXPECT_EQ(out, (Vector(5) << 0.0, 2.5, 10.0, 20.0, 30.0).finished());
}

TEST(RunExperiment, WritesArtifactsAndMetrics)
{
    const fs::path out = scratch("run");
    const ExperimentSummary s = run_experiment(ExperimentConfig::from_json(small_lq(out)));
    ASSERT_TRUE(s.ok());
    for (const char* f : {"control.csv", "control_reference.csv", "state_true.csv", "state_estimate.csv",
                          "observations.csv", "cost.csv"}) {
        EXPECT_TRUE(fs::exists(out / "repeat_000" / f)) << f;
        EXPECT_TRUE(fs::exists(out / "repeat_001" / f)) << f;
    }
    const json m = json::parse(slurp(out / "metrics.json"));
    for (const char* k : {"rmse_accumulated", "cost_final_mean", "wall_time_mean_s", "config_echo"}) {
        EXPECT_TRUE(m.contains(k)) << k;
    }
    EXPECT_EQ(m["repeats"], 2);
    const CsvTable control = read_csv(out / "repeat_001" / "control.csv");
    EXPECT_EQ(control.rows.rows(), 10);
    EXPECT_EQ(control.rows.rightCols(1).transpose(), s.runs[1].controls);
}

TEST(RunExperiment, FixedSeedIsByteReproducible)
{
    json doc = small_lq(scratch("det_a"));
    doc["workers"] = 2;
    run_experiment(ExperimentConfig::from_json(doc));
    doc["output_dir"] = scratch("det_b").string();
    run_experiment(ExperimentConfig::from_json(doc));
    for (const char* f : {"control.csv", "state_true.csv", "state_estimate.csv", "observations.csv", "cost.csv"}) {
        for (const char* r : {"repeat_000", "repeat_001"}) {
            const std::string a = slurp(scratch_root() / "det_a" / r / f);
            EXPECT_FALSE(a.empty());
            EXPECT_EQ(a, slurp(scratch_root() / "det_b" / r / f)) << r << "/" << f;
        }
    }
}

TEST(RunExperiment, DivergenceWritesErrorManifest)
{
    const fs::path out = scratch("diverge");
    json doc = small_lq(out);
    doc["rho"] = 1e8;
    doc["repeats"] = 1;
    const ExperimentSummary s = run_experiment(ExperimentConfig::from_json(doc));
    ASSERT_FALSE(s.ok());
    EXPECT_EQ(s.failures.front().kind, "divergence");
    EXPECT_TRUE(fs::exists(out / "errors.json"));
    EXPECT_FALSE(fs::exists(out / "metrics.json"));
    const json e = json::parse(slurp(out / "errors.json"));
    EXPECT_EQ(e["failures"][0]["repeat"], 0);
}

TEST(CompareMethods, SelfComparisonIsIdentical)
{
    const fs::path out = scratch("compare");
    const ExperimentConfig c = ExperimentConfig::from_json(small_lq(out / "unused"));
    const ComparisonReport r = compare_methods(c, c, out);
    EXPECT_EQ(r.cost_a, r.cost_b);
    EXPECT_TRUE(fs::exists(out / "comparison.csv"));
    EXPECT_TRUE(fs::exists(out / "comparison.json"));
}

TEST(CompareMethods, MismatchedHorizonRejected)
{
    const fs::path out = scratch("compare_bad");
    const ExperimentConfig a = ExperimentConfig::from_json(small_lq(out / "a"));
    json doc = small_lq(out / "b");
    doc["T"] = 0.4;
    const ExperimentConfig b = ExperimentConfig::from_json(doc);
    EXPECT_THROW(compare_methods(a, b, out), ContractViolation);
}

TEST(Cli, ExitCodes)
{
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    std::ofstream(dir / "ok.json") << small_lq(dir / "ok_out").dump();
    json bad = small_lq(dir / "bad_out");
    bad["N_T"] = 3;
    std::ofstream(dir / "bad.json") << bad.dump();
    json diverge = small_lq(dir / "div_out");
    diverge["rho"] = 1e8;
    std::ofstream(dir / "div.json") << diverge.dump();

    EXPECT_EQ(run_cli("validate --config " + (dir / "ok.json").string()), 0);
    EXPECT_EQ(run_cli("validate --config " + (dir / "bad.json").string()), 1);
    EXPECT_EQ(run_cli("run --config " + (dir / "ok.json").string() + " --repeats 1 --seed 9"), 0);
    EXPECT_TRUE(fs::exists(dir / "ok_out" / "metrics.json"));
    EXPECT_EQ(run_cli("run --config " + (dir / "div.json").string()), 2);
    EXPECT_TRUE(fs::exists(dir / "div_out" / "errors.json"));
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string()), 1);
}
