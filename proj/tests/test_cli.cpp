#include "tipping/tipping.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <random>

using namespace tipping;
namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* p = std::getenv("TIPPING_CLI");
    return p ? p : "tipping";
}

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("tipping_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Runs the CLI with `args`, stdout and stderr to <dir>/log.txt; returns the exit status.
int run(const fs::path& dir, const std::string& args) {
    const std::string cmd = "'" + cli() + "' " + args + " > '" + (dir / "log.txt").string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string log_of(const fs::path& dir) { return read_text(dir / "log.txt"); }

std::vector<std::vector<std::string>> csv_rows(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    const auto text = read_text(path);
    for (const auto line : detail::split_lines(text)) {
        std::vector<std::string> fields;
        for (const auto f : detail::split_fields(line)) fields.emplace_back(f);
        rows.push_back(std::move(fields));
    }
    return rows;
}

void write_series(const fs::path& path, const std::vector<double>& v, double dt = 1.0) {
    const Matrix m = Eigen::Map<const Matrix>(v.data(), Eigen::Index(v.size()), 1);
    write_series_csv(path, TimeSeries(m, 0.0, dt, dt == 1.0));
}

// measures.csv with one DEJ flow row per score, t_mid = index.
void write_measures(const fs::path& path, const std::vector<double>& re) {
    MeasureSeries s{MeasureKind::dej, ReservoirMode::continuous, {}};
    for (std::size_t i = 0; i < re.size(); ++i) {
        MeasurePoint p;
        p.window = i;
        p.t_mid = double(i);
        p.value = Complex(re[i], 0.0);
        s.points.push_back(p);
    }
    atomic_write(path, measures_to_csv({s}));
}

}  // namespace

TEST(CliSimulate, FoldPresetWritesTwoColumns) {
    const auto dir = fresh_dir("sim_fold");
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' --no-plots simulate --preset fold_fig2"), 0) << log_of(dir);
    const auto rows = csv_rows(dir / "series.csv");
    ASSERT_EQ(rows.size(), 20001u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "x1"}));
    EXPECT_EQ(rows[1].size(), 2u);
    EXPECT_TRUE(fs::exists(dir / "spec.json"));
    EXPECT_TRUE(fs::exists(dir / "run.json"));
}

TEST(CliSimulate, LorenzPresetWritesFourColumns) {
    const auto dir = fresh_dir("sim_lorenz");
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' simulate --preset lorenz_near_eq"), 0) << log_of(dir);
    const auto rows = csv_rows(dir / "series.csv");
    EXPECT_EQ(rows[0], (std::vector<std::string>{"t", "x1", "x2", "x3"}));
    EXPECT_TRUE(fs::exists(dir / "series.svg"));
}

TEST(CliSimulate, UnknownPresetIsAConfigError) {
    const auto dir = fresh_dir("sim_bad");
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' simulate --preset no_such_preset"), 1);
    EXPECT_NE(log_of(dir).find("fold_fig2"), std::string::npos);
}

TEST(CliSimulate, UnknownOptionIsAConfigError) {
    const auto dir = fresh_dir("sim_flag");
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' simulate --presett fold_fig2"), 1);
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "'"), 1);
}

TEST(CliAnalyze, ShortSeriesGivesTwoWindows) {
    const auto dir = fresh_dir("an_short");
    std::vector<double> v(50);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 + 0.1 * std::sin(0.7 * double(i));
    write_series(dir / "in.csv", v);
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' analyze --input '" + (dir / "in.csv").string() +
                           "' --d 40 --k 5 --n 20"),
              0)
        << log_of(dir);
    EXPECT_EQ(csv_rows(dir / "measures.csv").size(), 3u);
    EXPECT_TRUE(fs::exists(dir / "forecast.json"));
    EXPECT_TRUE(fs::exists(dir / "hyperparams.json"));
}

TEST(CliAnalyze, ConstantSeriesDoesNotWarn) {
    const auto dir = fresh_dir("an_const");
    write_series(dir / "in.csv", std::vector<double>(10000, 0.4));
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' --no-plots analyze --input '" + (dir / "in.csv").string() + "'"),
              0)
        << log_of(dir);
    const auto f = read_json(dir / "forecast.json");
    EXPECT_FALSE(f["warned"].get<bool>());
    EXPECT_TRUE(f["t_hat_p"].is_null());
    const auto rows = csv_rows(dir / "measures.csv");
    ASSERT_GT(rows.size(), 1u);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][5], "") << i;
}

TEST(CliAnalyze, FoldEndToEnd) {
    const auto dir = fresh_dir("an_fold");
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' analyze --preset fold_fig2 --t-p auto"), 0) << log_of(dir);
    const auto f = read_json(dir / "forecast.json");
    EXPECT_TRUE(f["warned"].get<bool>());
    EXPECT_EQ(f["bifurcation_class"].get<std::string>(), "fold_or_pitchfork");
    ASSERT_TRUE(f["t_hat_p"].is_number());
    EXPECT_TRUE(fs::exists(dir / "measures.svg"));
}

TEST(CliAnalyze, MissingInputIsAnIoError) {
    const auto dir = fresh_dir("an_missing");
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' analyze --input '" + (dir / "absent.csv").string() + "'"), 3);
}

TEST(CliAnalyze, MalformedCsvIsAnIoError) {
    const auto dir = fresh_dir("an_malformed");
    atomic_write(dir / "in.csv", "t,x1\n0,1\n1,2\n3,4\n");
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' analyze --input '" + (dir / "in.csv").string() + "'"), 3);
}

TEST(CliAnalyze, WindowLongerThanSeriesIsAConfigError) {
    const auto dir = fresh_dir("an_window");
    write_series(dir / "in.csv", std::vector<double>(30, 0.1));
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' analyze --input '" + (dir / "in.csv").string() + "' --d 40"), 1);
}

TEST(CliEvaluate, FoldRowsAreReservoirThenBaselines) {
    const auto dir = fresh_dir("ev_fold");
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' evaluate --preset fold_fig2"), 0) << log_of(dir);
    const auto rows = csv_rows(dir / "comparison.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0][0], "method");
    EXPECT_EQ(rows[1][0], "DEJ");
    EXPECT_EQ(rows[2][0], "variance");
    EXPECT_EQ(rows[3][0], "lag1_ac");
    EXPECT_EQ(rows[4][0], "skewness");
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_FALSE(rows[i][1].empty()) << rows[i][0];
    EXPECT_TRUE(fs::exists(dir / "roc.csv"));
    EXPECT_TRUE(fs::exists(dir / "roc.svg"));
}

TEST(CliEvaluate, PerfectSeparationHasUnitArea) {
    const auto dir = fresh_dir("ev_perfect");
    std::vector<double> re(100);
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = -1.0 + 0.009 * double(i);
    write_measures(dir / "m.csv", re);
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' evaluate --measures '" + (dir / "m.csv").string() +
                           "' --mode continuous --methods DEJ --t-p 1000"),
              0)
        << log_of(dir);
    const auto j = read_json(dir / "comparison.json");
    EXPECT_EQ(j[0]["auc"].get<double>(), 1.0);
}

TEST(CliEvaluate, ShuffledScoresAreNearChance) {
    const auto dir = fresh_dir("ev_shuffled");
    std::vector<double> re(400);
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = -1.0 + 0.002 * double(i);
    std::mt19937_64 rng(43);
    std::shuffle(re.begin(), re.end(), rng);
    write_measures(dir / "m.csv", re);
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' evaluate --measures '" + (dir / "m.csv").string() +
                           "' --mode continuous --methods DEJ --t-p 1000"),
              0)
        << log_of(dir);
    const double auc = read_json(dir / "comparison.json")[0]["auc"].get<double>();
    EXPECT_GE(auc, 0.4);
    EXPECT_LE(auc, 0.6);
}

TEST(CliEvaluate, DegenerateLabelsExitNumeric) {
    const auto dir = fresh_dir("ev_degenerate");
    write_measures(dir / "m.csv", std::vector<double>(50, -0.5));
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' evaluate --measures '" + (dir / "m.csv").string() +
                           "' --mode continuous --methods DEJ --t-p 1000"),
              2);
    EXPECT_TRUE(fs::exists(dir / "comparison.csv"));
}

TEST(CliLeadtime, FoldCurveHasTenRowsAndAPositiveLead) {
    const auto dir = fresh_dir("lt_fold");
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' leadtime --preset fold_fig2 --t-p auto --cutoff-count 10"), 0)
        << log_of(dir);
    const auto rows = csv_rows(dir / "leadtime.csv");
    ASSERT_EQ(rows.size(), 11u);
    EXPECT_EQ(rows[0][0], "cutoff");
    EXPECT_NE(log_of(dir).find("max admissible lead time"), std::string::npos);
    EXPECT_EQ(log_of(dir).find("max admissible lead time none"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "leadtime.svg"));
}

TEST(CliLeadtime, CutoffBeyondDataIsNoted) {
    const auto dir = fresh_dir("lt_beyond");
    std::vector<double> re(40);
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = -1.0 + 0.02 * double(i);
    write_measures(dir / "m.csv", re);
    ASSERT_EQ(run(dir, "--out '" + dir.string() + "' --no-plots leadtime --measures '" + (dir / "m.csv").string() +
                           "' --mode continuous --t-p 50 --duration 50 --cutoffs 20,30,100"),
              0)
        << log_of(dir);
    const auto rows = csv_rows(dir / "leadtime.csv");
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[3][0], "100");
    EXPECT_FALSE(rows[3][4].empty());
    EXPECT_FALSE(rows[1][2].empty());
}

TEST(CliLeadtime, OneCutoffIsAConfigError) {
    const auto dir = fresh_dir("lt_one");
    write_measures(dir / "m.csv", std::vector<double>(20, -0.5));
    EXPECT_EQ(run(dir, "--out '" + dir.string() + "' leadtime --measures '" + (dir / "m.csv").string() +
                           "' --mode continuous --t-p 50 --duration 50 --cutoffs 10"),
              1);
}

TEST(CliReplay, ConfigReproducesOutputsByteForByte) {
    const auto a = fresh_dir("replay_a");
    const auto b = fresh_dir("replay_b");
    ASSERT_EQ(run(a, "--out '" + a.string() + "' --seed 5 --no-plots analyze --preset hopf_fig2 --d 2000 --k 1000"), 0)
        << log_of(a);
    ASSERT_EQ(run(b, "--config '" + (a / "run.json").string() + "' --out '" + b.string() + "'"), 0) << log_of(b);
    EXPECT_EQ(read_text(a / "measures.csv"), read_text(b / "measures.csv"));
    EXPECT_EQ(read_text(a / "forecast.json"), read_text(b / "forecast.json"));
    EXPECT_EQ(read_text(a / "hyperparams.json"), read_text(b / "hyperparams.json"));
}

TEST(CliReplay, SimulatedCsvAnalyzesLikeThePreset) {
    const auto sim = fresh_dir("rt_sim");
    const auto direct = fresh_dir("rt_direct");
    const auto csv = fresh_dir("rt_csv");
    ASSERT_EQ(run(sim, "--out '" + sim.string() + "' --no-plots simulate --preset fold_fig2"), 0) << log_of(sim);
    ASSERT_EQ(run(direct, "--out '" + direct.string() + "' --no-plots analyze --preset fold_fig2"), 0)
        << log_of(direct);
    ASSERT_EQ(run(csv, "--out '" + csv.string() + "' --no-plots analyze --input '" + (sim / "series.csv").string() +
                           "' --tuned-for fold_fig2"),
              0)
        << log_of(csv);
    EXPECT_EQ(read_text(direct / "measures.csv"), read_text(csv / "measures.csv"));
}

TEST(CliReplay, InvalidConfigIsAConfigError) {
    const auto dir = fresh_dir("replay_bad");
    atomic_write(dir / "run.json", "{ broken");
    EXPECT_EQ(run(dir, "--config '" + (dir / "run.json").string() + "'"), 1);
}
