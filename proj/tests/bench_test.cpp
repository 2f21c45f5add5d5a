#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hsa/bench.hpp"
#include "json.hpp"

using namespace hsa::bench;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

ScenarioConfig small(std::size_t windows = 6) {
    ScenarioConfig c;
    c.windows = windows;
    c.seed = 4;
    c.weightings = {hsa::pipeline::WeightingMode::dynamic(), hsa::pipeline::WeightingMode::fixed(0.3, 0.7)};
    return c;
}

// Quartile by sorting a copy and interpolating at (n-1)p.
double oracle_quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1) * p;
    const auto i = static_cast<std::size_t>(h);
    return i + 1 < v.size() ? v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]) : v[i];
}

}  // namespace

TEST(Boxplot, Examples) {
    const auto a = boxplot_stats({5, 3, 1, 4, 2});
    EXPECT_EQ(a.median, 3);
    EXPECT_EQ(a.q1, 2);
    EXPECT_EQ(a.q3, 4);
    EXPECT_EQ(a.whisker_low, 1);
    EXPECT_EQ(a.whisker_high, 5);
    EXPECT_TRUE(a.outliers.empty());

    const auto c = boxplot_stats({7, 7, 7});
    EXPECT_EQ(c.median, 7);
    EXPECT_EQ(c.q1, 7);
    EXPECT_EQ(c.whisker_high, 7);
    EXPECT_TRUE(c.outliers.empty());

    // q1 1.75, q3 27.25, upper fence 65.5.
    const auto o = boxplot_stats({1, 2, 3, 100});
    EXPECT_DOUBLE_EQ(o.q1, 1.75);
    EXPECT_DOUBLE_EQ(o.q3, 27.25);
    EXPECT_EQ(o.outliers, std::vector<double>{100});
    EXPECT_EQ(o.whisker_high, 3);
    EXPECT_THROW((void)boxplot_stats({}), std::invalid_argument);
}

TEST(Boxplot, MatchesOracleOnRandomSeries) {
    std::mt19937_64 rng(2);
    std::lognormal_distribution<double> d(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> v(1 + rng() % 60);
        for (auto& x : v) x = d(rng);
        const auto b = boxplot_stats(v);
        EXPECT_DOUBLE_EQ(b.median, oracle_quantile(v, 0.5));
        EXPECT_DOUBLE_EQ(b.q1, oracle_quantile(v, 0.25));
        EXPECT_DOUBLE_EQ(b.q3, oracle_quantile(v, 0.75));
        const double lo = b.q1 - 1.5 * (b.q3 - b.q1), hi = b.q3 + 1.5 * (b.q3 - b.q1);
        std::size_t inside = 0;
        for (double x : v) {
            if (x >= lo && x <= hi) {
                ++inside;
                EXPECT_GE(x, b.whisker_low);
                EXPECT_LE(x, b.whisker_high);
            }
        }
        EXPECT_EQ(inside + b.outliers.size(), v.size());
    }
}

TEST(BestApproach, TiesGoToHybridThenSpeed) {
    EXPECT_EQ(best_approach(1.0, 1.0, 1.0), Approach::kHybrid);
    EXPECT_EQ(best_approach(1.0, 1.0, 2.0), Approach::kSpeed);
    EXPECT_EQ(best_approach(1.0, 0.5, 2.0), Approach::kBatch);
    EXPECT_EQ(best_approach(std::nullopt, 0.5, 0.5), std::nullopt);
}

TEST(PercentageBest, ExamplesAndPartition) {
    std::vector<WindowReport> all(4);
    for (auto& r : all) r.best = Approach::kHybrid;
    const auto h = percentage_best(all);
    EXPECT_EQ(h.speed, 0.0);
    EXPECT_EQ(h.batch, 0.0);
    EXPECT_EQ(h.hybrid, 1.0);

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<WindowReport> rs(97);
    for (auto& r : rs) r.best = best_approach(u(rng), u(rng), u(rng));
    rs[3].best.reset();
    const auto f = percentage_best(rs);
    EXPECT_EQ(f.windows, 96u);
    EXPECT_NEAR(f.speed + f.batch + f.hybrid, 1.0, 1e-9);
}

TEST(Config, ValidationNamesTheKey) {
    auto c = small();
    c.windows = 0;
    try {
        c.validate();
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(std::string(e.what()).rfind("windows:", 0), 0u);
    }
    c = small();
    c.weightings.push_back(hsa::pipeline::WeightingMode::dynamic());
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.drift_ranges = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = small();
    c.calibration_file = "/no/such/calibration.json";
    EXPECT_THROW((void)session_config(c, c.weightings[0]), ConfigError);
}

TEST(Config, HashTracksEveryField) {
    const auto base = config_hash(small());
    auto c = small();
    c.seed = 5;
    EXPECT_NE(config_hash(c), base);
    c = small();
    c.fidelity = Fidelity::kPaper;
    EXPECT_NE(config_hash(c), base);
    c = small();
    c.out = "/tmp/elsewhere";
    EXPECT_EQ(config_hash(c), base);
}

TEST(Emit, CsvRoundTrip) {
    const auto r = run_scenario(small());
    std::vector<WindowReport> all;
    for (const auto& run : r.runs) all.insert(all.end(), run.reports.begin(), run.reports.end());
    const auto text = windows_csv(all);
    const auto back = parse_windows_csv(text);
    ASSERT_EQ(back.size(), all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(back[i].weighting, all[i].weighting);
        EXPECT_EQ(back[i].window, all[i].window);
        EXPECT_EQ(back[i].rmse_speed, all[i].rmse_speed);
        EXPECT_EQ(back[i].rmse_hybrid, all[i].rmse_hybrid);
        EXPECT_EQ(back[i].w_speed, all[i].w_speed);
        EXPECT_EQ(back[i].best, all[i].best);
        EXPECT_EQ(back[i].staleness, all[i].staleness);
        EXPECT_EQ(back[i].latency[2].computation_s, all[i].latency[2].computation_s);
    }
    EXPECT_EQ(windows_csv(back), text);
    EXPECT_THROW((void)parse_windows_csv("nope\n"), std::runtime_error);
}

TEST(Emit, SameSeedGivesByteIdenticalFiles) {
    const auto root = std::filesystem::temp_directory_path() / "hsa_bench_rerun";
    std::filesystem::remove_all(root);
    for (const char* name : {"a", "b"}) {
        auto c = small();
        c.out = root / name;
        (void)run_scenario(c);
    }
    for (const char* f : {"windows.csv", "summary.json", "percentage_best.csv", "boxplot.csv", "latency.csv"}) {
        const auto a = slurp(root / "a" / f);
        EXPECT_FALSE(a.empty()) << f;
        EXPECT_EQ(a, slurp(root / "b" / f)) << f;
    }
    const auto j = nlohmann::json::parse(slurp(root / "a" / "summary.json"));
    EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
    EXPECT_EQ(j.at("tie_rule"), std::string(kTieRule));
    EXPECT_EQ(j.at("runs").size(), 2u);
    EXPECT_TRUE(j.at("runs")[0].at("flags").contains("solver_nonconverged"));
    EXPECT_TRUE(j.at("runs")[0].at("flags").contains("solver_degenerate"));
    EXPECT_EQ(j.at("config").at("seed"), 4);
}

TEST(Emit, RerunIntoSameDirectoryReusesModels) {
    const auto dir = std::filesystem::temp_directory_path() / "hsa_bench_resume";
    std::filesystem::remove_all(dir);
    auto c = small();
    c.out = dir;
    const auto first = run_scenario(c);
    const auto csv = slurp(dir / "windows.csv");
    const auto second = run_scenario(c);
    EXPECT_EQ(second.runs[0].session.speed_models_trained, 0u);
    EXPECT_EQ(slurp(dir / "windows.csv"), csv);
}

TEST(Emit, UnwritableDirectory) {
    const auto file = std::filesystem::temp_directory_path() / "hsa_bench_not_a_dir";
    std::ofstream(file) << "x";
    ScenarioResult r{small(), {}, {}};
    EXPECT_THROW(emit(r, file / "sub"), std::runtime_error);
}

TEST(Scenario, SingleWindowIsOneFallbackRow) {
    auto c = small(1);
    c.weightings = {hsa::pipeline::WeightingMode::dynamic()};
    const auto r = run_scenario(c);
    ASSERT_EQ(r.runs[0].reports.size(), 1u);
    EXPECT_TRUE(r.runs[0].reports[0].flags.first_window_fallback);
    EXPECT_EQ(r.runs[0].reports[0].w_batch, 1.0);
}

TEST(Scenario, EveryWeightingSharesBatchAndSpeedPredictions) {
    const auto r = run_scenario(small());
    ASSERT_EQ(r.runs.size(), 2u);
    for (std::size_t i = 0; i < r.runs[0].reports.size(); ++i) {
        EXPECT_EQ(r.runs[0].reports[i].rmse_batch, r.runs[1].reports[i].rmse_batch);
        EXPECT_EQ(r.runs[0].reports[i].rmse_speed, r.runs[1].reports[i].rmse_speed);
    }
    // Static weights skip the solver, so the hybrid phase costs less.
    EXPECT_GT(r.runs[0].session.ledger.average(hsa::fabric::Phase::kHybridInference).computation_s,
              r.runs[1].session.ledger.average(hsa::fabric::Phase::kHybridInference).computation_s);
}

TEST(Scenario, CsvDataSource) {
    const auto path = std::filesystem::temp_directory_path() / "hsa_bench_data.csv";
    const auto base = hsa::drift::synth_base(hsa::drift::default_base_signal(3000, 1));
    hsa::timeseries::write_csv(path.string(), base);
    auto c = small(3);
    c.data = path.string();
    const auto r = run_scenario(c);
    EXPECT_EQ(r.runs[0].reports.size(), 3u);
}

TEST(Scenario, NoDriftDynamicHybridLeadsByMajority) {
    int wins = 0;
    for (std::uint64_t seed : {1, 2, 3}) {
        ScenarioConfig c;
        c.drift = hsa::drift::DriftKind::kNone;
        c.seed = seed;
        const auto f = run_scenario(c).runs[0].best;
        wins += f.hybrid > f.speed && f.hybrid > f.batch;
    }
    EXPECT_GE(wins, 2);
}
