#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hsa/random.hpp"
#include "hsa/timeseries.hpp"

using namespace hsa::timeseries;

namespace {

Series univariate(std::vector<double> values) {
    std::vector<Record> recs;
    for (std::size_t i = 0; i < values.size(); ++i) recs.push_back({static_cast<std::int64_t>(i), {values[i]}});
    return Series(std::move(recs), 0);
}

Series random_series(std::mt19937_64& rng, std::size_t length, std::size_t vars) {
    std::vector<Record> recs;
    for (std::size_t i = 0; i < length; ++i) {
        Record r{static_cast<std::int64_t>(i * 10), {}};
        for (std::size_t v = 0; v < vars; ++v) r.features.push_back(100.0 * (hsa::unit_uniform(rng) - 0.5) + 7.0 * v);
        recs.push_back(std::move(r));
    }
    return Series(std::move(recs), vars - 1);
}

std::filesystem::path temp_file(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / ("hsa_ts_" + name);
    std::ofstream(path) << content;
    return path;
}

}  // namespace

TEST(Series, RejectsNonIncreasingTimestamps) {
    std::vector<Record> recs{{1, {1.0}}, {1, {2.0}}};
    EXPECT_THROW(Series(recs, 0), TimeSeriesError);
}

TEST(Series, RejectsRaggedRecords) {
    std::vector<Record> recs{{1, {1.0, 2.0}}, {2, {2.0}}};
    EXPECT_THROW(Series(recs, 0), TimeSeriesError);
}

TEST(FitScaler, ExtremesOfColumn) {
    const auto s = fit_scaler(univariate({2, 4, 6}));
    EXPECT_EQ(s.min()[0], 2.0);
    EXPECT_EQ(s.max()[0], 6.0);
}

TEST(FitScaler, ConstantColumnMapsToZero) {
    const auto series = univariate({5, 5, 5});
    const auto s = fit_scaler(series);
    EXPECT_EQ(s.min()[0], 5.0);
    EXPECT_EQ(s.max()[0], 5.0);
    const auto t = transform(s, series);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].features[0], 0.0);
}

TEST(FitScaler, UnitColumnIsIdentity) {
    const auto series = univariate({0, 1});
    const auto t = transform(fit_scaler(series), series);
    EXPECT_EQ(t[0].features[0], 0.0);
    EXPECT_EQ(t[1].features[0], 1.0);
}

TEST(FitScaler, Errors) {
    EXPECT_THROW((void)fit_scaler(Series{}), TimeSeriesError);
    EXPECT_THROW((void)fit_scaler(univariate({1.0, NAN})), TimeSeriesError);
}

TEST(Transform, LinearMap) {
    const auto series = univariate({2, 4, 6});
    const auto t = transform(MinMaxScaler({2.0}, {6.0}), series);
    EXPECT_DOUBLE_EQ(t[0].features[0], 0.0);
    EXPECT_DOUBLE_EQ(t[1].features[0], 0.5);
    EXPECT_DOUBLE_EQ(t[2].features[0], 1.0);
}

TEST(Transform, NoClippingOutsideFitRange) {
    const auto t = transform(MinMaxScaler({2.0}, {6.0}), univariate({8}));
    EXPECT_DOUBLE_EQ(t[0].features[0], 1.5);
}

TEST(Transform, DimensionMismatch) {
    EXPECT_THROW((void)transform(MinMaxScaler({0.0, 0.0}, {1.0, 1.0}), univariate({1, 2})), TimeSeriesError);
}

TEST(Transform, RoundTripProperty) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto length = 2 + static_cast<std::size_t>(hsa::unit_uniform(rng) * 300);
        const auto series = random_series(rng, length, 5);
        const auto scaler = fit_scaler(series);
        const auto scaled = transform(scaler, series);
        const auto back = inverse_transform(scaler, scaled);
        for (std::size_t i = 0; i < series.size(); ++i) {
            for (std::size_t v = 0; v < 5; ++v) {
                EXPECT_NEAR(back[i].features[v], series[i].features[v], 1e-9);
                EXPECT_GE(scaled[i].features[v], 0.0);
                EXPECT_LE(scaled[i].features[v], 1.0);
            }
        }
    }
}

TEST(MakeSupervised, UnivariateLagFive) {
    const auto set = make_supervised(univariate({1, 2, 3, 4, 5, 6, 7}), 5);
    ASSERT_EQ(set.size(), 2u);
    const std::vector<double> row0(set.inputs.row(0).begin(), set.inputs.row(0).end());
    const std::vector<double> row1(set.inputs.row(1).begin(), set.inputs.row(1).end());
    EXPECT_EQ(row0, (std::vector<double>{1, 2, 3, 4, 5}));
    EXPECT_EQ(row1, (std::vector<double>{2, 3, 4, 5, 6}));
    EXPECT_EQ(set.targets, (std::vector<double>{6, 7}));
}

TEST(MakeSupervised, FiveVariablesLengthSix) {
    // Variable v at step t holds 10*t + v, so every cell is identifiable.
    std::vector<Record> recs;
    for (int t = 0; t < 6; ++t) {
        Record r{t, {}};
        for (int v = 0; v < 5; ++v) r.features.push_back(10.0 * t + v);
        recs.push_back(r);
    }
    const auto set = make_supervised(Series(recs, 4), 5);
    ASSERT_EQ(set.size(), 1u);
    ASSERT_EQ(set.inputs.cols(), 25u);
    for (int t = 0; t < 5; ++t)
        for (int v = 0; v < 5; ++v) EXPECT_EQ(set.inputs(0, t * 5 + v), 10.0 * t + v);
    EXPECT_EQ(set.targets[0], 54.0);
}

TEST(MakeSupervised, TooShort) { EXPECT_THROW((void)make_supervised(univariate({1, 2, 3, 4, 5}), 5), TimeSeriesError); }

TEST(MakeSupervised, SampleCountProperty) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto lag = 1 + static_cast<std::size_t>(hsa::unit_uniform(rng) * 8);
        const auto length = lag + 1 + static_cast<std::size_t>(hsa::unit_uniform(rng) * 200);
        const auto series = random_series(rng, length, 3);
        const auto set = make_supervised(series, lag);
        ASSERT_EQ(set.size(), length - lag);
        const std::size_t j = set.size() - 1;
        EXPECT_EQ(set.targets[j], series.target(j + lag));
        EXPECT_EQ(set.inputs(j, (lag - 1) * 3 + 2), series[j + lag - 1].features[2]);
    }
}

TEST(Split, PaperRatio) {
    std::vector<double> v(50'000, 1.0);
    std::vector<Record> recs;
    for (std::size_t i = 0; i < v.size(); ++i) recs.push_back({static_cast<std::int64_t>(i), {v[i]}});
    const auto [train, test] = split(Series(recs, 0), 0.4);
    EXPECT_EQ(train.size(), 20'000u);
    EXPECT_EQ(test.size(), 30'000u);
}

TEST(Split, FloorRule) {
    auto [a, b] = split(univariate({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), 0.5);
    EXPECT_EQ(a.size(), 5u);
    EXPECT_EQ(b.size(), 5u);
    auto [c, d] = split(univariate({1, 2, 3}), 0.4);
    EXPECT_EQ(c.size(), 1u);
    EXPECT_EQ(d.size(), 2u);
    EXPECT_THROW((void)split(univariate({1, 2}), 1.0), TimeSeriesError);
    EXPECT_THROW((void)split(univariate({1, 2}), 0.0), TimeSeriesError);
}

TEST(Split, PreservesOrderAndCountProperty) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const auto length = 1 + static_cast<std::size_t>(hsa::unit_uniform(rng) * 500);
        const double frac = 0.01 + 0.98 * hsa::unit_uniform(rng);
        const auto series = random_series(rng, length, 2);
        const auto [a, b] = split(series, frac);
        ASSERT_EQ(a.size() + b.size(), length);
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].timestamp, series[i].timestamp);
        for (std::size_t i = 0; i < b.size(); ++i) EXPECT_EQ(b[i].timestamp, series[a.size() + i].timestamp);
    }
}

TEST(Csv, ReadsTicksAndDesignatedTarget) {
    const auto path = temp_file("ok.csv", "timestamp,a,b,c\n1,1.5,2,3\n2,4,5,6\n");
    CsvSchema schema;
    schema.target_column = "b";
    const auto s = read_csv(path.string(), schema);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.variable_count(), 3u);
    EXPECT_EQ(s.target(1), 5.0);
    EXPECT_EQ(s[0].features[0], 1.5);
}

TEST(Csv, Iso8601Timestamps) {
    EXPECT_EQ(parse_iso8601("1970-01-01T00:00:00Z"), 0);
    EXPECT_EQ(parse_iso8601("2017-01-01T00:10:00"), 1483229400);
    EXPECT_EQ(parse_iso8601("2017-01-01T01:10:00+01:00"), 1483229400);
    EXPECT_THROW((void)parse_iso8601("2017-13-01T00:00:00"), TimeSeriesError);
    const auto path = temp_file("iso.csv", "Date_time,x\n2017-01-01T00:00:00Z,1\n2017-01-01T00:10:00Z,2\n");
    CsvSchema schema;
    schema.timestamp_column = "Date_time";
    schema.timestamp_format = TimestampFormat::kIso8601;
    const auto s = read_csv(path.string(), schema);
    EXPECT_EQ(s[1].timestamp - s[0].timestamp, 600);
}

TEST(Csv, ErrorsCarryLineNumbers) {
    const auto shuffled = temp_file("shuffled.csv", "timestamp,x\n1,1\n3,2\n2,3\n");
    try {
        (void)read_csv(shuffled.string(), {});
        FAIL() << "expected an error";
    } catch (const TimeSeriesError& e) {
        EXPECT_NE(std::string(e.what()).find(":4:"), std::string::npos) << e.what();
    }
    const auto bad = temp_file("bad.csv", "timestamp,x\n1,1\n2,abc\n");
    EXPECT_THROW((void)read_csv(bad.string(), {}), TimeSeriesError);
    const auto missing = temp_file("missing.csv", "time,x\n1,1\n");
    EXPECT_THROW((void)read_csv(missing.string(), {}), TimeSeriesError);
    const auto empty = temp_file("empty.csv", "");
    EXPECT_THROW((void)read_csv(empty.string(), {}), TimeSeriesError);
    const auto nan = temp_file("nan.csv", "timestamp,x\n1,nan\n");
    EXPECT_THROW((void)read_csv(nan.string(), {}), TimeSeriesError);
}

TEST(Csv, WriteThenReadIsExact) {
    std::mt19937_64 rng(3);
    const auto series = random_series(rng, 40, 5);
    const auto path = std::filesystem::temp_directory_path() / "hsa_ts_roundtrip.csv";
    write_csv(path.string(), series);
    const auto back = read_csv(path.string(), {});
    ASSERT_EQ(back.size(), series.size());
    for (std::size_t i = 0; i < series.size(); ++i) EXPECT_EQ(back[i].features, series[i].features);
}
