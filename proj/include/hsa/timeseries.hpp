#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hsa::timeseries {

class TimeSeriesError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultVariableCount = 5;
inline constexpr std::size_t kDefaultLag = 5;

/// One multivariate observation. The prediction target is one of the
/// feature columns, selected by the owning Series.
struct Record {
    std::int64_t timestamp = 0;
    std::vector<double> features;
};

struct SeriesMetadata {
    std::string source;
    std::uint64_t seed = 0;
    std::vector<std::string> variable_names;
};

/// Ordered, strictly increasing sequence of records with a designated
/// target column. Immutable after construction.
class Series {
public:
    Series() = default;
    Series(std::vector<Record> records, std::size_t target_index, SeriesMetadata metadata = {});

    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] std::size_t variable_count() const noexcept { return variable_count_; }
    [[nodiscard]] std::size_t target_index() const noexcept { return target_index_; }
    [[nodiscard]] const std::vector<Record>& records() const noexcept { return records_; }
    [[nodiscard]] const Record& operator[](std::size_t i) const { return records_[i]; }
    [[nodiscard]] double target(std::size_t i) const { return records_[i].features[target_index_]; }
    [[nodiscard]] std::vector<double> target_column() const;
    [[nodiscard]] const SeriesMetadata& metadata() const noexcept { return metadata_; }

    /// Records [begin, end) as a new series with the same target and metadata.
    [[nodiscard]] Series slice(std::size_t begin, std::size_t end) const;

private:
    std::vector<Record> records_;
    std::size_t target_index_ = 0;
    std::size_t variable_count_ = 0;
    SeriesMetadata metadata_;
};

/// Per-feature min-max scaling to [0, 1]. Constant features map to 0.
/// Values outside the fitted range are extrapolated, not clipped.
class MinMaxScaler {
public:
    MinMaxScaler() = default;
    MinMaxScaler(std::vector<double> min, std::vector<double> max);

    [[nodiscard]] std::size_t variable_count() const noexcept { return min_.size(); }
    [[nodiscard]] const std::vector<double>& min() const noexcept { return min_; }
    [[nodiscard]] const std::vector<double>& max() const noexcept { return max_; }

    [[nodiscard]] double scale_value(std::size_t feature, double value) const;
    [[nodiscard]] double unscale_value(std::size_t feature, double value) const;

private:
    std::vector<double> min_;
    std::vector<double> max_;
};

[[nodiscard]] MinMaxScaler fit_scaler(const Series& series);
[[nodiscard]] Series transform(const MinMaxScaler& scaler, const Series& series);
[[nodiscard]] Series inverse_transform(const MinMaxScaler& scaler, const Series& series);

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    [[nodiscard]] double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    [[nodiscard]] double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Lagged supervised view of a series. Row j holds timesteps j..j+lag-1
/// flattened timestep-major (all variables of the oldest step first);
/// target j is the target column at timestep j+lag.
struct SupervisedSet {
    Matrix inputs;
    std::vector<double> targets;
    std::size_t lag = 0;
    std::size_t variable_count = 0;

    [[nodiscard]] std::size_t size() const noexcept { return targets.size(); }
    [[nodiscard]] bool empty() const noexcept { return targets.empty(); }
};

[[nodiscard]] SupervisedSet make_supervised(const Series& series, std::size_t lag);

/// Chronological split; the first part receives floor(fraction * size) records.
[[nodiscard]] std::pair<Series, Series> split(const Series& series, double train_fraction);

/// Throttled batch of records; the unit of pipeline work.
struct TimeWindow {
    std::size_t index = 0;
    std::vector<Record> records;
    std::int64_t open_tick = 0;
    std::int64_t close_tick = 0;
};

enum class TimestampFormat { kIntegerTicks, kIso8601 };

struct CsvSchema {
    std::string timestamp_column = "timestamp";
    std::vector<std::string> variable_columns;  // empty: every non-timestamp column
    std::string target_column;                  // empty: last variable column
    TimestampFormat timestamp_format = TimestampFormat::kIntegerTicks;
};

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm|-hh:mm]" to epoch seconds.
[[nodiscard]] std::int64_t parse_iso8601(const std::string& text);

[[nodiscard]] Series read_csv(const std::string& path, const CsvSchema& schema);
void write_csv(const std::string& path, const Series& series);

/// Shortest round-trip decimal form of a double.
[[nodiscard]] std::string format_double(double value);
[[nodiscard]] double parse_double(std::string_view text);

}  // namespace hsa::timeseries
