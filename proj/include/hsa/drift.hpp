#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hsa/timeseries.hpp"

namespace hsa::drift {

struct Sinusoid {
    double amplitude = 0.0;
    double period = 1.0;  // in samples
    double phase = 0.0;   // radians
};

/// Stationary stand-in for a real sensor series: per-variable offset plus
/// a sum of sinusoids plus white Gaussian noise.
struct BaseSignalConfig {
    std::size_t length = 0;
    std::vector<double> offsets;                   // one per variable
    std::vector<std::vector<Sinusoid>> components; // one list per variable
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    std::int64_t start_timestamp = 0;
    std::int64_t timestamp_step = 600;  // seconds between records
    std::size_t target_index = 0;
    std::vector<std::string> variable_names;

    [[nodiscard]] std::size_t variable_count() const noexcept { return offsets.size(); }
};

/// Five temperature-like variables with a shared daily cycle (144 samples
/// at 10-minute spacing) and a slower weekly swell; target is the last.
[[nodiscard]] BaseSignalConfig default_base_signal(std::size_t length, std::uint64_t seed);

[[nodiscard]] timeseries::Series synth_base(const BaseSignalConfig& cfg);

/// Gradual: x'_i(t) = a_i t + x_i(t) + e.
/// Abrupt:  x'_i(t) = a_i t lambda(t) + x_i(t) + e, lambda piecewise constant.
struct DriftConfig {
    std::vector<double> alpha;              // per-variable drift per sample
    double epsilon_sigma = 0.0;             // i.i.d. Gaussian noise per value
    std::size_t change_points = 0;          // K
    std::vector<double> lambda_values{0.0, 1.0};
    std::uint64_t seed = 0;
};

enum class DriftKind { kNone, kGradual, kAbrupt };

/// alpha_i = total_ranges * range_i / length for every variable, so the
/// accumulated drift over the whole series is total_ranges base-signal ranges.
[[nodiscard]] DriftConfig default_drift_config(const timeseries::Series& base, DriftKind kind, std::uint64_t seed,
                                               double total_ranges = 1.0);

/// Same as default_drift_config but drifts only the target variable.
[[nodiscard]] DriftConfig target_only_drift_config(const timeseries::Series& base, DriftKind kind, std::uint64_t seed,
                                                   double total_ranges = 1.0);

/// Lambda value for every sample. Change points are K distinct uniform
/// positions in [1, length); each new segment draws from lambda_values
/// excluding the previous segment's value, so every change point is a jump.
[[nodiscard]] std::vector<double> lambda_trajectory(std::size_t length, const DriftConfig& cfg);

[[nodiscard]] std::vector<std::size_t> change_point_positions(std::size_t length, const DriftConfig& cfg);

[[nodiscard]] timeseries::Series gradual_drift(const timeseries::Series& base, const DriftConfig& cfg);
[[nodiscard]] timeseries::Series abrupt_drift(const timeseries::Series& base, const DriftConfig& cfg);
[[nodiscard]] timeseries::Series apply_drift(const timeseries::Series& base, DriftKind kind, const DriftConfig& cfg);

[[nodiscard]] timeseries::Series load_csv(const std::string& path, const timeseries::CsvSchema& schema);

}  // namespace hsa::drift
