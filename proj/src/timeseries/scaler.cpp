#include "hsa/timeseries.hpp"

#include <cmath>
#include <limits>

namespace hsa::timeseries {

MinMaxScaler::MinMaxScaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) {
        throw TimeSeriesError("scaler min/max length mismatch");
    }
    for (std::size_t i = 0; i < min_.size(); ++i) {
        if (!std::isfinite(min_[i]) || !std::isfinite(max_[i]) || min_[i] > max_[i]) {
            throw TimeSeriesError("invalid scaler range for feature " + std::to_string(i));
        }
    }
}

double MinMaxScaler::scale_value(std::size_t feature, double value) const {
    const double range = max_[feature] - min_[feature];
    if (range == 0.0) return 0.0;
    return (value - min_[feature]) / range;
}

double MinMaxScaler::unscale_value(std::size_t feature, double value) const {
    const double range = max_[feature] - min_[feature];
    if (range == 0.0) return min_[feature];
    return value * range + min_[feature];
}

MinMaxScaler fit_scaler(const Series& series) {
    if (series.empty()) {
        throw TimeSeriesError("cannot fit scaler on an empty series");
    }
    const std::size_t vars = series.variable_count();
    std::vector<double> lo(vars, std::numeric_limits<double>::infinity());
    std::vector<double> hi(vars, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& f = series[i].features;
        for (std::size_t v = 0; v < vars; ++v) {
            if (!std::isfinite(f[v])) {
                throw TimeSeriesError("non-finite value at record " + std::to_string(i) + ", feature " +
                                      std::to_string(v));
            }
            lo[v] = std::min(lo[v], f[v]);
            hi[v] = std::max(hi[v], f[v]);
        }
    }
    return MinMaxScaler(std::move(lo), std::move(hi));
}

namespace {

template <typename Fn>
Series map_features(const MinMaxScaler& scaler, const Series& series, Fn fn) {
    if (!series.empty() && scaler.variable_count() != series.variable_count()) {
        throw TimeSeriesError("scaler fitted for " + std::to_string(scaler.variable_count()) +
                              " variables, series has " + std::to_string(series.variable_count()));
    }
    std::vector<Record> out = series.records();
    for (auto& r : out) {
        for (std::size_t v = 0; v < r.features.size(); ++v) r.features[v] = fn(v, r.features[v]);
    }
    return Series(std::move(out), series.target_index(), series.metadata());
}

}  // namespace

Series transform(const MinMaxScaler& scaler, const Series& series) {
    return map_features(scaler, series, [&](std::size_t v, double x) { return scaler.scale_value(v, x); });
}

Series inverse_transform(const MinMaxScaler& scaler, const Series& series) {
    return map_features(scaler, series, [&](std::size_t v, double x) { return scaler.unscale_value(v, x); });
}

}  // namespace hsa::timeseries
