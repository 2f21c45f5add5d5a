#include "hsa/timeseries.hpp"

#include <algorithm>
#include <cmath>

namespace hsa::timeseries {

Series::Series(std::vector<Record> records, std::size_t target_index, SeriesMetadata metadata)
    : records_(std::move(records)), target_index_(target_index), metadata_(std::move(metadata)) {
    if (records_.empty()) {
        variable_count_ = metadata_.variable_names.size();
        return;
    }
    variable_count_ = records_.front().features.size();
    if (variable_count_ == 0) {
        throw TimeSeriesError("records carry no features");
    }
    if (target_index_ >= variable_count_) {
        throw TimeSeriesError("target index " + std::to_string(target_index_) + " out of range for " +
                              std::to_string(variable_count_) + " variables");
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.features.size() != variable_count_) {
            throw TimeSeriesError("record " + std::to_string(i) + " has " + std::to_string(r.features.size()) +
                                  " features, expected " + std::to_string(variable_count_));
        }
        if (i > 0 && r.timestamp <= records_[i - 1].timestamp) {
            throw TimeSeriesError("timestamps not strictly increasing at record " + std::to_string(i));
        }
    }
}

std::vector<double> Series::target_column() const {
    std::vector<double> out;
    out.reserve(records_.size());
    for (const auto& r : records_) out.push_back(r.features[target_index_]);
    return out;
}

Series Series::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > records_.size()) {
        throw TimeSeriesError("slice [" + std::to_string(begin) + ", " + std::to_string(end) + ") out of range");
    }
    std::vector<Record> part(records_.begin() + static_cast<std::ptrdiff_t>(begin),
                             records_.begin() + static_cast<std::ptrdiff_t>(end));
    Series out;
    out.records_ = std::move(part);
    out.target_index_ = target_index_;
    out.variable_count_ = variable_count_;
    out.metadata_ = metadata_;
    return out;
}

SupervisedSet make_supervised(const Series& series, std::size_t lag) {
    if (lag == 0) {
        throw TimeSeriesError("lag must be positive");
    }
    if (series.size() <= lag) {
        throw TimeSeriesError("series of length " + std::to_string(series.size()) + " too short for lag " +
                              std::to_string(lag));
    }
    const std::size_t vars = series.variable_count();
    const std::size_t samples = series.size() - lag;
    SupervisedSet set;
    set.lag = lag;
    set.variable_count = vars;
    set.inputs = Matrix(samples, lag * vars);
    set.targets.resize(samples);
    for (std::size_t j = 0; j < samples; ++j) {
        auto row = set.inputs.row(j);
        for (std::size_t step = 0; step < lag; ++step) {
            const auto& f = series[j + step].features;
            std::copy(f.begin(), f.end(), row.begin() + static_cast<std::ptrdiff_t>(step * vars));
        }
        set.targets[j] = series.target(j + lag);
    }
    return set;
}

std::pair<Series, Series> split(const Series& series, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw TimeSeriesError("train fraction must lie in (0, 1)");
    }
    const auto cut = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(series.size())));
    return {series.slice(0, cut), series.slice(cut, series.size())};
}

}  // namespace hsa::timeseries
