#include "hsa/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "hsa/random.hpp"

namespace hsa::drift {

using timeseries::Record;
using timeseries::Series;
using timeseries::SeriesMetadata;

BaseSignalConfig default_base_signal(std::size_t length, std::uint64_t seed) {
    BaseSignalConfig cfg;
    cfg.length = length;
    cfg.seed = seed;
    cfg.variable_names = {"Db1t_avg", "Db2t_avg", "Gb1t_avg", "Gb2t_avg", "Ot_avg"};
    cfg.offsets = {40.0, 38.0, 55.0, 52.0, 12.0};
    const double day = 144.0, week = 1008.0;
    const double amp_day[] = {4.0, 3.5, 6.0, 5.5, 5.0};
    const double amp_week[] = {3.0, 3.0, 4.0, 4.0, 3.0};
    for (std::size_t i = 0; i < 5; ++i) {
        const double lag = 0.35 * static_cast<double>(i);
        cfg.components.push_back({
            {amp_day[i], day, lag},
            {amp_week[i], week, 0.5 * lag},
            {0.6, day / 3.0, 1.1 * lag},
        });
    }
    cfg.noise_sigma = 0.4;
    cfg.target_index = 4;
    return cfg;
}

Series synth_base(const BaseSignalConfig& cfg) {
    if (cfg.length == 0) throw std::invalid_argument("base signal length must be positive");
    const std::size_t vars = cfg.variable_count();
    if (vars == 0 || cfg.components.size() != vars) {
        throw std::invalid_argument("base signal needs one component list per variable");
    }
    std::mt19937_64 rng(cfg.seed);
    std::vector<Record> records(cfg.length);
    for (std::size_t t = 0; t < cfg.length; ++t) {
        auto& r = records[t];
        r.timestamp = cfg.start_timestamp + static_cast<std::int64_t>(t) * cfg.timestamp_step;
        r.features.resize(vars);
        for (std::size_t i = 0; i < vars; ++i) {
            double x = cfg.offsets[i];
            for (const auto& s : cfg.components[i]) {
                x += s.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / s.period + s.phase);
            }
            if (cfg.noise_sigma > 0.0) x += cfg.noise_sigma * standard_normal(rng);
            r.features[i] = x;
        }
    }
    SeriesMetadata meta{"synth", cfg.seed, cfg.variable_names};
    return Series(std::move(records), cfg.target_index, std::move(meta));
}

namespace {

std::vector<double> ranges(const Series& s) {
    const auto scaler = timeseries::fit_scaler(s);
    std::vector<double> out(s.variable_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scaler.max()[i] - scaler.min()[i];
    return out;
}

DriftConfig base_config(DriftKind kind, std::uint64_t seed) {
    DriftConfig cfg;
    cfg.seed = seed;
    cfg.epsilon_sigma = 0.05;
    cfg.change_points = kind == DriftKind::kAbrupt ? 4 : 0;
    return cfg;
}

void check(const Series& base, const DriftConfig& cfg) {
    if (cfg.alpha.size() != base.variable_count()) {
        throw std::invalid_argument("drift alpha has " + std::to_string(cfg.alpha.size()) + " values for " +
                                    std::to_string(base.variable_count()) + " variables");
    }
    if (!(cfg.epsilon_sigma >= 0.0)) throw std::invalid_argument("epsilon_sigma must be >= 0");
}

Series drifted(const Series& base, const DriftConfig& cfg, const std::vector<double>* lambda) {
    check(base, cfg);
    std::mt19937_64 noise(mix_seed(cfg.seed, 1));
    std::vector<Record> out = base.records();
    for (std::size_t t = 0; t < out.size(); ++t) {
        auto& f = out[t].features;
        const double tt = static_cast<double>(t);
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double eps = cfg.epsilon_sigma > 0.0 ? cfg.epsilon_sigma * standard_normal(noise) : 0.0;
            const double trend = lambda == nullptr ? cfg.alpha[i] * tt : cfg.alpha[i] * tt * (*lambda)[t];
            f[i] = trend + f[i] + eps;
        }
    }
    auto meta = base.metadata();
    meta.seed = cfg.seed;
    return Series(std::move(out), base.target_index(), std::move(meta));
}

}  // namespace

DriftConfig default_drift_config(const Series& base, DriftKind kind, std::uint64_t seed, double total_ranges) {
    if (!(total_ranges >= 0.0)) throw std::invalid_argument("drift magnitude must be non-negative");
    auto cfg = base_config(kind, seed);
    const auto r = ranges(base);
    for (double x : r)
        cfg.alpha.push_back(kind == DriftKind::kNone ? 0.0 : total_ranges * x / static_cast<double>(base.size()));
    if (kind == DriftKind::kNone) cfg.epsilon_sigma = 0.0;
    return cfg;
}

DriftConfig target_only_drift_config(const Series& base, DriftKind kind, std::uint64_t seed, double total_ranges) {
    auto cfg = default_drift_config(base, kind, seed, total_ranges);
    for (std::size_t i = 0; i < cfg.alpha.size(); ++i) {
        if (i != base.target_index()) cfg.alpha[i] = 0.0;
    }
    return cfg;
}

std::vector<std::size_t> change_point_positions(std::size_t length, const DriftConfig& cfg) {
    if (cfg.change_points == 0) return {};
    if (length < 2 || cfg.change_points > length - 1) {
        throw std::invalid_argument("too many change points for series length");
    }
    std::mt19937_64 rng(mix_seed(cfg.seed, 2));
    std::set<std::size_t> chosen;
    while (chosen.size() < cfg.change_points) {
        chosen.insert(1 + static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(length - 1)));
    }
    return {chosen.begin(), chosen.end()};
}

std::vector<double> lambda_trajectory(std::size_t length, const DriftConfig& cfg) {
    if (cfg.lambda_values.empty()) throw std::invalid_argument("lambda value set is empty");
    std::mt19937_64 rng(mix_seed(cfg.seed, 3));
    const auto& values = cfg.lambda_values;
    auto draw_excluding = [&](double previous, bool has_previous) {
        std::vector<double> pool;
        for (double v : values) {
            if (!has_previous || v != previous) pool.push_back(v);
        }
        if (pool.empty()) pool = values;
        const auto idx = static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(pool.size()));
        return pool[std::min(idx, pool.size() - 1)];
    };

    const auto cps = change_point_positions(length, cfg);
    std::vector<double> lambda(length);
    double current = draw_excluding(0.0, false);
    std::size_t next_cp = 0;
    for (std::size_t t = 0; t < length; ++t) {
        if (next_cp < cps.size() && t == cps[next_cp]) {
            current = draw_excluding(current, true);
            ++next_cp;
        }
        lambda[t] = current;
    }
    return lambda;
}

Series gradual_drift(const Series& base, const DriftConfig& cfg) { return drifted(base, cfg, nullptr); }

Series abrupt_drift(const Series& base, const DriftConfig& cfg) {
    const auto lambda = lambda_trajectory(base.size(), cfg);
    return drifted(base, cfg, &lambda);
}

Series apply_drift(const Series& base, DriftKind kind, const DriftConfig& cfg) {
    switch (kind) {
        case DriftKind::kNone:
            return base;
        case DriftKind::kGradual:
            return gradual_drift(base, cfg);
        case DriftKind::kAbrupt:
            return abrupt_drift(base, cfg);
    }
    return base;
}

Series load_csv(const std::string& path, const timeseries::CsvSchema& schema) { return timeseries::read_csv(path, schema); }

}  // namespace hsa::drift
