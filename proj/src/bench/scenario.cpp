#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "hsa/bench.hpp"
#include "hsa/weighting.hpp"
#include "json.hpp"

namespace hsa::bench {

using nlohmann::ordered_json;

std::string_view fidelity_name(Fidelity f) { return f == Fidelity::kPaper ? "paper" : "desk"; }

std::string_view drift_name(drift::DriftKind k) {
    switch (k) {
        case drift::DriftKind::kNone: return "none";
        case drift::DriftKind::kGradual: return "gradual";
        case drift::DriftKind::kAbrupt: return "abrupt";
    }
    return "?";
}

std::string_view approach_name(Approach a) {
    switch (a) {
        case Approach::kSpeed: return "speed";
        case Approach::kBatch: return "batch";
        case Approach::kHybrid: return "hybrid";
    }
    return "?";
}

TrainingPreset training_preset(Fidelity f) {
    if (f == Fidelity::kPaper) return {{50, 512, 0.001}, {100, 64, 0.001}};
    return {{10, 512, 0.001}, {20, 64, 0.001}};
}

void ScenarioConfig::validate() const {
    if (weightings.empty()) throw ConfigError("weighting: at least one mode is required");
    for (std::size_t i = 0; i < weightings.size(); ++i) {
        try {
            weightings[i].validate();
        } catch (const std::exception& e) {
            throw ConfigError("weighting[" + std::to_string(i) + "]: " + e.what());
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (weightings[j].label() == weightings[i].label())
                throw ConfigError("weighting[" + std::to_string(i) + "]: duplicate " + weightings[i].label());
        }
    }
    if (windows == 0) throw ConfigError("windows: must be at least 1");
    try {
        injection.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("window: ") + e.what());
    }
    if (!(drift_ranges >= 0.0) || !std::isfinite(drift_ranges)) throw ConfigError("drift_ranges: must be a finite value >= 0");
    if (data.empty()) throw ConfigError("data: must be 'synth' or a CSV path");
}

std::string config_json(const ScenarioConfig& cfg) {
    ordered_json j;
    j["scenario"] = drift_name(cfg.drift);
    j["deployment"] = fabric::preset_name(cfg.deployment);
    auto& w = j["weighting"] = ordered_json::array();
    for (const auto& m : cfg.weightings) w.push_back(m.label());
    j["windows"] = cfg.windows;
    if (cfg.injection.rule == pipeline::CloseRule::kByCount) {
        j["window"] = "count:" + std::to_string(cfg.injection.count);
    } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "seconds:%g", cfg.injection.duration_s);
        j["window"] = buf;
        j["min_records"] = cfg.injection.min_records;
    }
    j["fidelity"] = fidelity_name(cfg.fidelity);
    j["seed"] = cfg.seed;
    j["data"] = cfg.data;
    j["drift_ranges"] = cfg.drift_ranges;
    j["calibration"] = cfg.calibration_file ? ordered_json(*cfg.calibration_file) : ordered_json(nullptr);
    return j.dump();
}

std::uint64_t config_hash(const ScenarioConfig& cfg) {
    const auto text = config_json(cfg);
    return forecaster::fnv1a64({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

std::optional<Approach> best_approach(std::optional<double> speed, double batch, double hybrid) {
    if (!speed) return std::nullopt;
    if (hybrid <= *speed && hybrid <= batch) return Approach::kHybrid;
    if (*speed <= batch) return Approach::kSpeed;
    return Approach::kBatch;
}

std::vector<WindowReport> window_reports(const std::string& weighting,
                                         const std::vector<pipeline::WindowResult>& windows,
                                         const fabric::LatencyLedger* ledger) {
    std::vector<WindowReport> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        WindowReport r;
        r.weighting = weighting;
        r.window = w.window_index;
        if (w.has_speed()) r.rmse_speed = weighting::rmse(w.truth, w.speed);
        r.rmse_batch = weighting::rmse(w.truth, w.batch);
        r.rmse_hybrid = weighting::rmse(w.truth, w.hybrid);
        r.w_speed = w.weights_used.speed();
        r.w_batch = w.weights_used.batch();
        r.best = best_approach(r.rmse_speed, r.rmse_batch, r.rmse_hybrid);
        r.flags = w.flags;
        r.speed_version = w.speed_model_version_used;
        r.staleness = w.staleness();
        if (ledger) {
            for (std::size_t p = 0; p < fabric::kPhaseCount; ++p) {
                const auto l = ledger->at(w.window_index, static_cast<fabric::Phase>(p));
                r.latency[p] = {fabric::ticks_to_seconds(l.computation), fabric::ticks_to_seconds(l.communication)};
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

BestFractions percentage_best(const std::vector<WindowReport>& reports) {
    BestFractions f;
    for (const auto& r : reports) {
        if (!r.best) continue;
        ++f.windows;
        switch (*r.best) {
            case Approach::kSpeed: f.speed += 1; break;
            case Approach::kBatch: f.batch += 1; break;
            case Approach::kHybrid: f.hybrid += 1; break;
        }
    }
    if (f.windows > 0) {
        const auto n = static_cast<double>(f.windows);
        f.speed /= n;
        f.batch /= n;
        f.hybrid /= n;
    }
    return f;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("boxplot of an empty series");
    std::sort(values.begin(), values.end());
    BoxplotStats s;
    s.count = values.size();
    s.median = quantile(values, 0.5);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo = s.q1 - 1.5 * iqr;
    const double hi = s.q3 + 1.5 * iqr;
    s.whisker_low = s.q1;
    s.whisker_high = s.q3;
    bool any = false;
    for (double v : values) {
        if (v < lo || v > hi) {
            s.outliers.push_back(v);
            continue;
        }
        if (!any) s.whisker_low = v;
        s.whisker_high = v;
        any = true;
    }
    return s;
}

// ---------------------------------------------------------------- scenario

namespace {

std::size_t records_per_window(const pipeline::InjectionConfig& inj, double rate) {
    if (inj.rule == pipeline::CloseRule::kByCount) return inj.count;
    const auto by_time = static_cast<std::size_t>(std::ceil(inj.duration_s * rate - 1e-9));
    return std::max(inj.min_records, by_time);
}

constexpr double kHistoricalFraction = 0.4;

}  // namespace

ScenarioData scenario_data(const ScenarioConfig& cfg) {
    timeseries::Series base;
    if (cfg.data == "synth") {
        const std::size_t stream_n = cfg.windows * records_per_window(cfg.injection, pipeline::SessionConfig{}.records_per_second);
        const std::size_t total = (stream_n * 10 + 5) / 6;
        base = drift::synth_base(drift::default_base_signal(total, cfg.seed));
    } else {
        try {
            base = drift::load_csv(cfg.data, {});
        } catch (const std::exception& e) {
            throw ConfigError("data: " + std::string(e.what()));
        }
    }
    const auto dc = drift::default_drift_config(base, cfg.drift, cfg.seed, cfg.drift_ranges);
    auto [historical, stream] = timeseries::split(drift::apply_drift(base, cfg.drift, dc), kHistoricalFraction);
    return {std::move(historical), std::move(stream)};
}

pipeline::SessionConfig session_config(const ScenarioConfig& cfg, const pipeline::WeightingMode& mode) {
    pipeline::SessionConfig s;
    s.injection = cfg.injection;
    const auto preset = training_preset(cfg.fidelity);
    s.batch_train = preset.batch;
    s.speed_train = preset.speed;
    s.weighting = mode;
    s.seed = cfg.seed;
    s.preset = cfg.deployment;
    s.max_windows = cfg.windows;
    if (cfg.calibration_file) {
        try {
            s.calibration = fabric::load_calibration(*cfg.calibration_file);
        } catch (const std::exception& e) {
            throw ConfigError("calibration: " + std::string(e.what()));
        }
    }
    return s;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    ScenarioResult result{cfg, {}, {}};
    const auto data = scenario_data(cfg);

    std::filesystem::path store;
    bool temporary = false;
    if (cfg.out) {
        store = *cfg.out / "store";
    } else {
        char name[64];
        std::snprintf(name, sizeof name, "hsa-bench-%016llx-%lld",
                      static_cast<unsigned long long>(config_hash(cfg)),
                      static_cast<long long>(std::chrono::steady_clock::now().time_since_epoch().count()));
        store = std::filesystem::temp_directory_path() / name;
        temporary = true;
    }
    struct Cleanup {
        std::filesystem::path dir;
        bool on;
        ~Cleanup() {
            std::error_code ec;
            if (on) std::filesystem::remove_all(dir, ec);
        }
    } cleanup{store, temporary};

    for (const auto& mode : cfg.weightings) {
        auto scfg = session_config(cfg, mode);
        scfg.store_dir = store;
        WeightingRun run{mode, pipeline::run_session(scfg, data.historical, data.stream), {}, {}};
        run.reports = window_reports(mode.label(), run.session.windows, &run.session.ledger);
        run.best = percentage_best(run.reports);
        for (const auto& w : run.session.warnings) result.warnings.push_back(mode.label() + ": " + w);
        if (run.session.windows.size() < cfg.windows) {
            result.warnings.push_back(mode.label() + ": stream yielded " + std::to_string(run.session.windows.size()) +
                                      " of " + std::to_string(cfg.windows) + " windows");
        }
        result.runs.push_back(std::move(run));
    }
    if (cfg.out) emit(result, *cfg.out);
    return result;
}

}  // namespace hsa::bench
