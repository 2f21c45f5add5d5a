#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "hsa/bytes.hpp"
#include "hsa/pipeline.hpp"

namespace hsa::pipeline {

bool SpeedModelSlot::install(forecaster::ModelArtifact artifact) {
    auto next = std::make_shared<const forecaster::ModelArtifact>(std::move(artifact));
    std::lock_guard lock(mutex_);
    if (next->version <= current_.version) return false;
    current_.version = next->version;
    current_.artifact = std::move(next);
    return true;
}

SpeedModelSlot::Snapshot SpeedModelSlot::snapshot() const {
    std::lock_guard lock(mutex_);
    return current_;
}

std::optional<std::int64_t> WindowResult::staleness() const {
    if (!speed_trained_on_window) return std::nullopt;
    return static_cast<std::int64_t>(window_index) - *speed_trained_on_window;
}

void WindowResult::validate() const {
    const auto n = truth.size();
    if (batch.size() != n || hybrid.size() != n) throw PipelineError("window " + std::to_string(window_index) + ": prediction lengths differ");
    if (!speed.empty() && speed.size() != n) throw PipelineError("window " + std::to_string(window_index) + ": speed length differs");
    if (speed.empty() != flags.no_speed_model)
        throw PipelineError("window " + std::to_string(window_index) + ": speed marker inconsistent");
}

timeseries::SupervisedSet window_supervised(const timeseries::TimeWindow& window,
                                            std::span<const timeseries::Record> carry,
                                            const timeseries::MinMaxScaler& scaler, std::size_t lag,
                                            std::size_t target_index) {
    std::vector<timeseries::Record> records(carry.begin(), carry.end());
    records.insert(records.end(), window.records.begin(), window.records.end());
    if (records.size() <= lag)
        throw PipelineError("window " + std::to_string(window.index) + " has " + std::to_string(records.size()) +
                            " records, needs more than lag " + std::to_string(lag));
    const timeseries::Series series(std::move(records), target_index);
    return timeseries::make_supervised(timeseries::transform(scaler, series), lag);
}

std::vector<double> batch_infer(const forecaster::ModelParams& batch_model, const timeseries::SupervisedSet& set) {
    return forecaster::predict_batch(batch_model, set.inputs);
}

SpeedInference speed_infer(const timeseries::SupervisedSet& set, const SpeedModelSlot& slot) {
    const auto snap = slot.snapshot();
    SpeedInference out;
    if (!snap.artifact) return out;
    forecaster::verify_checksum(*snap.artifact);
    out.predictions = forecaster::predict_batch(snap.artifact->params, set.inputs);
    out.version_used = snap.version;
    out.trained_on_window = snap.artifact->trained_on_window;
    return out;
}

forecaster::ModelArtifact speed_train(const timeseries::SupervisedSet& set, const forecaster::NetworkConfig& network,
                                      const forecaster::TrainConfig& train, std::uint64_t version,
                                      std::size_t window_index) {
    if (set.empty()) throw PipelineError("window " + std::to_string(window_index) + ": no training samples");
    if (version == 0) throw PipelineError("speed model versions start at 1");
    auto result = forecaster::train(forecaster::init(network), set, train);
    return forecaster::make_artifact(std::move(result.params), version, static_cast<std::int64_t>(window_index));
}

HybridOutput hybrid_infer(std::span<const double> batch, const std::optional<std::vector<double>>& speed,
                          const weighting::WeightVector& weights) {
    if (!speed) return {std::vector<double>(batch.begin(), batch.end()), true};
    if (speed->size() != batch.size()) throw PipelineError("hybrid inputs differ in length");
    const std::vector<std::vector<double>> preds{*speed, std::vector<double>(batch.begin(), batch.end())};
    return {weighting::combine(preds, weights), false};
}

WeightingMode WeightingMode::parse(const std::string& text) {
    if (text == "dynamic") return dynamic();
    if (text.rfind("static:", 0) == 0) {
        const auto rest = text.substr(7);
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw PipelineError("weighting '" + text + "': expected static:<ws>:<wb>");
        try {
            std::size_t used = 0;
            const double ws = std::stod(rest.substr(0, colon), &used);
            if (used != colon) throw std::invalid_argument("ws");
            const auto wb_text = rest.substr(colon + 1);
            const double wb = std::stod(wb_text, &used);
            if (used != wb_text.size()) throw std::invalid_argument("wb");
            auto m = fixed(ws, wb);
            m.validate();
            return m;
        } catch (const std::logic_error&) {
            throw PipelineError("weighting '" + text + "': weights must be numbers");
        }
    }
    throw PipelineError("weighting '" + text + "': expected dynamic or static:<ws>:<wb>");
}

std::string WeightingMode::label() const {
    if (kind == Kind::kDynamic) return "dynamic";
    std::ostringstream s;
    s << "static:" << speed_weight << ":" << batch_weight;
    return s.str();
}

void WeightingMode::validate() const {
    if (kind == Kind::kStatic) {
        try {
            (void)weighting::static_weights(speed_weight, batch_weight);
        } catch (const weighting::WeightingError& e) {
            throw PipelineError(std::string("static weights: ") + e.what());
        }
    }
}

WeightRefresh refresh_weights(const WindowResult* previous, const WeightingMode& mode, std::size_t window_index) {
    WeightRefresh out;
    if (mode.kind == WeightingMode::Kind::kStatic) {
        out.weights = weighting::static_weights(mode.speed_weight, mode.batch_weight);
        out.weights.window_index = window_index;
        return out;
    }
    if (previous == nullptr || !previous->has_speed()) {
        out.weights = weighting::WeightVector{{0.0, 1.0}, weighting::WeightOrigin::kFallback, window_index};
        out.fallback = true;
        return out;
    }
    auto res = weighting::dwa({{previous->speed, previous->batch}, previous->truth, {}}, mode.solver);
    res.weights.window_index = window_index;
    out.weights = res.weights;
    out.fit = FitDiagnostics{previous->window_index, res.loss, weighting::rmse(previous->truth, previous->batch),
                             weighting::rmse(previous->truth, previous->speed), static_cast<std::size_t>(res.iterations)};
    out.solver = std::move(res);
    return out;
}

void apply_weights(WindowResult& r, const WeightRefresh& refresh) {
    std::optional<std::vector<double>> speed;
    if (r.has_speed()) speed = r.speed;
    auto hybrid = hybrid_infer(r.batch, speed, refresh.weights);
    r.hybrid = std::move(hybrid.predictions);
    r.weights_used = refresh.weights;
    r.fit = refresh.fit;
    r.flags.no_speed_model = !r.has_speed();
    r.flags.first_window_fallback = refresh.fallback || hybrid.fallback;
    if (hybrid.fallback) r.weights_used = {{0.0, 1.0}, weighting::WeightOrigin::kFallback, r.window_index};
    r.flags.solver_nonconverged = refresh.solver && !refresh.solver->converged;
    r.flags.solver_degenerate = refresh.solver && refresh.solver->degenerate;
}

std::vector<WindowResult> reweight(const std::vector<WindowResult>& windows, const WeightingMode& mode) {
    mode.validate();
    std::vector<WindowResult> out;
    out.reserve(windows.size());
    for (const auto& w : windows) {
        WindowResult r = w;
        const bool adjacent = !out.empty() && out.back().window_index + 1 == r.window_index;
        apply_weights(r, refresh_weights(adjacent ? &out.back() : nullptr, mode, r.window_index));
        out.push_back(std::move(r));
    }
    return out;
}

namespace {

constexpr std::array<std::uint8_t, 4> kResultMagic{'H', 'S', 'A', 'R'};
using Reader = detail::Reader<PipelineError>;

void put_vec(detail::Writer& w, const std::vector<double>& v) {
    w.u64(v.size());
    for (double x : v) w.f64(x);
}

std::vector<double> get_vec(Reader& r) {
    const auto n = r.u64();
    std::vector<double> v;
    for (std::uint64_t i = 0; i < n; ++i) v.push_back(r.f64());
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_window_result(const WindowResult& res) {
    detail::Writer w;
    w.bytes(kResultMagic);
    w.u64(res.window_index);
    for (const auto* v : {&res.truth, &res.batch, &res.speed, &res.hybrid}) put_vec(w, *v);
    put_vec(w, res.weights_used.weights);
    w.u8(static_cast<std::uint8_t>(res.weights_used.origin));
    w.u64(res.weights_used.window_index);
    w.u64(res.speed_model_version_used);
    w.u8(res.speed_trained_on_window ? 1 : 0);
    w.i64(res.speed_trained_on_window.value_or(0));
    w.u8(static_cast<std::uint8_t>(res.flags.first_window_fallback | res.flags.no_speed_model << 1 |
                                   res.flags.solver_nonconverged << 2 | res.flags.solver_degenerate << 3));
    w.u8(res.fit ? 1 : 0);
    if (res.fit) {
        w.u64(res.fit->fit_window);
        w.f64(res.fit->hybrid_rmse);
        w.f64(res.fit->batch_rmse);
        w.f64(res.fit->speed_rmse);
        w.u64(res.fit->iterations);
    }
    return w.take();
}

WindowResult decode_window_result(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto magic = r.need(4);
    if (!std::equal(magic.begin(), magic.end(), kResultMagic.begin())) throw PipelineError("not a window result payload");
    WindowResult res;
    res.window_index = r.u64();
    for (auto* v : {&res.truth, &res.batch, &res.speed, &res.hybrid}) *v = get_vec(r);
    res.weights_used.weights = get_vec(r);
    const auto origin = r.u8();
    if (origin > 2) throw PipelineError("bad weight origin");
    res.weights_used.origin = static_cast<weighting::WeightOrigin>(origin);
    res.weights_used.window_index = r.u64();
    res.speed_model_version_used = r.u64();
    const bool has_trained = r.u8() != 0;
    const auto trained = r.i64();
    if (has_trained) res.speed_trained_on_window = trained;
    const auto flags = r.u8();
    res.flags = {(flags & 1) != 0, (flags & 2) != 0, (flags & 4) != 0, (flags & 8) != 0};
    if (r.u8() != 0) {
        FitDiagnostics f;
        f.fit_window = r.u64();
        f.hybrid_rmse = r.f64();
        f.batch_rmse = r.f64();
        f.speed_rmse = r.f64();
        f.iterations = r.u64();
        res.fit = f;
    }
    if (!r.done()) throw PipelineError("trailing bytes after window result");
    return res;
}

}  // namespace hsa::pipeline
