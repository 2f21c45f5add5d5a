#include <chrono>
#include <condition_variable>
#include <cstring>
#include <thread>

#include "hsa/bytes.hpp"
#include "hsa/pipeline.hpp"
#include "hsa/random.hpp"

namespace hsa::pipeline {

namespace {

using fabric::Module;
using fabric::Phase;
using timeseries::Record;
using timeseries::TimeWindow;

constexpr std::string_view kFingerprintKey = "session/fingerprint";
constexpr std::string_view kBatchKey = "models/batch";

void hash_train(detail::Writer& w, const forecaster::TrainConfig& t) {
    w.u64(static_cast<std::uint64_t>(t.epochs));
    w.u64(t.batch_size);
    w.f64(t.learning_rate);
    w.u64(t.seed);
    w.u8(static_cast<std::uint8_t>(t.optimizer));
    w.f64(t.beta1);
    w.f64(t.beta2);
    w.f64(t.epsilon);
}

void hash_series(detail::Writer& w, const timeseries::Series& s) {
    w.u64(s.size());
    w.u64(s.target_index());
    for (const auto& r : s.records()) {
        w.i64(r.timestamp);
        for (double x : r.features) w.f64(x);
    }
}

/// Everything the cached models depend on. Weighting, placement and
/// calibration are deliberately absent: they never change a model.
std::uint64_t model_fingerprint(const SessionConfig& c, const timeseries::Series& historical,
                                const timeseries::Series& stream) {
    detail::Writer w;
    w.u64(c.seed);
    w.u64(c.lag);
    const auto& n = c.network;
    for (auto v : {n.input_dim, n.sequence_length, n.lstm_units, n.dense_units, n.output_units}) w.u64(v);
    w.u64(n.seed);
    hash_train(w, c.batch_train);
    hash_train(w, c.speed_train);
    w.u8(static_cast<std::uint8_t>(c.injection.rule));
    w.f64(c.injection.duration_s);
    w.u64(c.injection.min_records);
    w.u64(c.injection.count);
    w.f64(c.records_per_second);
    hash_series(w, historical);
    hash_series(w, stream);
    const auto bytes = w.take();
    return forecaster::fnv1a64(bytes);
}

std::vector<std::uint8_t> u64_bytes(std::uint64_t v) {
    detail::Writer w;
    w.u64(v);
    return w.take();
}

forecaster::NetworkConfig network_for(const SessionConfig& c, std::uint64_t stream) {
    auto n = c.network;
    n.seed = mix_seed(c.seed ^ c.network.seed, stream);
    return n;
}

forecaster::TrainConfig train_for(forecaster::TrainConfig t, const SessionConfig& c, std::uint64_t stream) {
    t.seed = mix_seed(c.seed ^ t.seed, stream);
    return t;
}

constexpr std::uint64_t kBatchInitStream = 0x100;
constexpr std::uint64_t kBatchTrainStream = 0x101;
constexpr std::uint64_t kSpeedInitStream = 0x10000;
constexpr std::uint64_t kSpeedTrainStream = 0x20000;

/// Shared state of one session: models, scaler and configuration.
struct Context {
    const SessionConfig& config;
    timeseries::MinMaxScaler scaler;
    std::size_t target_index = 0;
    forecaster::ModelParams batch_model;
};

forecaster::ModelArtifact speed_model_for(const Context& ctx, const TimeWindow& w) {
    const auto set = window_supervised(w, {}, ctx.scaler, ctx.config.lag, ctx.target_index);
    return speed_train(set, network_for(ctx.config, kSpeedInitStream),
                       train_for(ctx.config.speed_train, ctx.config, kSpeedTrainStream + w.index), w.index + 1, w.index);
}

/// Batch predictions, speed predictions from the slot, refreshed weights and
/// the hybrid combination for one window.
WindowResult infer_window(const Context& ctx, const TimeWindow& w, std::span<const Record> carry,
                          const SpeedModelSlot& slot, const WindowResult* previous, WeightRefresh* refresh_out) {
    const auto set = window_supervised(w, carry, ctx.scaler, ctx.config.lag, ctx.target_index);
    WindowResult r;
    r.window_index = w.index;
    r.truth = set.targets;
    r.batch = batch_infer(ctx.batch_model, set);
    auto sp = speed_infer(set, slot);
    if (sp.predictions) {
        r.speed = std::move(*sp.predictions);
        r.speed_model_version_used = sp.version_used;
        r.speed_trained_on_window = sp.trained_on_window;
    }
    if (previous && previous->window_index + 1 != w.index) previous = nullptr;
    auto refresh = refresh_weights(previous, ctx.config.weighting, w.index);
    apply_weights(r, refresh);
    r.validate();
    if (refresh_out) *refresh_out = std::move(refresh);
    return r;
}

std::vector<Record> tail(const TimeWindow& w, std::size_t n) {
    const auto k = std::min(n, w.records.size());
    return {w.records.end() - static_cast<std::ptrdiff_t>(k), w.records.end()};
}

WindowResult only_phase(const WindowResult& r, Phase phase) {
    WindowResult out;
    out.window_index = r.window_index;
    out.truth = r.truth;
    if (phase == Phase::kBatchInference) out.batch = r.batch;
    if (phase == Phase::kSpeedInference) {
        out.speed = r.speed;
        out.speed_model_version_used = r.speed_model_version_used;
        out.speed_trained_on_window = r.speed_trained_on_window;
    }
    return out;
}

void run_discrete_event(const Context& ctx, const timeseries::Series& stream, fabric::Fabric& f, SessionResult& out) {
    const auto& cfg = ctx.config;
    const auto& plan = out.plan;
    const auto& infer_node = plan.node_of(Module::kBatchInference);
    if (plan.node_of(Module::kSpeedInference) != infer_node || plan.node_of(Module::kHybridInference) != infer_node)
        throw PipelineError("batch, speed and hybrid inference must share a node");
    const auto& inj_node = plan.node_of(Module::kDataInjection);
    const auto& sync_node = plan.node_of(Module::kModelSync);
    const auto& train_node = plan.node_of(Module::kSpeedTraining);
    const auto& store_node = plan.store_node;

    SpeedModelSlot slot;
    fabric::DataArchivingHandler data_archive(f, plan.node_of(Module::kDataArchiving));
    fabric::PredictionArchivingHandler result_archive(f, plan.node_of(Module::kPredictionArchiving));

    // Data sync forwards each window to the archive topic.
    const auto& datasync_node = plan.node_of(Module::kDataSync);
    f.bus.subscribe(datasync_node, std::string(fabric::kTopicWindow), [&f, &datasync_node](const fabric::Delivery& d) {
        f.bus.publish(datasync_node, std::string(fabric::kTopicArchive), d.message->payload);
    });

    fabric::SpeedTrainingHandler trainer(f, train_node, train_node, [&](const TimeWindow& w) {
        const auto key = fabric::archive_key("models/speed", w.index);
        if (f.store.contains(key)) {
            ++out.speed_models_reused;
            return fabric::SpeedTrainingHandler::TrainOutput{f.store.get(key), {}};
        }
        try {
            auto bytes = forecaster::serialize(speed_model_for(ctx, w));
            ++out.speed_models_trained;
            return fabric::SpeedTrainingHandler::TrainOutput{std::move(bytes), {}};
        } catch (const std::exception& e) {
            return fabric::SpeedTrainingHandler::TrainOutput{{}, e.what()};
        }
    });

    // Model sync: token delivery, then the artifact fetch from the store.
    f.bus.subscribe(sync_node, std::string(fabric::kTopicModel), [&](const fabric::Delivery& d) {
        const auto notice = fabric::decode_notice(d.message->payload);
        f.ledger.add_communication(notice.trained_on_window, Phase::kSpeedTraining, d.communication());
        const auto size = f.store.get(notice.token.key).size();
        f.network.send(store_node, sync_node, size, [&, notice](Tick sent) {
            f.ledger.add_communication(notice.trained_on_window, Phase::kSpeedTraining, f.scheduler.now() - sent);
            try {
                slot.install(forecaster::deserialize(f.store.fetch_with_token(notice.token, f.scheduler.now())));
            } catch (const std::exception& e) {
                out.errors.emplace_back(notice.trained_on_window, std::string("model sync: ") + e.what());
            }
        });
    });

    // Inference: all three phases start on window delivery and run side by
    // side; hybrid waits for both inputs.
    std::vector<Record> carry;
    f.bus.subscribe(infer_node, std::string(fabric::kTopicWindow), [&](const fabric::Delivery& d) {
        const auto w = fabric::decode_window(d.message->payload);
        const WindowResult* prev = out.windows.empty() ? nullptr : &out.windows.back();
        WeightRefresh refresh;
        WindowResult r;
        try {
            r = infer_window(ctx, w, carry, slot, prev, &refresh);
        } catch (const std::exception& e) {
            out.errors.emplace_back(w.index, e.what());
            carry = tail(w, cfg.lag);
            return;
        }
        carry = tail(w, cfg.lag);

        const auto& node = f.topology.node(infer_node);
        const auto n = r.truth.size();
        const auto cost = [&](const char* op, std::size_t iterations = 0) {
            return fabric::computation_ticks(f.calibration.cost(op).base_seconds(n, iterations), node);
        };
        const Tick batch_c = cost("batch_inference");
        const Tick speed_c = r.has_speed() ? cost("speed_inference") : 0;
        Tick hybrid_c = cost("hybrid_combine");
        if (refresh.solver) hybrid_c += cost("weight_fit", static_cast<std::size_t>(refresh.solver->iterations));

        const Tick comm = d.communication();
        f.ledger.add_computation(w.index, Phase::kBatchInference, batch_c);
        f.ledger.add_communication(w.index, Phase::kBatchInference, comm);
        if (r.has_speed()) {
            f.ledger.add_computation(w.index, Phase::kSpeedInference, speed_c);
            f.ledger.add_communication(w.index, Phase::kSpeedInference, comm);
        }
        f.ledger.add_computation(w.index, Phase::kHybridInference, hybrid_c);
        f.ledger.add_communication(w.index, Phase::kHybridInference, comm);

        auto publish_at = [&f, &infer_node](Tick delay, Phase phase, std::size_t index, std::vector<std::uint8_t> body) {
            f.scheduler.schedule_after(delay, [&f, &infer_node, phase, index, body = std::move(body)] {
                f.bus.publish(infer_node, std::string(fabric::kTopicResults), fabric::result_envelope(phase, index, body));
            });
        };
        publish_at(batch_c, Phase::kBatchInference, w.index, encode_window_result(only_phase(r, Phase::kBatchInference)));
        if (r.has_speed())
            publish_at(speed_c, Phase::kSpeedInference, w.index, encode_window_result(only_phase(r, Phase::kSpeedInference)));
        publish_at(std::max(batch_c, speed_c) + hybrid_c, Phase::kHybridInference, w.index, encode_window_result(r));
        out.windows.push_back(std::move(r));
    });

    // Injection: replay records at a fixed rate; duration timers close
    // windows between arrivals.
    Injector injector(cfg.injection);
    const auto& records = stream.records();
    std::size_t published = 0;
    std::optional<Tick> armed;
    const bool capped = cfg.max_windows > 0;
    auto publish_closed = [&] {
        for (auto& w : injector.poll()) {
            if (capped && published >= cfg.max_windows) return;
            f.bus.publish(inj_node, std::string(fabric::kTopicWindow), fabric::encode_window(w));
            ++published;
        }
    };
    std::function<void()> arm_timer = [&] {
        const auto d = injector.deadline();
        if (!d || (armed && *armed == *d)) return;
        armed = *d;
        f.scheduler.schedule_at(std::max(*d, f.scheduler.now()), [&, at = *d] {
            injector.advance(std::max(at, f.scheduler.now()));
            publish_closed();
            arm_timer();
        });
    };
    std::function<void(std::size_t)> arrive = [&](std::size_t k) {
        if (capped && published >= cfg.max_windows) return;
        if (injector.offer(records[k], f.scheduler.now()) == OfferStatus::kBackpressure) {
            publish_closed();
            f.scheduler.schedule_after(1, [&, k] { arrive(k); });
            return;
        }
        publish_closed();
        arm_timer();
        if (k + 1 < records.size())
            f.scheduler.schedule_at(std::max(arrival_tick(k + 1, cfg.records_per_second), f.scheduler.now()),
                                    [&, k] { arrive(k + 1); });
    };
    if (!records.empty()) f.scheduler.schedule_at(0, [&] { arrive(0); });

    for (const auto& o : cfg.outages) {
        f.scheduler.schedule_at(fabric::seconds_to_ticks(o.from_s), [&f, node = o.node] { f.topology.set_node_up(node, false); });
        f.scheduler.schedule_at(fabric::seconds_to_ticks(o.to_s), [&f, &trainer, node = o.node] {
            f.topology.set_node_up(node, true);
            trainer.drain();
        });
    }

    f.scheduler.run();
    for (const auto& [w, msg] : trainer.failures()) out.errors.emplace_back(w, "speed training: " + msg);
    if (trainer.waiting() > 0)
        out.warnings.push_back(std::to_string(trainer.waiting()) + " speed training events still waiting for compute");
}

/// Threads instead of simulated time: a training worker consumes windows
/// while inference proceeds and reads whatever model the slot holds.
void run_wall_clock(const Context& ctx, const timeseries::Series& stream, fabric::Fabric& f, SessionResult& out) {
    const auto& cfg = ctx.config;
    auto windows = inject(stream.records(), cfg.injection, cfg.records_per_second);
    if (cfg.max_windows > 0 && windows.size() > cfg.max_windows) windows.resize(cfg.max_windows);

    SpeedModelSlot slot;
    std::mutex mu;
    std::condition_variable cv;
    std::deque<const TimeWindow*> queue;
    bool done = false;
    std::vector<std::pair<std::size_t, std::string>> train_errors;
    std::vector<std::pair<std::size_t, Tick>> train_time;

    std::thread worker([&] {
        while (true) {
            const TimeWindow* w = nullptr;
            {
                std::unique_lock lock(mu);
                cv.wait(lock, [&] { return done || !queue.empty(); });
                if (queue.empty()) return;
                w = queue.front();
                queue.pop_front();
            }
            const auto t0 = std::chrono::steady_clock::now();
            try {
                slot.install(speed_model_for(ctx, *w));
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                train_errors.emplace_back(w->index, e.what());
            }
            const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
            std::lock_guard lock(mu);
            train_time.emplace_back(w->index, us.count());
        }
    });

    std::vector<Record> carry;
    for (const auto& w : windows) {
        {
            std::lock_guard lock(mu);
            queue.push_back(&w);
        }
        cv.notify_one();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const WindowResult* prev = out.windows.empty() ? nullptr : &out.windows.back();
            out.windows.push_back(infer_window(ctx, w, carry, slot, prev, nullptr));
            f.store.put_if_absent(fabric::archive_key("results/hybrid_inference", w.index),
                                  encode_window_result(out.windows.back()));
        } catch (const std::exception& e) {
            out.errors.emplace_back(w.index, e.what());
        }
        carry = tail(w, cfg.lag);
        const auto us = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - t0);
        f.ledger.add_computation(w.index, Phase::kHybridInference, us.count());
    }
    {
        std::lock_guard lock(mu);
        done = true;
    }
    cv.notify_one();
    worker.join();
    out.speed_models_trained = train_time.size() - train_errors.size();
    for (const auto& [w, t] : train_time) f.ledger.add_computation(w, Phase::kSpeedTraining, t);
    for (auto& e : train_errors) out.errors.emplace_back(e.first, "speed training: " + e.second);
}

}  // namespace

void SessionConfig::validate() const {
    injection.validate();
    if (!(records_per_second > 0.0)) throw PipelineError("records_per_second must be > 0");
    if (lag == 0) throw PipelineError("lag must be > 0");
    network.validate();
    batch_train.validate();
    speed_train.validate();
    weighting.validate();
    calibration.validate();
    for (const auto& o : outages)
        if (!(o.to_s >= o.from_s) || o.from_s < 0) throw PipelineError("outage interval for " + o.node + " is invalid");
}

SessionResult run_session(const SessionConfig& cfg, const timeseries::Series& historical,
                          const timeseries::Series& stream) {
    cfg.validate();
    if (historical.size() <= cfg.lag) throw PipelineError("historical series too short for the lag");
    if (!stream.empty() && (stream.variable_count() != historical.variable_count() ||
                            stream.target_index() != historical.target_index()))
        throw PipelineError("stream and historical series differ in shape");
    if (cfg.network.row_width() != cfg.lag * historical.variable_count())
        throw PipelineError("network input width " + std::to_string(cfg.network.row_width()) + " != lag x variables " +
                            std::to_string(cfg.lag * historical.variable_count()));

    SessionResult out;
    fabric::Fabric f(cfg.calibration, cfg.seed, cfg.store_dir);
    out.plan = fabric::place(cfg.preset, f.topology, f.calibration);

    const auto fingerprint = u64_bytes(model_fingerprint(cfg, historical, stream));
    const std::string fp_key(kFingerprintKey);
    if (f.store.contains(fp_key) && f.store.get(fp_key) != fingerprint)
        throw PipelineError("store directory holds models from a different session configuration");
    f.store.put(fp_key, fingerprint);

    Context ctx{cfg, timeseries::fit_scaler(historical), historical.target_index(), {}};
    const std::string batch_key(kBatchKey);
    if (f.store.contains(batch_key)) {
        ctx.batch_model = forecaster::deserialize(f.store.get(batch_key)).params;
    } else {
        const auto set = timeseries::make_supervised(timeseries::transform(ctx.scaler, historical), cfg.lag);
        auto trained = forecaster::train(forecaster::init(network_for(cfg, kBatchInitStream)), set,
                                         train_for(cfg.batch_train, cfg, kBatchTrainStream));
        ctx.batch_model = std::move(trained.params);
        f.store.put(batch_key, forecaster::serialize(forecaster::make_artifact(ctx.batch_model, 0, std::nullopt)));
    }
    out.scaler = ctx.scaler;
    out.batch_checksum = forecaster::make_artifact(ctx.batch_model, 0, std::nullopt).checksum;

    if (cfg.clock == ClockMode::kDiscreteEvent) {
        run_discrete_event(ctx, stream, f, out);
    } else {
        run_wall_clock(ctx, stream, f, out);
    }
    if (out.windows.empty()) out.warnings.push_back("stream produced no complete window");
    out.ledger = f.ledger;
    return out;
}

}  // namespace hsa::pipeline
