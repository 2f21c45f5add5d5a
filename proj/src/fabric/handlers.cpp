#include <cstdio>

#include "hsa/bytes.hpp"
#include "hsa/fabric.hpp"

namespace hsa::fabric {

using Reader = detail::Reader<FabricError>;

namespace {

constexpr std::array<std::uint8_t, 4> kWindowMagic{'H', 'S', 'A', 'W'};

void expect_magic(Reader& r, const std::array<std::uint8_t, 4>& magic, const char* what) {
    const auto m = r.need(4);
    if (!std::equal(m.begin(), m.end(), magic.begin())) throw FabricError(std::string("not a ") + what + " payload");
}

}  // namespace

std::vector<std::uint8_t> encode_window(const timeseries::TimeWindow& w) {
    detail::Writer out;
    out.bytes(kWindowMagic);
    out.u64(w.index);
    out.i64(w.open_tick);
    out.i64(w.close_tick);
    out.u64(w.records.size());
    const std::size_t width = w.records.empty() ? 0 : w.records.front().features.size();
    out.u64(width);
    for (const auto& r : w.records) {
        if (r.features.size() != width) throw FabricError("window records differ in width");
        out.i64(r.timestamp);
        for (double x : r.features) out.f64(x);
    }
    return out.take();
}

timeseries::TimeWindow decode_window(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    expect_magic(in, kWindowMagic, "window");
    timeseries::TimeWindow w;
    w.index = in.u64();
    w.open_tick = in.i64();
    w.close_tick = in.i64();
    const auto n = in.u64();
    const auto width = in.u64();
    if (width != 0 && n > bytes.size() / (8 * (width + 1))) throw FabricError("window payload truncated");
    w.records.resize(n);
    for (auto& r : w.records) {
        r.timestamp = in.i64();
        r.features.resize(width);
        for (auto& x : r.features) x = in.f64();
    }
    if (!in.done()) throw FabricError("trailing bytes after window");
    return w;
}

std::string archive_key(std::string_view kind, std::size_t window) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", window);
    return std::string(kind) + "/" + buf;
}

std::vector<std::uint8_t> result_envelope(Phase phase, std::size_t window, std::span<const std::uint8_t> body) {
    detail::Writer w;
    w.u8(static_cast<std::uint8_t>(phase));
    w.u64(window);
    w.bytes(body);
    return w.take();
}

ResultEnvelope open_result_envelope(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    const auto phase = r.u8();
    if (phase >= kPhaseCount) throw FabricError("bad phase in result envelope");
    ResultEnvelope e{static_cast<Phase>(phase), static_cast<std::size_t>(r.u64()), {}};
    const auto rest = r.rest();
    e.body.assign(rest.begin(), rest.end());
    return e;
}

std::vector<std::uint8_t> encode_notice(const ModelNotice& n) {
    detail::Writer w;
    w.bytes(encode_token(n.token));
    w.u64(n.trained_on_window);
    w.i64(n.window_published_at);
    w.i64(n.training_computation);
    return w.take();
}

ModelNotice decode_notice(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 24) throw FabricError("model notice truncated");
    ModelNotice n;
    n.token = decode_token(bytes.first(bytes.size() - 24));
    Reader r(bytes.last(24));
    n.trained_on_window = r.u64();
    n.window_published_at = r.i64();
    n.training_computation = r.i64();
    return n;
}

Fabric::Fabric(Calibration cal, std::uint64_t seed, std::optional<std::filesystem::path> store_root)
    : calibration(std::move(cal)),
      topology(calibration.topology()),
      network(scheduler, topology),
      bus(network),
      store(seed, std::move(store_root)) {
    calibration.validate();
}

DataArchivingHandler::DataArchivingHandler(Fabric& fabric, std::string node) : fabric_(fabric), node_(std::move(node)) {
    fabric_.bus.subscribe(node_, std::string(kTopicArchive), [this](const Delivery& d) {
        const auto index = decode_window(d.message->payload).index;
        auto payload = d.message->payload;
        const auto size = payload.size();
        fabric_.network.send(node_, fabric_.calibration.store_node, size,
                             [this, index, payload = std::move(payload)](Tick) mutable {
                                 if (fabric_.store.put_if_absent(archive_key("data/window", index), std::move(payload)))
                                     ++archived_;
                             });
    });
}

PredictionArchivingHandler::PredictionArchivingHandler(Fabric& fabric, std::string node)
    : fabric_(fabric), node_(std::move(node)) {
    fabric_.bus.subscribe(node_, std::string(kTopicResults), [this](const Delivery& d) {
        auto env = open_result_envelope(d.message->payload);
        const Tick delivered = d.communication();
        const auto size = env.body.size();
        fabric_.network.send(node_, fabric_.calibration.store_node, size,
                             [this, env = std::move(env), delivered](Tick sent) mutable {
                                 // Inference phase communication: result delivery plus the store write.
                                 const Tick store_leg = fabric_.scheduler.now() - sent;
                                 fabric_.ledger.add_communication(env.window, env.phase, delivered + store_leg);
                                 const auto key = archive_key("results/" + std::string(phase_name(env.phase)), env.window);
                                 if (fabric_.store.put_if_absent(key, std::move(env.body))) ++archived_;
                             });
    });
}

SpeedTrainingHandler::SpeedTrainingHandler(Fabric& fabric, std::string handler_node, std::string compute_node,
                                           Trainer trainer)
    : fabric_(fabric),
      handler_node_(std::move(handler_node)),
      compute_node_(std::move(compute_node)),
      trainer_(std::move(trainer)) {
    (void)fabric_.topology.node(compute_node_);
    fabric_.bus.subscribe(handler_node_, std::string(kTopicWindow), [this](const Delivery& d) {
        Job job{decode_window(d.message->payload), d.delivered_at, d.message->published_at};
        if (!fabric_.topology.node_up(compute_node_) || !waiting_.empty()) {
            waiting_.push_back(std::move(job));
            return;
        }
        dispatch(std::move(job));
    });
}

void SpeedTrainingHandler::drain() {
    while (!waiting_.empty() && fabric_.topology.node_up(compute_node_)) {
        auto job = std::move(waiting_.front());
        waiting_.pop_front();
        dispatch(std::move(job));
    }
}

void SpeedTrainingHandler::dispatch(Job job) {
    const auto payload_size = encode_window(job.window).size();
    const auto index = job.window.index;
    const Tick to_handler = job.received_at - job.published_at;
    fabric_.network.send(handler_node_, compute_node_, payload_size, [this, job = std::move(job), index, to_handler](
                                                                         Tick sent) mutable {
        const Tick arrived = fabric_.scheduler.now();
        const Tick to_compute = arrived - sent;
        const auto& cost = fabric_.calibration.cost("speed_training");
        const Tick compute =
            computation_ticks(cost.base_seconds(job.window.records.size()), fabric_.topology.node(compute_node_));
        const Tick start = std::max(arrived, busy_until_);
        busy_until_ = start + compute;
        fabric_.scheduler.schedule_at(busy_until_, [this, job = std::move(job), index, to_handler, to_compute, compute] {
            auto out = trainer_(job.window);
            fabric_.ledger.add_computation(index, Phase::kSpeedTraining, compute);
            fabric_.ledger.add_communication(index, Phase::kSpeedTraining, to_handler + to_compute);
            if (!out.error.empty()) {
                failures_.emplace_back(index, out.error);
                auto record = std::vector<std::uint8_t>(out.error.begin(), out.error.end());
                fabric_.store.put_if_absent(archive_key("failures/speed", index), std::move(record));
                return;
            }
            const auto key = archive_key("models/speed", index);
            const auto size = out.artifact.size();
            fabric_.network.send(compute_node_, fabric_.calibration.store_node, size,
                                 [this, key, index, artifact = std::move(out.artifact), compute,
                                  published = job.published_at](Tick sent) mutable {
                                     fabric_.ledger.add_communication(index, Phase::kSpeedTraining,
                                                                      fabric_.scheduler.now() - sent);
                                     fabric_.store.put(key, std::move(artifact));
                                     const auto ttl = seconds_to_ticks(fabric_.calibration.token_ttl_s);
                                     ModelNotice notice{fabric_.store.presign(key, ttl, fabric_.scheduler.now()), index,
                                                        published, compute};
                                     completed_.push_back(index);
                                     fabric_.bus.publish(handler_node_, std::string(kTopicModel), encode_notice(notice));
                                 });
        });
    });
}

}  // namespace hsa::fabric
