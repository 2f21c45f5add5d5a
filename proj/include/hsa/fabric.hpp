#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsa/timeseries.hpp"

namespace hsa::fabric {

class FabricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnknownNodeError : public FabricError {
public:
    using FabricError::FabricError;
};

class MissingKeyError : public FabricError {
public:
    using FabricError::FabricError;
};

class TokenConsumedError : public FabricError {
public:
    using FabricError::FabricError;
};

class TokenExpiredError : public FabricError {
public:
    using FabricError::FabricError;
};

class PlacementError : public FabricError {
public:
    PlacementError(const std::string& what, std::string module) : FabricError(what), module_(std::move(module)) {}
    [[nodiscard]] const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Simulated time in microseconds.
using Tick = std::int64_t;
inline constexpr Tick kTicksPerSecond = 1'000'000;

[[nodiscard]] Tick seconds_to_ticks(double seconds);
[[nodiscard]] double ticks_to_seconds(Tick ticks);

// ---------------------------------------------------------------- scheduler

/// Discrete-event queue. Events run in (tick, sequence) order; an event may
/// schedule further events, never in the past.
class Scheduler {
public:
    using Action = std::function<void()>;

    std::uint64_t schedule_at(Tick tick, Action action);
    std::uint64_t schedule_after(Tick delay, Action action) { return schedule_at(now_ + delay, std::move(action)); }

    /// Runs the next event; false once the queue is empty.
    bool step();
    void run();
    /// Runs every event with tick <= limit, then parks the clock at limit.
    void run_until(Tick limit);

    [[nodiscard]] Tick now() const noexcept { return now_; }
    [[nodiscard]] bool empty() const noexcept { return queue_.empty(); }
    [[nodiscard]] std::size_t pending() const noexcept { return queue_.size(); }

private:
    struct Event {
        Tick tick;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.tick != b.tick ? a.tick > b.tick : a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    Tick now_ = 0;
    std::uint64_t next_seq_ = 0;
};

// ---------------------------------------------------------------- topology

enum class NodeRole { kEdge, kCloud };

struct NodeSpec {
    std::string id;
    NodeRole role = NodeRole::kEdge;
    double compute_factor = 1.0;
    std::uint64_t memory_capacity = 0;  // bytes

    void validate() const;
};

/// Directional link. Same-node traffic never uses a link and costs nothing.
struct LinkSpec {
    std::string from;
    std::string to;
    double latency_ms = 0.0;
    double bandwidth_bytes_per_s = 1e9;

    void validate() const;
};

class Topology {
public:
    void add_node(NodeSpec node);
    void add_link(LinkSpec link);
    void add_duplex_link(const std::string& a, const std::string& b, double latency_ms, double bandwidth);

    [[nodiscard]] const NodeSpec& node(const std::string& id) const;
    [[nodiscard]] bool has_node(const std::string& id) const { return nodes_.contains(id); }
    [[nodiscard]] const std::map<std::string, NodeSpec>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const LinkSpec& link(const std::string& from, const std::string& to) const;

    /// latency + size / bandwidth; zero within a node.
    [[nodiscard]] Tick transfer_ticks(const std::string& from, const std::string& to, std::size_t bytes) const;

    void set_node_up(const std::string& id, bool up);
    [[nodiscard]] bool node_up(const std::string& id) const;

    void set_partitioned(const std::string& a, const std::string& b, bool partitioned);
    [[nodiscard]] bool partitioned(const std::string& from, const std::string& to) const;

private:
    std::map<std::string, NodeSpec> nodes_;
    std::map<std::pair<std::string, std::string>, LinkSpec> links_;
    std::map<std::string, bool> down_;
    std::map<std::pair<std::string, std::string>, bool> cut_;
};

/// Byte transport between nodes. FIFO per directed pair: a later send never
/// overtakes an earlier one. Sends across a partition wait for heal().
class Network {
public:
    using Arrival = std::function<void(Tick sent_at)>;

    Network(Scheduler& scheduler, Topology& topology) : scheduler_(scheduler), topology_(topology) {}

    void send(const std::string& from, const std::string& to, std::size_t bytes, Arrival on_arrival);
    /// Lifts the partition between a and b and releases queued sends in order.
    void heal(const std::string& a, const std::string& b);
    void partition(const std::string& a, const std::string& b);

    [[nodiscard]] std::size_t queued(const std::string& from, const std::string& to) const;
    [[nodiscard]] Scheduler& scheduler() noexcept { return scheduler_; }
    [[nodiscard]] Topology& topology() noexcept { return topology_; }

private:
    struct Pending {
        std::size_t bytes;
        Tick sent_at;
        Arrival on_arrival;
    };
    void dispatch(const std::string& from, const std::string& to, Pending p);

    Scheduler& scheduler_;
    Topology& topology_;
    std::map<std::pair<std::string, std::string>, Tick> last_arrival_;
    std::map<std::pair<std::string, std::string>, std::deque<Pending>> held_;
};

// ---------------------------------------------------------------- pub/sub

struct Message {
    std::uint64_t id = 0;
    std::string topic;
    std::vector<std::uint8_t> payload;
    std::string publisher;
    Tick published_at = 0;

    [[nodiscard]] std::size_t size() const noexcept { return payload.size(); }
};

struct Delivery {
    const Message* message;
    std::string subscriber_node;
    Tick delivered_at;
    [[nodiscard]] Tick communication() const noexcept { return delivered_at - message->published_at; }
};

/// MQTT-style filter: '+' matches one level, a trailing '#' matches the rest.
[[nodiscard]] bool topic_matches(std::string_view filter, std::string_view topic);

inline constexpr std::string_view kTopicWindow = "stream/window";
inline constexpr std::string_view kTopicModel = "model/speed";
inline constexpr std::string_view kTopicResults = "results/inference";
inline constexpr std::string_view kTopicArchive = "archive/data";

class Bus {
public:
    using Handler = std::function<void(const Delivery&)>;

    explicit Bus(Network& network) : network_(network) {}

    std::size_t subscribe(const std::string& node, std::string filter, Handler handler);
    /// Returns the message id. Each matching subscriber gets one delivery.
    std::uint64_t publish(const std::string& node, std::string topic, std::vector<std::uint8_t> payload);

    struct TraceEntry {
        std::uint64_t message_id;
        std::size_t subscription;
        Tick delivered_at;
    };
    [[nodiscard]] const std::vector<TraceEntry>& deliveries() const noexcept { return trace_; }
    [[nodiscard]] std::uint64_t published_count() const noexcept { return next_id_ - 1; }
    /// Expected deliveries per published message (matching subscribers at publish time).
    [[nodiscard]] const std::map<std::uint64_t, std::vector<std::size_t>>& fanout() const noexcept { return fanout_; }

private:
    struct Subscription {
        std::string node;
        std::string filter;
        Handler handler;
    };
    Network& network_;
    std::vector<Subscription> subs_;
    std::map<std::uint64_t, std::shared_ptr<const Message>> live_;
    std::map<std::uint64_t, std::vector<std::size_t>> fanout_;
    std::vector<TraceEntry> trace_;
    std::uint64_t next_id_ = 1;
};

// ---------------------------------------------------------------- object store

struct SignedToken {
    std::string key;
    Tick expiry = 0;
    bool single_use = true;
    std::uint64_t nonce = 0;
};

/// Key/value object store, optionally mirrored to a directory tree. Keys are
/// '/'-separated relative paths.
class ObjectStore {
public:
    explicit ObjectStore(std::uint64_t nonce_seed = 0, std::optional<std::filesystem::path> root = std::nullopt);

    void put(const std::string& key, std::vector<std::uint8_t> bytes);
    /// Stores only if absent. Returns false if the key already exists.
    bool put_if_absent(const std::string& key, std::vector<std::uint8_t> bytes);
    [[nodiscard]] std::vector<std::uint8_t> get(const std::string& key) const;
    [[nodiscard]] bool contains(const std::string& key) const;
    [[nodiscard]] std::vector<std::string> keys(std::string_view prefix = {}) const;

    [[nodiscard]] SignedToken presign(const std::string& key, Tick ttl, Tick now);
    /// Succeeds once per token, strictly before its expiry.
    [[nodiscard]] std::vector<std::uint8_t> fetch_with_token(const SignedToken& token, Tick now);

private:
    struct Grant {
        std::string key;
        Tick expiry;
        bool single_use;
        bool consumed = false;
    };
    [[nodiscard]] std::filesystem::path path_for(const std::string& key) const;

    std::map<std::string, std::vector<std::uint8_t>> objects_;
    std::map<std::uint64_t, Grant> grants_;
    std::mt19937_64 nonce_rng_;
    std::optional<std::filesystem::path> root_;
};

[[nodiscard]] std::vector<std::uint8_t> encode_token(const SignedToken& token);
[[nodiscard]] SignedToken decode_token(std::span<const std::uint8_t> bytes);

// ---------------------------------------------------------------- calibration

enum class Module {
    kDataInjection,
    kBatchInference,
    kSpeedInference,
    kHybridInference,
    kModelSync,
    kDataSync,
    kSpeedTraining,
    kDataArchiving,
    kPredictionArchiving,
};
inline constexpr std::size_t kModuleCount = 9;

[[nodiscard]] std::string_view module_name(Module m);
[[nodiscard]] Module module_from_name(std::string_view name);
[[nodiscard]] std::span<const Module> all_modules();

struct OperationCost {
    double fixed_s = 0.0;
    double per_record_s = 0.0;
    double per_iteration_s = 0.0;

    [[nodiscard]] double base_seconds(std::size_t records, std::size_t iterations = 0) const {
        return fixed_s + per_record_s * static_cast<double>(records) + per_iteration_s * static_cast<double>(iterations);
    }
};

/// Topology plus cost model: everything needed to price a session.
struct Calibration {
    std::vector<NodeSpec> nodes;
    std::vector<LinkSpec> links;
    std::map<std::string, OperationCost> costs;      // speed_inference, batch_inference, hybrid_combine, weight_fit, speed_training
    std::map<std::string, std::uint64_t> footprints;  // module name -> bytes
    std::string store_node = "cloud";
    std::string edge_node = "edge";
    std::string cloud_node = "cloud";
    std::string compute_node = "ec2";
    double token_ttl_s = 3600.0;

    [[nodiscard]] Topology topology() const;
    [[nodiscard]] const OperationCost& cost(const std::string& op) const;
    [[nodiscard]] std::uint64_t footprint(Module m) const;
    void validate() const;
};

/// Defaults fitted to the measured testbed means (Raspberry Pi edge, serverless
/// cloud, compute VM).
[[nodiscard]] Calibration default_calibration();
[[nodiscard]] Calibration load_calibration(const std::string& path);
[[nodiscard]] std::string calibration_to_json(const Calibration& calibration);

/// base cost x node compute factor.
[[nodiscard]] Tick computation_ticks(double base_seconds, const NodeSpec& node);

// ---------------------------------------------------------------- placement

enum class Preset { kEdgeCentric, kCloudCentric, kEdgeCloud };

[[nodiscard]] std::string_view preset_name(Preset p);
[[nodiscard]] Preset preset_from_name(std::string_view name);

struct DeploymentPlan {
    Preset preset = Preset::kEdgeCloud;
    std::map<Module, std::string> placement;
    std::string store_node;
    std::string broker_node;

    [[nodiscard]] const std::string& node_of(Module m) const { return placement.at(m); }
};

/// Assigns every module per preset and checks memory. Modules are admitted in
/// a fixed order with speed training last; the first one that does not fit
/// raises PlacementError naming it.
[[nodiscard]] DeploymentPlan place(Preset preset, const Topology& topology, const Calibration& calibration);

// ---------------------------------------------------------------- latency ledger

enum class Phase { kSpeedInference, kBatchInference, kHybridInference, kSpeedTraining };
inline constexpr std::size_t kPhaseCount = 4;
[[nodiscard]] std::string_view phase_name(Phase p);

struct PhaseLatency {
    Tick computation = 0;
    Tick communication = 0;
    [[nodiscard]] Tick total() const noexcept { return computation + communication; }
};

class LatencyLedger {
public:
    void add_computation(std::size_t window, Phase phase, Tick ticks);
    void add_communication(std::size_t window, Phase phase, Tick ticks);

    [[nodiscard]] const std::map<std::size_t, std::array<PhaseLatency, kPhaseCount>>& windows() const noexcept {
        return rows_;
    }
    [[nodiscard]] PhaseLatency at(std::size_t window, Phase phase) const;

    struct Average {
        double computation_s = 0.0;
        double communication_s = 0.0;
        double total_s = 0.0;
        std::size_t windows = 0;
    };
    /// Mean over windows where the phase recorded anything.
    [[nodiscard]] Average average(Phase phase) const;

private:
    std::map<std::size_t, std::array<PhaseLatency, kPhaseCount>> rows_;
    std::map<std::size_t, std::array<bool, kPhaseCount>> touched_;
};

/// Fixed-width text table of per-phase averages for each named run.
[[nodiscard]] std::string report_latency(const std::vector<std::pair<std::string, const LatencyLedger*>>& ledgers);

// ---------------------------------------------------------------- payloads

/// Window payload: "HSAW", u64 index, i64 open, i64 close, u64 records,
/// u64 width, then per record i64 timestamp and width f64 values. Little endian.
[[nodiscard]] std::vector<std::uint8_t> encode_window(const timeseries::TimeWindow& window);
[[nodiscard]] timeseries::TimeWindow decode_window(std::span<const std::uint8_t> bytes);

/// Deterministic archive keys, e.g. "data/window/000007".
[[nodiscard]] std::string archive_key(std::string_view kind, std::size_t window);

// ---------------------------------------------------------------- handlers

/// Shared simulation substrate.
struct Fabric {
    explicit Fabric(Calibration cal, std::uint64_t seed = 0,
                    std::optional<std::filesystem::path> store_root = std::nullopt);
    Fabric(const Fabric&) = delete;
    Fabric& operator=(const Fabric&) = delete;

    Calibration calibration;
    Scheduler scheduler;
    Topology topology;
    Network network;
    Bus bus;
    ObjectStore store;
    LatencyLedger ledger;
};

/// Persists window payloads from `stream/window` under data/window/NNNNNN.
class DataArchivingHandler {
public:
    DataArchivingHandler(Fabric& fabric, std::string node);
    [[nodiscard]] std::size_t archived() const noexcept { return archived_; }

private:
    Fabric& fabric_;
    std::string node_;
    std::size_t archived_ = 0;
};

/// Persists results from `results/inference` under results/<phase>/NNNNNN.
/// Payloads start with a u8 phase and a u64 window index; the rest is opaque.
class PredictionArchivingHandler {
public:
    PredictionArchivingHandler(Fabric& fabric, std::string node);
    [[nodiscard]] std::size_t archived() const noexcept { return archived_; }

private:
    Fabric& fabric_;
    std::string node_;
    std::size_t archived_ = 0;
};

[[nodiscard]] std::vector<std::uint8_t> result_envelope(Phase phase, std::size_t window, std::span<const std::uint8_t> body);
struct ResultEnvelope {
    Phase phase;
    std::size_t window;
    std::vector<std::uint8_t> body;
};
[[nodiscard]] ResultEnvelope open_result_envelope(std::span<const std::uint8_t> bytes);

/// Speed training and archiving. On each window: if the compute node is up,
/// ship the window to it, train, put the artifact, presign, and publish the
/// token on `model/speed`; otherwise queue the event until drain(). Jobs on
/// the compute node run one at a time in window order.
class SpeedTrainingHandler {
public:
    struct Job {
        timeseries::TimeWindow window;
        Tick received_at = 0;
        Tick published_at = 0;  // window message publication
    };
    struct TrainOutput {
        std::vector<std::uint8_t> artifact;
        std::string error;  // non-empty: training failed
    };
    using Trainer = std::function<TrainOutput(const timeseries::TimeWindow&)>;

    SpeedTrainingHandler(Fabric& fabric, std::string handler_node, std::string compute_node, Trainer trainer);

    /// Releases queued events after the compute node comes back.
    void drain();

    [[nodiscard]] std::size_t waiting() const noexcept { return waiting_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& completed_windows() const noexcept { return completed_; }
    [[nodiscard]] const std::vector<std::pair<std::size_t, std::string>>& failures() const noexcept { return failures_; }

private:
    void dispatch(Job job);

    Fabric& fabric_;
    std::string handler_node_;
    std::string compute_node_;
    Trainer trainer_;
    std::deque<Job> waiting_;
    Tick busy_until_ = 0;
    std::vector<std::size_t> completed_;
    std::vector<std::pair<std::size_t, std::string>> failures_;
};

/// Token payload on `model/speed`: the SignedToken plus the window the model
/// was trained on and the handler's publication tick for phase accounting.
struct ModelNotice {
    SignedToken token;
    std::size_t trained_on_window = 0;
    Tick window_published_at = 0;
    Tick training_computation = 0;
};
[[nodiscard]] std::vector<std::uint8_t> encode_notice(const ModelNotice& notice);
[[nodiscard]] ModelNotice decode_notice(std::span<const std::uint8_t> bytes);

}  // namespace hsa::fabric
