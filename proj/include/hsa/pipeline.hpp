#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsa/fabric.hpp"
#include "hsa/forecaster.hpp"
#include "hsa/timeseries.hpp"
#include "hsa/weighting.hpp"

namespace hsa::pipeline {

class PipelineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using fabric::Tick;

// ---------------------------------------------------------------- injection

enum class CloseRule { kByDuration, kByCount };

struct InjectionConfig {
    CloseRule rule = CloseRule::kByDuration;
    double duration_s = 30.0;
    std::size_t min_records = 200;  // by-duration: a window also needs this many records
    std::size_t count = 200;        // by-count: records per window
    std::size_t buffer_capacity = 4096;

    void validate() const;
};

enum class OfferStatus { kAccepted, kBackpressure };

/// Throttles a timestamp-ordered record stream into windows. By duration, a
/// window closes once `duration_s` has elapsed since its first arrival and it
/// holds at least `min_records`; by count, once it holds `count` records.
/// Records past the end of the stream stay buffered until a rule fires.
class Injector {
public:
    explicit Injector(InjectionConfig config);

    /// Backpressure when the buffer (open window plus unpolled closed
    /// windows) is full; the caller retries after poll().
    OfferStatus offer(const timeseries::Record& record, Tick arrival);
    /// Applies the duration rule at `now` without a new record.
    void advance(Tick now);
    [[nodiscard]] std::vector<timeseries::TimeWindow> poll();

    [[nodiscard]] std::size_t buffered() const noexcept;
    /// Tick at which the open window becomes old enough to close, if any.
    [[nodiscard]] std::optional<Tick> deadline() const;

private:
    void close(Tick at);

    InjectionConfig config_;
    timeseries::TimeWindow open_;
    bool has_open_ = false;
    std::deque<timeseries::TimeWindow> closed_;
    std::size_t closed_records_ = 0;
    std::size_t next_index_ = 0;
    std::optional<std::int64_t> last_timestamp_;
    Tick last_arrival_ = 0;
};

/// Arrival tick of the k-th record when replaying at `records_per_second`.
[[nodiscard]] Tick arrival_tick(std::size_t k, double records_per_second);

/// Replays a record vector at a fixed rate through an injector and returns
/// every window that closes.
[[nodiscard]] std::vector<timeseries::TimeWindow> inject(const std::vector<timeseries::Record>& records,
                                                         const InjectionConfig& config, double records_per_second);

// ---------------------------------------------------------------- model slot

/// Latest speed model seen by the inference side. Readers get the old or the
/// new artifact, never a mix; the version never goes down.
class SpeedModelSlot {
public:
    struct Snapshot {
        std::shared_ptr<const forecaster::ModelArtifact> artifact;
        std::uint64_t version = 0;  // 0: empty
    };

    /// Returns false (and keeps the current model) unless the version is newer.
    bool install(forecaster::ModelArtifact artifact);
    [[nodiscard]] Snapshot snapshot() const;

private:
    mutable std::mutex mutex_;
    Snapshot current_;
};

// ---------------------------------------------------------------- window work

struct WindowFlags {
    bool first_window_fallback = false;  // no usable previous window: weights (0, 1)
    bool no_speed_model = false;         // slot empty: speed vector is empty, hybrid = batch
    bool solver_nonconverged = false;
    bool solver_degenerate = false;
};

/// Weight fit on window t-1, used for window t.
struct FitDiagnostics {
    std::size_t fit_window = 0;
    double hybrid_rmse = 0.0;
    double batch_rmse = 0.0;
    double speed_rmse = 0.0;
    std::size_t iterations = 0;
};

struct WindowResult {
    std::size_t window_index = 0;
    std::vector<double> truth;
    std::vector<double> batch;
    std::vector<double> speed;  // empty when no speed model was available
    std::vector<double> hybrid;
    weighting::WeightVector weights_used;
    std::uint64_t speed_model_version_used = 0;
    std::optional<std::int64_t> speed_trained_on_window;
    WindowFlags flags;
    std::optional<FitDiagnostics> fit;

    [[nodiscard]] bool has_speed() const noexcept { return !speed.empty(); }
    /// Windows between the one being predicted and the one the speed model saw.
    [[nodiscard]] std::optional<std::int64_t> staleness() const;
    /// Throws PipelineError if prediction lengths disagree.
    void validate() const;
};

[[nodiscard]] std::vector<std::uint8_t> encode_window_result(const WindowResult& result);
[[nodiscard]] WindowResult decode_window_result(std::span<const std::uint8_t> bytes);

/// Scaled supervised set for a window. `carry` holds the previous window's
/// last `lag` raw records (empty for the first window or when training).
[[nodiscard]] timeseries::SupervisedSet window_supervised(const timeseries::TimeWindow& window,
                                                          std::span<const timeseries::Record> carry,
                                                          const timeseries::MinMaxScaler& scaler, std::size_t lag,
                                                          std::size_t target_index);

[[nodiscard]] std::vector<double> batch_infer(const forecaster::ModelParams& batch_model,
                                              const timeseries::SupervisedSet& set);

struct SpeedInference {
    std::optional<std::vector<double>> predictions;  // nullopt: no-model marker
    std::uint64_t version_used = 0;
    std::optional<std::int64_t> trained_on_window;
};
[[nodiscard]] SpeedInference speed_infer(const timeseries::SupervisedSet& set, const SpeedModelSlot& slot);

/// Trains a fresh model on one window's own samples.
[[nodiscard]] forecaster::ModelArtifact speed_train(const timeseries::SupervisedSet& set,
                                                    const forecaster::NetworkConfig& network,
                                                    const forecaster::TrainConfig& train, std::uint64_t version,
                                                    std::size_t window_index);

struct HybridOutput {
    std::vector<double> predictions;
    bool fallback = false;
};
[[nodiscard]] HybridOutput hybrid_infer(std::span<const double> batch, const std::optional<std::vector<double>>& speed,
                                        const weighting::WeightVector& weights);

struct WeightingMode {
    enum class Kind { kStatic, kDynamic };
    Kind kind = Kind::kDynamic;
    double speed_weight = 0.5;
    double batch_weight = 0.5;
    weighting::SolverOptions solver;

    [[nodiscard]] static WeightingMode dynamic() { return {}; }
    [[nodiscard]] static WeightingMode fixed(double ws, double wb) { return {Kind::kStatic, ws, wb, {}}; }
    /// "dynamic" or "static:<ws>:<wb>".
    [[nodiscard]] static WeightingMode parse(const std::string& text);
    [[nodiscard]] std::string label() const;
    void validate() const;
};

struct WeightRefresh {
    weighting::WeightVector weights;
    std::optional<weighting::DwaResult> solver;
    std::optional<FitDiagnostics> fit;
    bool fallback = false;
};

/// Static: the configured constant. Dynamic: DWA on the previous window's
/// recorded predictions against its truth; without a previous window that
/// has speed predictions, the fallback (0, 1), flagged.
[[nodiscard]] WeightRefresh refresh_weights(const WindowResult* previous, const WeightingMode& mode,
                                            std::size_t window_index);

// ---------------------------------------------------------------- session

enum class ClockMode { kDiscreteEvent, kWallClock };

/// Compute-node outage in simulated seconds from session start.
struct Outage {
    std::string node;
    double from_s = 0.0;
    double to_s = 0.0;
};

struct SessionConfig {
    InjectionConfig injection;
    double records_per_second = 7.0;
    std::size_t lag = timeseries::kDefaultLag;
    forecaster::NetworkConfig network;
    forecaster::TrainConfig batch_train{10, 512, 0.001};
    forecaster::TrainConfig speed_train{20, 64, 0.001};
    WeightingMode weighting;
    std::uint64_t seed = 0;
    ClockMode clock = ClockMode::kDiscreteEvent;
    fabric::Calibration calibration = fabric::default_calibration();
    fabric::Preset preset = fabric::Preset::kEdgeCloud;
    std::size_t max_windows = 0;  // 0: as many as the stream yields
    std::vector<Outage> outages;
    /// Object-store directory. Models found there are reused instead of
    /// retrained, which makes an interrupted session resumable.
    std::optional<std::filesystem::path> store_dir;

    void validate() const;
};

struct SessionResult {
    std::vector<WindowResult> windows;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::size_t, std::string>> errors;
    fabric::LatencyLedger ledger;
    fabric::DeploymentPlan plan;
    timeseries::MinMaxScaler scaler;
    std::uint64_t batch_checksum = 0;
    std::size_t speed_models_trained = 0;
    std::size_t speed_models_reused = 0;
};

/// Trains the batch model once on `historical`, then streams `stream` through
/// injection, inference, speed training and weight refresh. Placement errors
/// propagate as fabric::PlacementError before any work is done.
[[nodiscard]] SessionResult run_session(const SessionConfig& config, const timeseries::Series& historical,
                                        const timeseries::Series& stream);

/// Fills hybrid predictions, weights and flags of a result whose batch and
/// speed predictions are already set.
void apply_weights(WindowResult& result, const WeightRefresh& refresh);

/// Recomputes hybrid predictions and weights for another weighting mode from
/// the batch and speed predictions recorded in a session. Neither depends on
/// the weighting, so this equals a separate run under `mode`.
[[nodiscard]] std::vector<WindowResult> reweight(const std::vector<WindowResult>& windows, const WeightingMode& mode);

}  // namespace hsa::pipeline
