#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsa/drift.hpp"
#include "hsa/fabric.hpp"
#include "hsa/pipeline.hpp"

namespace hsa::bench {

/// Invalid scenario configuration; the message starts with the key path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Fidelity { kDesk, kPaper };

[[nodiscard]] std::string_view fidelity_name(Fidelity f);
[[nodiscard]] std::string_view drift_name(drift::DriftKind k);

struct ScenarioConfig {
    drift::DriftKind drift = drift::DriftKind::kGradual;
    fabric::Preset deployment = fabric::Preset::kEdgeCloud;
    /// Each weighting gets its own session; models are trained once and shared.
    std::vector<pipeline::WeightingMode> weightings{pipeline::WeightingMode::dynamic()};
    std::size_t windows = 100;
    pipeline::InjectionConfig injection;
    Fidelity fidelity = Fidelity::kDesk;
    std::uint64_t seed = 1;
    std::string data = "synth";  // "synth" or a CSV path
    /// Accumulated drift over the generated series, in base-signal ranges.
    double drift_ranges = 6.0;
    std::optional<std::string> calibration_file;
    std::optional<std::filesystem::path> out;

    void validate() const;
};

/// Epochs, batch size and learning rate for both models at a fidelity.
struct TrainingPreset {
    forecaster::TrainConfig batch;
    forecaster::TrainConfig speed;
};
[[nodiscard]] TrainingPreset training_preset(Fidelity f);

/// Canonical JSON of the configuration (output directory excluded).
[[nodiscard]] std::string config_json(const ScenarioConfig& cfg);
[[nodiscard]] std::uint64_t config_hash(const ScenarioConfig& cfg);

// ---------------------------------------------------------------- reports

enum class Approach { kSpeed, kBatch, kHybrid };
[[nodiscard]] std::string_view approach_name(Approach a);

inline constexpr std::string_view kTieRule = "hybrid > speed > batch";

/// Lowest RMSE wins; exact ties go to hybrid, then speed, then batch.
/// Without a speed RMSE the window has no best approach.
[[nodiscard]] std::optional<Approach> best_approach(std::optional<double> speed, double batch, double hybrid);

struct PhaseLatency {
    double computation_s = 0.0;
    double communication_s = 0.0;
};

struct WindowReport {
    std::string weighting;
    std::size_t window = 0;
    std::optional<double> rmse_speed;
    double rmse_batch = 0.0;
    double rmse_hybrid = 0.0;
    double w_speed = 0.0;
    double w_batch = 0.0;
    std::optional<Approach> best;
    pipeline::WindowFlags flags;
    std::uint64_t speed_version = 0;
    std::optional<std::int64_t> staleness;
    std::array<PhaseLatency, 4> latency{};  // indexed by fabric::Phase
};

[[nodiscard]] std::vector<WindowReport> window_reports(const std::string& weighting,
                                                       const std::vector<pipeline::WindowResult>& windows,
                                                       const fabric::LatencyLedger* ledger);

struct BestFractions {
    double speed = 0.0;
    double batch = 0.0;
    double hybrid = 0.0;
    std::size_t windows = 0;  // windows with a best approach
};

/// Fractions of windows each approach was best, over windows that have one.
[[nodiscard]] BestFractions percentage_best(const std::vector<WindowReport>& reports);

struct BoxplotStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;
    std::size_t count = 0;
};

/// Tukey box plot: linearly interpolated quartiles, whiskers at the most
/// extreme values within 1.5 IQR of the box, the rest are outliers.
[[nodiscard]] BoxplotStats boxplot_stats(std::vector<double> values);

// ---------------------------------------------------------------- scenario

struct WeightingRun {
    pipeline::WeightingMode mode;
    pipeline::SessionResult session;
    std::vector<WindowReport> reports;
    BestFractions best;
};

struct ScenarioResult {
    ScenarioConfig config;
    std::vector<WeightingRun> runs;
    std::vector<std::string> warnings;
};

/// Stream and historical split used by a scenario.
struct ScenarioData {
    timeseries::Series historical;
    timeseries::Series stream;
};
[[nodiscard]] ScenarioData scenario_data(const ScenarioConfig& cfg);

[[nodiscard]] pipeline::SessionConfig session_config(const ScenarioConfig& cfg, const pipeline::WeightingMode& mode);

/// Runs every weighting and, when `out` is set, writes the reports there.
/// Models are cached under `out`/store, so an interrupted run resumes.
[[nodiscard]] ScenarioResult run_scenario(const ScenarioConfig& cfg);

// ---------------------------------------------------------------- emit

inline constexpr int kSchemaVersion = 1;

[[nodiscard]] std::string windows_csv(const std::vector<WindowReport>& reports);
[[nodiscard]] std::vector<WindowReport> parse_windows_csv(const std::string& text);
[[nodiscard]] std::string summary_json(const ScenarioResult& result);
[[nodiscard]] std::string percentage_best_csv(const ScenarioResult& result);
[[nodiscard]] std::string boxplot_csv(const ScenarioResult& result);
[[nodiscard]] std::string latency_csv(const ScenarioResult& result);

/// Writes windows.csv, summary.json, percentage_best.csv, boxplot.csv and
/// latency.csv. Throws std::runtime_error if the directory is unwritable.
void emit(const ScenarioResult& result, const std::filesystem::path& dir);

}  // namespace hsa::bench
