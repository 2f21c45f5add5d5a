#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsa/timeseries.hpp"

namespace hsa::forecaster {

class ForecasterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DivergenceError : public ForecasterError {
public:
    DivergenceError(const std::string& what, int epoch) : ForecasterError(what), epoch_(epoch) {}
    [[nodiscard]] int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class ChecksumError : public ForecasterError {
public:
    using ForecasterError::ForecasterError;
};

class FormatError : public ForecasterError {
public:
    using ForecasterError::ForecasterError;
};

/// LSTM -> dense(ReLU) -> linear output. An input row holds
/// sequence_length * input_dim values, oldest step first.
struct NetworkConfig {
    std::size_t input_dim = 25;
    std::size_t sequence_length = 1;
    std::size_t lstm_units = 40;
    std::size_t dense_units = 10;
    std::size_t output_units = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t row_width() const noexcept { return input_dim * sequence_length; }
    void validate() const;
    bool operator==(const NetworkConfig&) const = default;
};

struct TensorShape {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    [[nodiscard]] std::size_t size() const noexcept { return rows * cols; }
};

/// Parameter tensors in storage and serialization order. LSTM gate blocks
/// are stacked input, forget, cell, output.
[[nodiscard]] std::vector<TensorShape> tensor_layout(const NetworkConfig& config);

/// 4((d+u)u + u) + u*dense + dense + dense*out + out
[[nodiscard]] std::size_t parameter_count(const NetworkConfig& config);

/// Flat parameter vector plus the config that gives it shape.
class ModelParams {
public:
    ModelParams() = default;
    ModelParams(NetworkConfig config, std::vector<double> values);

    [[nodiscard]] const NetworkConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] std::vector<double>& values() noexcept { return values_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const double> tensor(std::size_t index) const;
    [[nodiscard]] std::span<double> tensor(std::size_t index);

    bool operator==(const ModelParams&) const = default;

private:
    NetworkConfig config_;
    std::vector<double> values_;
    std::vector<std::size_t> offsets_;
};

enum TensorIndex : std::size_t {
    kLstmInputWeights = 0,
    kLstmRecurrentWeights = 1,
    kLstmBias = 2,
    kDenseWeights = 3,
    kDenseBias = 4,
    kOutputWeights = 5,
    kOutputBias = 6,
};

/// Seeded Glorot-uniform weights, zero biases, forget-gate bias 1.
[[nodiscard]] ModelParams init(const NetworkConfig& config);

[[nodiscard]] double forward(const ModelParams& params, std::span<const double> input_row);
[[nodiscard]] std::vector<double> predict_batch(const ModelParams& params, const timeseries::Matrix& inputs);

/// Mean squared error of the network over a supervised set, plus its
/// gradient with respect to every parameter (same layout as values()).
struct LossAndGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
[[nodiscard]] LossAndGradient loss_and_gradient(const ModelParams& params, const timeseries::Matrix& inputs,
                                                std::span<const double> targets);

enum class OptimizerKind { kAdam, kSgd };

struct TrainConfig {
    int epochs = 10;
    std::size_t batch_size = 64;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::kAdam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss;  // mean training MSE observed during each epoch
};

[[nodiscard]] TrainResult train(const ModelParams& params, const timeseries::SupervisedSet& data, const TrainConfig& cfg);

struct ModelArtifact {
    ModelParams params;
    std::uint64_t version = 0;
    std::optional<std::int64_t> trained_on_window;
    std::uint64_t checksum = 0;

    [[nodiscard]] const NetworkConfig& config() const noexcept { return params.config(); }
};

inline constexpr std::uint32_t kArtifactFormatVersion = 1;

[[nodiscard]] std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Builds an artifact and stamps its checksum.
[[nodiscard]] ModelArtifact make_artifact(ModelParams params, std::uint64_t version,
                                          std::optional<std::int64_t> trained_on_window);

/// Throws ChecksumError if the stamped checksum does not match the content.
void verify_checksum(const ModelArtifact& artifact);

[[nodiscard]] std::vector<std::uint8_t> serialize(const ModelArtifact& artifact);
[[nodiscard]] ModelArtifact deserialize(std::span<const std::uint8_t> bytes);

}  // namespace hsa::forecaster
