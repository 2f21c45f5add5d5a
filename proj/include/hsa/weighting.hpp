#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace hsa::weighting {

class WeightingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WeightOrigin { kStatic, kDynamic, kFallback };

inline constexpr double kSimplexTolerance = 1e-9;

/// Convex combination weights. For the two-model hybrid the order is
/// {speed, batch}, so {1, 0} is pure speed and {0, 1} pure batch.
struct WeightVector {
    std::vector<double> weights;
    WeightOrigin origin = WeightOrigin::kStatic;
    std::size_t window_index = 0;

    [[nodiscard]] double speed() const { return weights.at(0); }
    [[nodiscard]] double batch() const { return weights.at(1); }
    void validate() const;
};

[[nodiscard]] double mse(std::span<const double> truth, std::span<const double> pred);
[[nodiscard]] double rmse(std::span<const double> truth, std::span<const double> pred);

/// Elementwise sum_k w_k * preds[k].
[[nodiscard]] std::vector<double> combine(std::span<const std::vector<double>> preds, const WeightVector& w);

[[nodiscard]] WeightVector static_weights(double speed_weight, double batch_weight);

struct DwaInput {
    std::vector<std::vector<double>> predictions;  // one vector per model, aligned with the weights
    std::vector<double> truth;
    std::vector<double> initial_guess;             // empty: uniform 1/k
};

struct SolverOptions {
    double tolerance = 1e-10;
    int max_iterations = 10'000;
};

struct DwaResult {
    WeightVector weights;
    double loss = 0.0;     // RMSE of the combination at the returned weights
    int iterations = 0;
    bool converged = false;
    bool degenerate = false;  // every model predicted the same values
};

/// Minimizes the RMSE of the convex combination over the probability
/// simplex by projected gradient descent with backtracking. If the cap is
/// reached the best feasible iterate is returned with converged=false.
[[nodiscard]] DwaResult dwa(const DwaInput& input, const SolverOptions& options = {});

/// Exact minimizing speed weight for two models:
/// clamp((p_s - p_b)·(y - p_b) / |p_s - p_b|^2, 0, 1); 0.5 when p_s == p_b.
[[nodiscard]] double closed_form_two_model(std::span<const double> batch_pred, std::span<const double> speed_pred,
                                           std::span<const double> truth);

/// Euclidean projection onto {w : w_i >= 0, sum w_i = 1}.
[[nodiscard]] std::vector<double> project_to_simplex(std::span<const double> v);

}  // namespace hsa::weighting
