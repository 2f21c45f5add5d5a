#pragma once

// Test-only reference computations. Nothing here calls into the code paths
// it is used to check, except through the public API being verified.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "hsa/forecaster.hpp"
#include "hsa/random.hpp"
#include "hsa/timeseries.hpp"

namespace hsa::test {

/// Straight transcription of the network equations over named tensors.
/// Returns the scalar output and records which dense units were active.
struct ReferenceOutput {
    double y = 0.0;
    std::vector<bool> relu_active;
};

inline ReferenceOutput reference_forward(const forecaster::ModelParams& p, std::span<const double> row) {
    using forecaster::TensorIndex;
    const auto& c = p.config();
    const std::size_t U = c.lstm_units, D = c.input_dim;
    const auto Wx = p.tensor(forecaster::kLstmInputWeights);
    const auto Wh = p.tensor(forecaster::kLstmRecurrentWeights);
    const auto b = p.tensor(forecaster::kLstmBias);
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    std::vector<double> h(U, 0.0), cell(U, 0.0);
    for (std::size_t t = 0; t < c.sequence_length; ++t) {
        std::vector<double> hn(U), cn(U);
        for (std::size_t j = 0; j < U; ++j) {
            double z[4];
            for (std::size_t gate = 0; gate < 4; ++gate) {
                const std::size_t r = gate * U + j;
                double acc = b[r];
                for (std::size_t k = 0; k < D; ++k) acc += Wx[r * D + k] * row[t * D + k];
                for (std::size_t k = 0; k < U; ++k) acc += Wh[r * U + k] * h[k];
                z[gate] = acc;
            }
            const double i = sig(z[0]), f = sig(z[1]), g = std::tanh(z[2]), o = sig(z[3]);
            cn[j] = f * cell[j] + i * g;
            hn[j] = o * std::tanh(cn[j]);
        }
        h = hn;
        cell = cn;
    }
    const auto Wd = p.tensor(forecaster::kDenseWeights);
    const auto bd = p.tensor(forecaster::kDenseBias);
    const auto Wo = p.tensor(forecaster::kOutputWeights);
    const auto bo = p.tensor(forecaster::kOutputBias);
    ReferenceOutput out;
    out.y = bo[0];
    for (std::size_t r = 0; r < c.dense_units; ++r) {
        double a = bd[r];
        for (std::size_t k = 0; k < U; ++k) a += Wd[r * U + k] * h[k];
        out.relu_active.push_back(a > 0.0);
        out.y += Wo[r] * std::max(a, 0.0);
    }
    return out;
}

/// Counts parameters by walking every scalar of every tensor of the
/// architecture, independent of any closed-form count.
inline std::size_t enumerate_parameters(const forecaster::NetworkConfig& c) {
    std::size_t n = 0;
    for (std::size_t gate = 0; gate < 4; ++gate) {
        for (std::size_t unit = 0; unit < c.lstm_units; ++unit) {
            for (std::size_t k = 0; k < c.input_dim; ++k) ++n;   // input kernel
            for (std::size_t k = 0; k < c.lstm_units; ++k) ++n;  // recurrent kernel
            ++n;                                                 // bias
        }
    }
    for (std::size_t r = 0; r < c.dense_units; ++r) {
        for (std::size_t k = 0; k < c.lstm_units; ++k) ++n;
        ++n;
    }
    for (std::size_t r = 0; r < c.output_units; ++r) {
        for (std::size_t k = 0; k < c.dense_units; ++k) ++n;
        ++n;
    }
    return n;
}

/// Brute-force argmin of combination RMSE over w in {0, step, ..., 1}.
inline double grid_argmin_speed_weight(std::span<const double> batch, std::span<const double> speed,
                                       std::span<const double> truth, double step) {
    double best_w = 0.0, best = INFINITY;
    const auto n = static_cast<long>(std::llround(1.0 / step));
    for (long i = 0; i <= n; ++i) {
        const double w = static_cast<double>(i) * step;
        double acc = 0.0;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            const double e = w * speed[j] + (1.0 - w) * batch[j] - truth[j];
            acc += e * e;
        }
        const double r = std::sqrt(acc / static_cast<double>(truth.size()));
        if (r < best) {
            best = r;
            best_w = w;
        }
    }
    return best_w;
}

inline double combo_rmse(std::span<const double> batch, std::span<const double> speed, std::span<const double> truth,
                         double w_speed) {
    double acc = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const double e = w_speed * speed[j] + (1.0 - w_speed) * batch[j] - truth[j];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(truth.size()));
}

/// Ordinary least squares slope of y on x, with its standard error.
struct SlopeFit {
    double slope = 0.0;
    double standard_error = 0.0;
};

inline SlopeFit least_squares_slope(std::span<const double> x, std::span<const double> y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    const double intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - intercept - fit.slope * x[i];
        sse += r * r;
    }
    fit.standard_error = std::sqrt(sse / (n - 2.0) / sxx);
    return fit;
}

/// Random two-model DWA instance: truth plus two differently biased,
/// differently noisy predictors.
struct TwoModelInstance {
    std::vector<double> batch, speed, truth;
};

inline TwoModelInstance random_two_model_instance(std::mt19937_64& rng, std::size_t n) {
    TwoModelInstance inst;
    const double bias_b = 0.4 * (unit_uniform(rng) - 0.5);
    const double bias_s = 0.4 * (unit_uniform(rng) - 0.5);
    const double noise_b = 0.01 + 0.2 * unit_uniform(rng);
    const double noise_s = 0.01 + 0.2 * unit_uniform(rng);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = unit_uniform(rng);
        inst.truth.push_back(y);
        inst.batch.push_back(y + bias_b + noise_b * standard_normal(rng));
        inst.speed.push_back(y + bias_s + noise_s * standard_normal(rng));
    }
    return inst;
}

/// Central finite differences of the mean squared error, evaluated
/// through the reference forward pass. Relative error per parameter is
/// |a - n| / max(|a|, |n|, abs_floor).
struct GradientCheck {
    double max_relative_error = 0.0;
    bool crossed_relu_kink = false;  // a perturbation flipped a ReLU; result unusable
};

inline GradientCheck finite_difference_check(const forecaster::ModelParams& params, const timeseries::Matrix& inputs,
                                             std::span<const double> targets, double eps = 1e-5,
                                             double abs_floor = 1e-6) {
    auto loss_and_masks = [&](const forecaster::ModelParams& p, std::vector<bool>& masks) {
        double acc = 0.0;
        masks.clear();
        for (std::size_t r = 0; r < inputs.rows(); ++r) {
            const auto out = reference_forward(p, inputs.row(r));
            masks.insert(masks.end(), out.relu_active.begin(), out.relu_active.end());
            acc += (out.y - targets[r]) * (out.y - targets[r]);
        }
        return acc / static_cast<double>(inputs.rows());
    };
    const auto analytic = forecaster::loss_and_gradient(params, inputs, targets);
    std::vector<bool> base_mask, mask;
    loss_and_masks(params, base_mask);

    GradientCheck result;
    auto probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = probe.values()[i];
        probe.values()[i] = saved + eps;
        const double up = loss_and_masks(probe, mask);
        if (mask != base_mask) result.crossed_relu_kink = true;
        probe.values()[i] = saved - eps;
        const double down = loss_and_masks(probe, mask);
        if (mask != base_mask) result.crossed_relu_kink = true;
        probe.values()[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic.gradient[i];
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), abs_floor});
        result.max_relative_error = std::max(result.max_relative_error, rel);
    }
    return result;
}

/// A random small network (1-4 inputs per step, 1-4 steps, 1-4 units,
/// 1-3 dense units) with random inputs and targets.
struct SmallProblem {
    forecaster::ModelParams params;
    timeseries::Matrix inputs;
    std::vector<double> targets;
};

inline SmallProblem random_small_problem(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(unit_uniform(rng) * static_cast<double>(hi - lo + 1));
    };
    forecaster::NetworkConfig cfg;
    cfg.input_dim = pick(1, 4);
    cfg.sequence_length = pick(1, 4);
    cfg.lstm_units = pick(1, 4);
    cfg.dense_units = pick(1, 3);
    cfg.output_units = 1;
    cfg.seed = rng();
    SmallProblem prob{forecaster::init(cfg), timeseries::Matrix(pick(2, 6), cfg.row_width()), {}};
    // Perturb biases away from their init values so every path carries gradient.
    for (auto& v : prob.params.values()) v += 0.3 * standard_normal(rng);
    for (std::size_t r = 0; r < prob.inputs.rows(); ++r) {
        for (auto& x : prob.inputs.row(r)) x = standard_normal(rng);
        prob.targets.push_back(standard_normal(rng));
    }
    return prob;
}

}  // namespace hsa::test
