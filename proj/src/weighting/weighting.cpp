#include "hsa/weighting.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace hsa::weighting {

void WeightVector::validate() const {
    if (weights.empty()) throw WeightingError("empty weight vector");
    double sum = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < -kSimplexTolerance || w > 1.0 + kSimplexTolerance) {
            throw WeightingError("weight " + std::to_string(w) + " outside [0, 1]");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw WeightingError("weights sum to " + std::to_string(sum) + ", expected 1");
    }
}

double mse(std::span<const double> truth, std::span<const double> pred) {
    if (truth.empty()) throw WeightingError("rmse of empty vectors");
    if (truth.size() != pred.size()) throw WeightingError("rmse length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - pred[i];
        acc += d * d;
    }
    return acc / static_cast<double>(truth.size());
}

double rmse(std::span<const double> truth, std::span<const double> pred) { return std::sqrt(mse(truth, pred)); }

std::vector<double> combine(std::span<const std::vector<double>> preds, const WeightVector& w) {
    w.validate();
    if (preds.size() != w.weights.size()) throw WeightingError("prediction/weight count mismatch");
    const std::size_t n = preds.front().size();
    for (const auto& p : preds) {
        if (p.size() != n) throw WeightingError("prediction length mismatch");
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t k = 0; k < preds.size(); ++k) {
        const double wk = w.weights[k];
        if (wk == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) out[i] += wk * preds[k][i];
    }
    return out;
}

WeightVector static_weights(double speed_weight, double batch_weight) {
    WeightVector w{{speed_weight, batch_weight}, WeightOrigin::kStatic, 0};
    w.validate();
    return w;
}

std::vector<double> project_to_simplex(std::span<const double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double t = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - theta, 0.0);
    return w;
}

double closed_form_two_model(std::span<const double> batch_pred, std::span<const double> speed_pred,
                             std::span<const double> truth) {
    if (batch_pred.size() != speed_pred.size() || batch_pred.size() != truth.size() || truth.empty()) {
        throw WeightingError("closed form needs equal, non-empty lengths");
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = speed_pred[i] - batch_pred[i];
        num += d * (truth[i] - batch_pred[i]);
        den += d * d;
    }
    if (den == 0.0) return 0.5;
    return std::clamp(num / den, 0.0, 1.0);
}

namespace {

class Objective {
public:
    explicit Objective(const DwaInput& in) : in_(in), combo_(in.truth.size()) {}

    double value(std::span<const double> w) {
        mix(w);
        double acc = 0.0;
        for (std::size_t i = 0; i < combo_.size(); ++i) {
            const double r = combo_[i] - in_.truth[i];
            acc += r * r;
        }
        return acc / static_cast<double>(combo_.size());
    }

    void gradient(std::span<const double> w, std::span<double> g) {
        mix(w);
        const double scale = 2.0 / static_cast<double>(combo_.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            double acc = 0.0;
            const auto& p = in_.predictions[k];
            for (std::size_t i = 0; i < combo_.size(); ++i) acc += (combo_[i] - in_.truth[i]) * p[i];
            g[k] = scale * acc;
        }
    }

private:
    void mix(std::span<const double> w) {
        std::fill(combo_.begin(), combo_.end(), 0.0);
        for (std::size_t k = 0; k < w.size(); ++k) {
            const auto& p = in_.predictions[k];
            for (std::size_t i = 0; i < combo_.size(); ++i) combo_[i] += w[k] * p[i];
        }
    }

    const DwaInput& in_;
    std::vector<double> combo_;
};

void validate_input(const DwaInput& in) {
    if (in.predictions.empty()) throw WeightingError("dwa needs at least one model");
    if (in.truth.empty()) throw WeightingError("dwa needs a non-empty test set");
    for (double y : in.truth) {
        if (!std::isfinite(y)) throw WeightingError("non-finite ground truth");
    }
    for (const auto& p : in.predictions) {
        if (p.size() != in.truth.size()) throw WeightingError("prediction length differs from truth length");
        for (double x : p) {
            if (!std::isfinite(x)) throw WeightingError("non-finite prediction");
        }
    }
    if (!in.initial_guess.empty()) {
        if (in.initial_guess.size() != in.predictions.size()) throw WeightingError("initial guess size mismatch");
        for (double w : in.initial_guess) {
            if (!std::isfinite(w)) throw WeightingError("non-finite initial guess");
        }
    }
}

}  // namespace

DwaResult dwa(const DwaInput& input, const SolverOptions& options) {
    validate_input(input);
    const std::size_t k = input.predictions.size();

    std::vector<double> w = input.initial_guess.empty()
                                ? std::vector<double>(k, 1.0 / static_cast<double>(k))
                                : project_to_simplex(input.initial_guess);
    Objective f(input);
    DwaResult result;
    result.weights.origin = WeightOrigin::kDynamic;

    const bool degenerate = std::all_of(input.predictions.begin() + 1, input.predictions.end(),
                                        [&](const auto& p) { return p == input.predictions.front(); });
    if (degenerate) {
        result.weights.weights = w;
        result.loss = std::sqrt(f.value(w));
        result.converged = true;
        result.degenerate = true;
        return result;
    }

    double fw = f.value(w);
    std::vector<double> g(k), trial(k), step(k);
    double alpha = 1.0;
    int it = 0;
    bool converged = false;
    for (; it < options.max_iterations; ++it) {
        f.gradient(w, g);
        // Move along the simplex's tangent plane so the step size only has
        // to match the curvature between models, not their common level.
        const double mean_g = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(k);
        for (std::size_t j = 0; j < k; ++j) step[j] = g[j] - mean_g;

        alpha = std::min(alpha * 4.0, 1e12);
        bool accepted = false;
        double f_trial = fw;
        while (alpha > 1e-300) {
            for (std::size_t j = 0; j < k; ++j) trial[j] = w[j] - alpha * step[j];
            trial = project_to_simplex(trial);
            double decrease_bound = 0.0;
            for (std::size_t j = 0; j < k; ++j) decrease_bound += g[j] * (w[j] - trial[j]);
            f_trial = f.value(trial);
            // Armijo condition for projected steps.
            if (f_trial <= fw - 1e-4 * decrease_bound) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            converged = true;
            break;
        }
        double moved = 0.0;
        for (std::size_t j = 0; j < k; ++j) moved = std::max(moved, std::abs(trial[j] - w[j]));
        w = trial;
        fw = f_trial;
        if (moved < options.tolerance) {
            converged = true;
            ++it;
            break;
        }
    }

    result.weights.weights = w;
    result.loss = std::sqrt(std::max(fw, 0.0));
    result.iterations = it;
    result.converged = converged;
    return result;
}

}  // namespace hsa::weighting
