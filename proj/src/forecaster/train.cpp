#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hsa/forecaster.hpp"
#include "network_internal.hpp"

namespace hsa::forecaster {

void TrainConfig::validate() const {
    if (epochs < 1) throw ForecasterError("epochs must be >= 1");
    if (batch_size < 1) throw ForecasterError("batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ForecasterError("learning_rate must be finite and >= 0");
}

TrainResult train(const ModelParams& params, const timeseries::SupervisedSet& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.empty()) throw ForecasterError("cannot train on an empty set");
    const auto& net = params.config();
    if (net.output_units != 1) throw ForecasterError("training requires a single output unit");
    if (data.inputs.cols() != net.row_width()) {
        throw ForecasterError("training rows have " + std::to_string(data.inputs.cols()) + " values, network expects " +
                              std::to_string(net.row_width()));
    }

    TrainResult result{params, {}};
    auto& w = result.params.values();
    const std::size_t n_params = w.size();
    std::vector<double> grad(n_params), m(n_params, 0.0), v(n_params, 0.0);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed);

    detail::ForwardCache cache;
    detail::BackwardScratch scratch;
    std::uint64_t step = 0;
    double beta1_pow = 1.0, beta2_pow = 1.0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        double epoch_sq = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double batch_n = static_cast<double>(end - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t k = start; k < end; ++k) {
                const auto row = data.inputs.row(order[k]);
                detail::forward_cached(result.params, row, cache);
                const double err = cache.output[0] - data.targets[order[k]];
                epoch_sq += err * err;
                const double dy = 2.0 * err / batch_n;
                detail::backward(result.params, row, cache, std::span<const double>(&dy, 1), grad, scratch);
            }
            if (!std::isfinite(epoch_sq)) {
                throw DivergenceError("training loss became non-finite in epoch " + std::to_string(epoch), epoch);
            }
            ++step;
            if (cfg.optimizer == OptimizerKind::kSgd) {
                for (std::size_t p = 0; p < n_params; ++p) w[p] -= cfg.learning_rate * grad[p];
                continue;
            }
            beta1_pow *= cfg.beta1;
            beta2_pow *= cfg.beta2;
            const double c1 = 1.0 - beta1_pow, c2 = 1.0 - beta2_pow;
            for (std::size_t p = 0; p < n_params; ++p) {
                m[p] = cfg.beta1 * m[p] + (1.0 - cfg.beta1) * grad[p];
                v[p] = cfg.beta2 * v[p] + (1.0 - cfg.beta2) * grad[p] * grad[p];
                const double m_hat = m[p] / c1;
                const double v_hat = v[p] / c2;
                w[p] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
            }
        }
        const double mse = epoch_sq / static_cast<double>(order.size());
        for (double x : w) {
            if (!std::isfinite(x)) {
                throw DivergenceError("parameters became non-finite in epoch " + std::to_string(epoch), epoch);
            }
        }
        result.epoch_loss.push_back(mse);
    }
    return result;
}

}  // namespace hsa::forecaster
