#include "hsa/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "network_internal.hpp"

namespace hsa::forecaster {

void NetworkConfig::validate() const {
    if (input_dim == 0 || sequence_length == 0 || lstm_units == 0 || dense_units == 0 || output_units == 0) {
        throw ForecasterError("network dimensions must be positive");
    }
}

std::vector<TensorShape> tensor_layout(const NetworkConfig& c) {
    c.validate();
    const std::size_t gates = 4 * c.lstm_units;
    return {
        {"lstm.kernel", gates, c.input_dim},
        {"lstm.recurrent_kernel", gates, c.lstm_units},
        {"lstm.bias", gates, 1},
        {"dense.kernel", c.dense_units, c.lstm_units},
        {"dense.bias", c.dense_units, 1},
        {"output.kernel", c.output_units, c.dense_units},
        {"output.bias", c.output_units, 1},
    };
}

std::size_t parameter_count(const NetworkConfig& c) {
    c.validate();
    const std::size_t d = c.input_dim, u = c.lstm_units, dn = c.dense_units, o = c.output_units;
    return 4 * ((d + u) * u + u) + u * dn + dn + dn * o + o;
}

ModelParams::ModelParams(NetworkConfig config, std::vector<double> values)
    : config_(config), values_(std::move(values)) {
    std::size_t offset = 0;
    for (const auto& t : tensor_layout(config_)) {
        offsets_.push_back(offset);
        offset += t.size();
    }
    offsets_.push_back(offset);
    if (values_.size() != offset) {
        throw ForecasterError("parameter vector has " + std::to_string(values_.size()) + " values, config needs " +
                              std::to_string(offset));
    }
}

std::span<const double> ModelParams::tensor(std::size_t index) const {
    return {values_.data() + offsets_.at(index), offsets_.at(index + 1) - offsets_.at(index)};
}

std::span<double> ModelParams::tensor(std::size_t index) {
    return {values_.data() + offsets_.at(index), offsets_.at(index + 1) - offsets_.at(index)};
}

ModelParams init(const NetworkConfig& config) {
    const auto layout = tensor_layout(config);
    std::vector<double> values;
    values.reserve(parameter_count(config));
    std::mt19937_64 rng(config.seed);
    for (std::size_t k = 0; k < layout.size(); ++k) {
        const auto& t = layout[k];
        if (t.cols == 1) {
            for (std::size_t r = 0; r < t.rows; ++r) {
                const bool forget_gate = k == kLstmBias && r >= config.lstm_units && r < 2 * config.lstm_units;
                values.push_back(forget_gate ? 1.0 : 0.0);
            }
            continue;
        }
        const double limit = std::sqrt(6.0 / static_cast<double>(t.rows + t.cols));
        for (std::size_t i = 0; i < t.size(); ++i) values.push_back((2.0 * detail::unit_uniform(rng) - 1.0) * limit);
    }
    return ModelParams(config, std::move(values));
}

namespace detail {

void forward_cached(const ModelParams& p, std::span<const double> row, ForwardCache& cache) {
    const auto& c = p.config();
    const std::size_t d = c.input_dim, u = c.lstm_units, steps = c.sequence_length;
    const std::size_t g4 = 4 * u;
    const double* wx = p.tensor(kLstmInputWeights).data();
    const double* wh = p.tensor(kLstmRecurrentWeights).data();
    const double* b = p.tensor(kLstmBias).data();

    cache.resize(c);
    for (std::size_t t = 0; t < steps; ++t) {
        const double* x = row.data() + t * d;
        const double* h_prev = t == 0 ? nullptr : cache.h.data() + (t - 1) * u;
        const double* c_prev = t == 0 ? nullptr : cache.c.data() + (t - 1) * u;
        double* gates = cache.gates.data() + t * g4;
        for (std::size_t r = 0; r < g4; ++r) {
            double z = b[r];
            const double* wrow = wx + r * d;
            for (std::size_t k = 0; k < d; ++k) z += wrow[k] * x[k];
            if (h_prev != nullptr) {
                const double* hrow = wh + r * u;
                for (std::size_t k = 0; k < u; ++k) z += hrow[k] * h_prev[k];
            }
            gates[r] = z;
        }
        double* ct = cache.c.data() + t * u;
        double* tct = cache.tanh_c.data() + t * u;
        double* ht = cache.h.data() + t * u;
        for (std::size_t j = 0; j < u; ++j) {
            const double ig = sigmoid(gates[j]);
            const double fg = sigmoid(gates[u + j]);
            const double gg = std::tanh(gates[2 * u + j]);
            const double og = sigmoid(gates[3 * u + j]);
            gates[j] = ig;
            gates[u + j] = fg;
            gates[2 * u + j] = gg;
            gates[3 * u + j] = og;
            ct[j] = ig * gg + (c_prev != nullptr ? fg * c_prev[j] : 0.0);
            tct[j] = std::tanh(ct[j]);
            ht[j] = og * tct[j];
        }
    }

    const double* h_last = cache.h.data() + (steps - 1) * u;
    const double* wd = p.tensor(kDenseWeights).data();
    const double* bd = p.tensor(kDenseBias).data();
    for (std::size_t r = 0; r < c.dense_units; ++r) {
        double a = bd[r];
        for (std::size_t k = 0; k < u; ++k) a += wd[r * u + k] * h_last[k];
        cache.dense_pre[r] = a;
        cache.dense[r] = a > 0.0 ? a : 0.0;
    }
    const double* wo = p.tensor(kOutputWeights).data();
    const double* bo = p.tensor(kOutputBias).data();
    for (std::size_t r = 0; r < c.output_units; ++r) {
        double y = bo[r];
        for (std::size_t k = 0; k < c.dense_units; ++k) y += wo[r * c.dense_units + k] * cache.dense[k];
        cache.output[r] = y;
    }
}

void backward(const ModelParams& p, std::span<const double> row, const ForwardCache& cache,
              std::span<const double> d_output, std::span<double> grad, BackwardScratch& scratch) {
    const auto& c = p.config();
    const std::size_t d = c.input_dim, u = c.lstm_units, steps = c.sequence_length, dn = c.dense_units;
    const std::size_t g4 = 4 * u;
    const auto offset = [&](std::size_t k) {
        return static_cast<std::size_t>(p.tensor(k).data() - p.values().data());
    };
    double* g_wx = grad.data() + offset(kLstmInputWeights);
    double* g_wh = grad.data() + offset(kLstmRecurrentWeights);
    double* g_b = grad.data() + offset(kLstmBias);
    double* g_wd = grad.data() + offset(kDenseWeights);
    double* g_bd = grad.data() + offset(kDenseBias);
    double* g_wo = grad.data() + offset(kOutputWeights);
    double* g_bo = grad.data() + offset(kOutputBias);

    const double* wo = p.tensor(kOutputWeights).data();
    const double* wd = p.tensor(kDenseWeights).data();
    const double* wh = p.tensor(kLstmRecurrentWeights).data();

    scratch.resize(c);
    auto& d_dense = scratch.d_dense;
    std::fill(d_dense.begin(), d_dense.end(), 0.0);
    for (std::size_t r = 0; r < c.output_units; ++r) {
        const double dy = d_output[r];
        g_bo[r] += dy;
        for (std::size_t k = 0; k < dn; ++k) {
            g_wo[r * dn + k] += dy * cache.dense[k];
            d_dense[k] += dy * wo[r * dn + k];
        }
    }

    const double* h_last = cache.h.data() + (steps - 1) * u;
    auto& dh = scratch.dh;
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t r = 0; r < dn; ++r) {
        const double da = cache.dense_pre[r] > 0.0 ? d_dense[r] : 0.0;
        if (da == 0.0) continue;
        g_bd[r] += da;
        for (std::size_t k = 0; k < u; ++k) {
            g_wd[r * u + k] += da * h_last[k];
            dh[k] += da * wd[r * u + k];
        }
    }

    auto& dc = scratch.dc;
    auto& dz = scratch.dz;
    std::fill(dc.begin(), dc.end(), 0.0);
    for (std::size_t t = steps; t-- > 0;) {
        const double* gates = cache.gates.data() + t * g4;
        const double* tct = cache.tanh_c.data() + t * u;
        const double* c_prev = t == 0 ? nullptr : cache.c.data() + (t - 1) * u;
        for (std::size_t j = 0; j < u; ++j) {
            const double ig = gates[j], fg = gates[u + j], gg = gates[2 * u + j], og = gates[3 * u + j];
            const double d_o = dh[j] * tct[j];
            const double dcj = dc[j] + dh[j] * og * (1.0 - tct[j] * tct[j]);
            const double d_i = dcj * gg;
            const double d_g = dcj * ig;
            const double d_f = c_prev != nullptr ? dcj * c_prev[j] : 0.0;
            dc[j] = dcj * fg;
            dz[j] = d_i * ig * (1.0 - ig);
            dz[u + j] = d_f * fg * (1.0 - fg);
            dz[2 * u + j] = d_g * (1.0 - gg * gg);
            dz[3 * u + j] = d_o * og * (1.0 - og);
        }
        const double* x = row.data() + t * d;
        const double* h_prev = t == 0 ? nullptr : cache.h.data() + (t - 1) * u;
        for (std::size_t r = 0; r < g4; ++r) {
            const double z = dz[r];
            g_b[r] += z;
            double* gx = g_wx + r * d;
            for (std::size_t k = 0; k < d; ++k) gx[k] += z * x[k];
            if (h_prev != nullptr) {
                double* gh = g_wh + r * u;
                for (std::size_t k = 0; k < u; ++k) gh[k] += z * h_prev[k];
            }
        }
        if (t == 0) break;
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t r = 0; r < g4; ++r) {
            const double z = dz[r];
            if (z == 0.0) continue;
            const double* hrow = wh + r * u;
            for (std::size_t k = 0; k < u; ++k) dh[k] += z * hrow[k];
        }
    }
}

}  // namespace detail

namespace {

void check_row(const ModelParams& params, std::span<const double> row) {
    if (row.size() != params.config().row_width()) {
        throw ForecasterError("input row has " + std::to_string(row.size()) + " values, network expects " +
                              std::to_string(params.config().row_width()));
    }
    for (double x : row) {
        if (!std::isfinite(x)) throw ForecasterError("non-finite network input");
    }
}

}  // namespace

double forward(const ModelParams& params, std::span<const double> input_row) {
    if (params.config().output_units != 1) throw ForecasterError("forward requires a single output unit");
    check_row(params, input_row);
    detail::ForwardCache cache;
    detail::forward_cached(params, input_row, cache);
    const double y = cache.output[0];
    if (!std::isfinite(y)) throw ForecasterError("non-finite network output");
    return y;
}

std::vector<double> predict_batch(const ModelParams& params, const timeseries::Matrix& inputs) {
    if (params.config().output_units != 1) throw ForecasterError("predict_batch requires a single output unit");
    std::vector<double> out;
    out.reserve(inputs.rows());
    detail::ForwardCache cache;
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        const auto row = inputs.row(r);
        check_row(params, row);
        detail::forward_cached(params, row, cache);
        if (!std::isfinite(cache.output[0])) throw ForecasterError("non-finite network output");
        out.push_back(cache.output[0]);
    }
    return out;
}

LossAndGradient loss_and_gradient(const ModelParams& params, const timeseries::Matrix& inputs,
                                  std::span<const double> targets) {
    if (params.config().output_units != 1) throw ForecasterError("training requires a single output unit");
    if (inputs.rows() != targets.size() || inputs.rows() == 0) {
        throw ForecasterError("inputs and targets must be non-empty and equally long");
    }
    LossAndGradient out;
    out.gradient.assign(params.size(), 0.0);
    detail::ForwardCache cache;
    detail::BackwardScratch scratch;
    const double n = static_cast<double>(targets.size());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
        const auto row = inputs.row(r);
        check_row(params, row);
        detail::forward_cached(params, row, cache);
        const double err = cache.output[0] - targets[r];
        out.loss += err * err / n;
        const double dy = 2.0 * err / n;
        detail::backward(params, row, cache, std::span<const double>(&dy, 1), out.gradient, scratch);
    }
    return out;
}

}  // namespace hsa::forecaster
