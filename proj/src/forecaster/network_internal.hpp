#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "hsa/forecaster.hpp"
#include "hsa/random.hpp"

namespace hsa::forecaster::detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

using hsa::unit_uniform;

struct ForwardCache {
    std::vector<double> gates;  // activated i, f, g, o per step
    std::vector<double> c;
    std::vector<double> tanh_c;
    std::vector<double> h;
    std::vector<double> dense_pre;
    std::vector<double> dense;
    std::vector<double> output;

    void resize(const NetworkConfig& cfg) {
        const std::size_t s = cfg.sequence_length, u = cfg.lstm_units;
        gates.resize(s * 4 * u);
        c.resize(s * u);
        tanh_c.resize(s * u);
        h.resize(s * u);
        dense_pre.resize(cfg.dense_units);
        dense.resize(cfg.dense_units);
        output.resize(cfg.output_units);
    }
};

struct BackwardScratch {
    std::vector<double> d_dense;
    std::vector<double> dh;
    std::vector<double> dc;
    std::vector<double> dz;

    void resize(const NetworkConfig& cfg) {
        d_dense.resize(cfg.dense_units);
        dh.resize(cfg.lstm_units);
        dc.resize(cfg.lstm_units);
        dz.resize(4 * cfg.lstm_units);
    }
};

void forward_cached(const ModelParams& p, std::span<const double> row, ForwardCache& cache);

/// Accumulates d(loss)/d(params) into grad given d(loss)/d(output).
void backward(const ModelParams& p, std::span<const double> row, const ForwardCache& cache,
              std::span<const double> d_output, std::span<double> grad, BackwardScratch& scratch);

}  // namespace hsa::forecaster::detail
