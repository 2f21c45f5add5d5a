#include <cstdio>

#include "hsa/fabric.hpp"

namespace hsa::fabric {

std::string_view phase_name(Phase p) {
    switch (p) {
        case Phase::kSpeedInference: return "speed_inference";
        case Phase::kBatchInference: return "batch_inference";
        case Phase::kHybridInference: return "hybrid_inference";
        case Phase::kSpeedTraining: return "speed_training";
    }
    return "?";
}

void LatencyLedger::add_computation(std::size_t window, Phase phase, Tick ticks) {
    const auto i = static_cast<std::size_t>(phase);
    rows_[window][i].computation += ticks;
    touched_[window][i] = true;
}

void LatencyLedger::add_communication(std::size_t window, Phase phase, Tick ticks) {
    const auto i = static_cast<std::size_t>(phase);
    rows_[window][i].communication += ticks;
    touched_[window][i] = true;
}

PhaseLatency LatencyLedger::at(std::size_t window, Phase phase) const {
    const auto it = rows_.find(window);
    return it == rows_.end() ? PhaseLatency{} : it->second[static_cast<std::size_t>(phase)];
}

LatencyLedger::Average LatencyLedger::average(Phase phase) const {
    const auto i = static_cast<std::size_t>(phase);
    Average a;
    Tick comp = 0, comm = 0;
    for (const auto& [w, row] : rows_) {
        if (!touched_.at(w)[i]) continue;
        comp += row[i].computation;
        comm += row[i].communication;
        ++a.windows;
    }
    if (a.windows == 0) return a;
    const double n = static_cast<double>(a.windows);
    a.computation_s = ticks_to_seconds(comp) / n;
    a.communication_s = ticks_to_seconds(comm) / n;
    a.total_s = a.computation_s + a.communication_s;
    return a;
}

std::string report_latency(const std::vector<std::pair<std::string, const LatencyLedger*>>& ledgers) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %-18s %12s %14s %10s %8s\n", "run", "phase", "computation_s",
                  "communication_s", "total_s", "windows");
    out += buf;
    for (const auto& [name, ledger] : ledgers) {
        for (auto ph : {Phase::kSpeedInference, Phase::kBatchInference, Phase::kHybridInference, Phase::kSpeedTraining}) {
            const auto a = ledger->average(ph);
            std::snprintf(buf, sizeof buf, "%-16s %-18s %12.3f %14.3f %10.3f %8zu\n", name.c_str(),
                          std::string(phase_name(ph)).c_str(), a.computation_s, a.communication_s, a.total_s, a.windows);
            out += buf;
        }
    }
    return out;
}

}  // namespace hsa::fabric
