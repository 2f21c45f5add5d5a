// hsa-bench: runs one drift scenario under one deployment and writes the
// per-window, percentage-best, box-plot and latency reports.

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hsa/bench.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitPlacement = 3;
constexpr int kExitRuntime = 4;

using hsa::bench::ConfigError;

hsa::pipeline::InjectionConfig parse_window(const std::string& text) {
    hsa::pipeline::InjectionConfig inj;
    const auto colon = text.find(':');
    const auto kind = text.substr(0, colon);
    const auto value = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    try {
        std::size_t used = 0;
        if (kind == "count") {
            inj.rule = hsa::pipeline::CloseRule::kByCount;
            inj.count = std::stoull(value, &used);
        } else if (kind == "seconds") {
            inj.duration_s = std::stod(value, &used);
        } else {
            throw ConfigError("");
        }
        if (used != value.size()) throw ConfigError("");
    } catch (const std::exception&) {
        throw ConfigError("window: expected count:N or seconds:S, got '" + text + "'");
    }
    return inj;
}

std::vector<hsa::pipeline::WeightingMode> parse_weightings(const std::string& text) {
    std::vector<hsa::pipeline::WeightingMode> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            out.push_back(hsa::pipeline::WeightingMode::parse(item));
        } catch (const std::exception& e) {
            throw ConfigError("weighting[" + std::to_string(out.size()) + "]: " + e.what());
        }
    }
    return out;
}

void print_summary(const hsa::bench::ScenarioResult& r) {
    std::printf("scenario %s  deployment %s  fidelity %s  seed %llu\n",
                std::string(hsa::bench::drift_name(r.config.drift)).c_str(),
                std::string(hsa::fabric::preset_name(r.config.deployment)).c_str(),
                std::string(hsa::bench::fidelity_name(r.config.fidelity)).c_str(),
                static_cast<unsigned long long>(r.config.seed));
    std::printf("\n%-18s %8s %8s %8s %8s\n", "weighting", "windows", "speed", "batch", "hybrid");
    for (const auto& run : r.runs) {
        std::printf("%-18s %8zu %8.4f %8.4f %8.4f\n", run.mode.label().c_str(), run.best.windows, run.best.speed,
                    run.best.batch, run.best.hybrid);
    }
    std::printf("(fraction of windows each approach had the lowest RMSE; ties: %s)\n\n",
                std::string(hsa::bench::kTieRule).c_str());
    std::vector<std::pair<std::string, const hsa::fabric::LatencyLedger*>> ledgers;
    for (const auto& run : r.runs) ledgers.emplace_back(run.mode.label(), &run.session.ledger);
    std::fputs(hsa::fabric::report_latency(ledgers).c_str(), stdout);
    for (const auto& w : r.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid stream analytics scenario runner"};
    std::string scenario = "gradual", deployment = "edge-cloud", weighting = "dynamic", window = "seconds:30";
    std::string fidelity = "desk", data = "synth", out, calibration;
    std::size_t windows = 100;
    std::uint64_t seed = 1;
    double drift_ranges = 6.0;
    app.add_option("--scenario", scenario, "none, gradual or abrupt")->check(CLI::IsMember({"none", "gradual", "abrupt"}));
    app.add_option("--deployment", deployment, "edge, cloud or edge-cloud")
        ->check(CLI::IsMember({"edge", "cloud", "edge-cloud"}));
    app.add_option("--weighting", weighting, "comma list of dynamic and static:<ws>:<wb>");
    app.add_option("--windows", windows, "number of stream windows");
    app.add_option("--window", window, "window close rule: count:N or seconds:S");
    app.add_option("--fidelity", fidelity, "desk or paper training budget")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--seed", seed, "random seed");
    app.add_option("--data", data, "synth or a CSV file (timestamp column plus variables, target last)");
    app.add_option("--drift-ranges", drift_ranges, "accumulated drift over the series, in signal ranges");
    app.add_option("--calibration", calibration, "fabric calibration JSON");
    app.add_option("--out", out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        hsa::bench::ScenarioConfig cfg;
        cfg.drift = scenario == "none" ? hsa::drift::DriftKind::kNone
                    : scenario == "abrupt" ? hsa::drift::DriftKind::kAbrupt
                                           : hsa::drift::DriftKind::kGradual;
        cfg.deployment = hsa::fabric::preset_from_name(deployment);
        cfg.weightings = parse_weightings(weighting);
        cfg.windows = windows;
        cfg.injection = parse_window(window);
        cfg.fidelity = fidelity == "paper" ? hsa::bench::Fidelity::kPaper : hsa::bench::Fidelity::kDesk;
        cfg.seed = seed;
        cfg.data = data;
        cfg.drift_ranges = drift_ranges;
        if (!calibration.empty()) cfg.calibration_file = calibration;
        if (!out.empty()) cfg.out = out;
        const auto result = hsa::bench::run_scenario(cfg);
        print_summary(result);
        if (cfg.out) std::printf("\nreports written to %s\n", cfg.out->string().c_str());
        return 0;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const hsa::fabric::PlacementError& e) {
        std::fprintf(stderr, "placement error: %s\n", e.what());
        return kExitPlacement;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
