#include <cstdio>
#include <fstream>
#include <sstream>

#include "hsa/bench.hpp"
#include "json.hpp"

namespace hsa::bench {

using nlohmann::ordered_json;

namespace {

constexpr std::array<fabric::Phase, 4> kPhases{fabric::Phase::kSpeedInference, fabric::Phase::kBatchInference,
                                               fabric::Phase::kHybridInference, fabric::Phase::kSpeedTraining};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::string> csv_header() {
    std::vector<std::string> h{"weighting",   "window",        "rmse_speed",           "rmse_batch",
                               "rmse_hybrid", "w_speed",       "w_batch",              "best",
                               "first_window_fallback", "no_speed_model", "solver_nonconverged",
                               "solver_degenerate", "speed_version", "staleness"};
    for (auto p : kPhases) {
        h.push_back(std::string(fabric::phase_name(p)) + "_computation_s");
        h.push_back(std::string(fabric::phase_name(p)) + "_communication_s");
    }
    return h;
}

double parse_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
}

ordered_json box_json(const BoxplotStats& b) {
    return {{"count", b.count},         {"median", b.median},           {"q1", b.q1},
            {"q3", b.q3},               {"whisker_low", b.whisker_low}, {"whisker_high", b.whisker_high},
            {"outliers", b.outliers}};
}

struct RmseColumns {
    std::vector<double> speed, batch, hybrid;
};

RmseColumns columns(const std::vector<WindowReport>& reports) {
    RmseColumns c;
    for (const auto& r : reports) {
        if (r.rmse_speed) c.speed.push_back(*r.rmse_speed);
        c.batch.push_back(r.rmse_batch);
        c.hybrid.push_back(r.rmse_hybrid);
    }
    return c;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

std::string windows_csv(const std::vector<WindowReport>& reports) {
    std::string out;
    const auto header = csv_header();
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += '\n';
    for (const auto& r : reports) {
        out += r.weighting + ',' + std::to_string(r.window) + ',';
        out += (r.rmse_speed ? num(*r.rmse_speed) : "") + ',';
        out += num(r.rmse_batch) + ',' + num(r.rmse_hybrid) + ',' + num(r.w_speed) + ',' + num(r.w_batch) + ',';
        out += (r.best ? std::string(approach_name(*r.best)) : "") + ',';
        for (bool f : {r.flags.first_window_fallback, r.flags.no_speed_model, r.flags.solver_nonconverged,
                       r.flags.solver_degenerate})
            out += f ? "1," : "0,";
        out += std::to_string(r.speed_version) + ',';
        out += r.staleness ? std::to_string(*r.staleness) : "";
        for (auto p : kPhases) {
            const auto& l = r.latency[static_cast<std::size_t>(p)];
            out += ',' + num(l.computation_s) + ',' + num(l.communication_s);
        }
        out += '\n';
    }
    return out;
}

std::vector<WindowReport> parse_windows_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || split_fields(line) != csv_header())
        throw std::runtime_error("windows csv: unexpected header");
    std::vector<WindowReport> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = split_fields(line);
        try {
            if (f.size() != csv_header().size()) throw std::runtime_error("wrong field count");
            WindowReport r;
            r.weighting = f[0];
            r.window = std::stoull(f[1]);
            if (!f[2].empty()) r.rmse_speed = parse_double(f[2]);
            r.rmse_batch = parse_double(f[3]);
            r.rmse_hybrid = parse_double(f[4]);
            r.w_speed = parse_double(f[5]);
            r.w_batch = parse_double(f[6]);
            if (f[7] == "speed") r.best = Approach::kSpeed;
            else if (f[7] == "batch") r.best = Approach::kBatch;
            else if (f[7] == "hybrid") r.best = Approach::kHybrid;
            else if (!f[7].empty()) throw std::runtime_error("unknown approach '" + f[7] + "'");
            r.flags = {f[8] == "1", f[9] == "1", f[10] == "1", f[11] == "1"};
            r.speed_version = std::stoull(f[12]);
            if (!f[13].empty()) r.staleness = std::stoll(f[13]);
            for (std::size_t p = 0; p < kPhases.size(); ++p)
                r.latency[p] = {parse_double(f[14 + 2 * p]), parse_double(f[15 + 2 * p])};
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("windows csv row " + std::to_string(row) + ": " + e.what());
        }
    }
    return out;
}

std::string summary_json(const ScenarioResult& result) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = ordered_json::parse(config_json(result.config));
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(result.config)));
    j["config_hash"] = hash;
    j["tie_rule"] = kTieRule;
    j["boxplot_convention"] = "tukey-1.5iqr";
    j["warnings"] = result.warnings;
    auto& runs = j["runs"] = ordered_json::array();
    for (const auto& run : result.runs) {
        ordered_json r;
        r["weighting"] = run.mode.label();
        r["windows"] = run.reports.size();
        const auto c = columns(run.reports);
        r["mean_rmse"] = {{"speed", c.speed.empty() ? ordered_json(nullptr) : ordered_json(mean(c.speed))},
                          {"batch", mean(c.batch)},
                          {"hybrid", mean(c.hybrid)}};
        r["percentage_best"] = {{"speed", run.best.speed},
                                {"batch", run.best.batch},
                                {"hybrid", run.best.hybrid},
                                {"windows", run.best.windows}};
        std::size_t fallback = 0, no_model = 0, nonconv = 0, degen = 0;
        std::int64_t max_stale = 0;
        double stale_sum = 0.0;
        std::size_t stale_n = 0;
        for (const auto& w : run.reports) {
            fallback += w.flags.first_window_fallback;
            no_model += w.flags.no_speed_model;
            nonconv += w.flags.solver_nonconverged;
            degen += w.flags.solver_degenerate;
            if (w.staleness) {
                max_stale = std::max(max_stale, *w.staleness);
                stale_sum += static_cast<double>(*w.staleness);
                ++stale_n;
            }
        }
        r["flags"] = {{"first_window_fallback", fallback},
                      {"no_speed_model", no_model},
                      {"solver_nonconverged", nonconv},
                      {"solver_degenerate", degen}};
        r["staleness"] = {{"max", max_stale}, {"mean", stale_n ? stale_sum / static_cast<double>(stale_n) : 0.0}};
        r["speed_models"] = {{"trained", run.session.speed_models_trained}, {"reused", run.session.speed_models_reused}};
        auto& errors = r["errors"] = ordered_json::array();
        for (const auto& [w, msg] : run.session.errors) errors.push_back({{"window", w}, {"message", msg}});
        auto& lat = r["latency"] = ordered_json::object();
        for (auto p : kPhases) {
            const auto a = run.session.ledger.average(p);
            lat[std::string(fabric::phase_name(p))] = {{"computation_s", a.computation_s},
                                                       {"communication_s", a.communication_s},
                                                       {"total_s", a.total_s},
                                                       {"windows", a.windows}};
        }
        auto& box = r["boxplot"] = ordered_json::object();
        if (!c.speed.empty()) box["speed"] = box_json(boxplot_stats(c.speed));
        if (!c.batch.empty()) box["batch"] = box_json(boxplot_stats(c.batch));
        if (!c.hybrid.empty()) box["hybrid"] = box_json(boxplot_stats(c.hybrid));
        runs.push_back(std::move(r));
    }
    return j.dump(2) + "\n";
}

std::string percentage_best_csv(const ScenarioResult& result) {
    std::string out = "approach";
    for (const auto& run : result.runs) out += ',' + run.mode.label();
    out += '\n';
    for (auto a : {Approach::kSpeed, Approach::kBatch, Approach::kHybrid}) {
        out += approach_name(a);
        for (const auto& run : result.runs) {
            const double v = a == Approach::kSpeed ? run.best.speed : a == Approach::kBatch ? run.best.batch : run.best.hybrid;
            out += ',' + num(v);
        }
        out += '\n';
    }
    return out;
}

std::string boxplot_csv(const ScenarioResult& result) {
    std::string out = "weighting,approach,count,median,q1,q3,whisker_low,whisker_high,outliers\n";
    for (const auto& run : result.runs) {
        const auto c = columns(run.reports);
        const std::pair<std::string_view, const std::vector<double>*> cols[] = {
            {"speed", &c.speed}, {"batch", &c.batch}, {"hybrid", &c.hybrid}};
        for (const auto& [name, values] : cols) {
            if (values->empty()) continue;
            const auto b = boxplot_stats(*values);
            out += run.mode.label() + ',' + std::string(name) + ',' + std::to_string(b.count) + ',' + num(b.median) +
                   ',' + num(b.q1) + ',' + num(b.q3) + ',' + num(b.whisker_low) + ',' + num(b.whisker_high) + ',';
            for (std::size_t i = 0; i < b.outliers.size(); ++i) out += (i ? ";" : "") + num(b.outliers[i]);
            out += '\n';
        }
    }
    return out;
}

std::string latency_csv(const ScenarioResult& result) {
    std::string out = "deployment,weighting,phase,computation_s,communication_s,total_s,windows\n";
    const auto deployment = std::string(fabric::preset_name(result.config.deployment));
    for (const auto& run : result.runs) {
        for (auto p : kPhases) {
            const auto a = run.session.ledger.average(p);
            out += deployment + ',' + run.mode.label() + ',' + std::string(fabric::phase_name(p)) + ',' +
                   num(a.computation_s) + ',' + num(a.communication_s) + ',' + num(a.total_s) + ',' +
                   std::to_string(a.windows) + '\n';
        }
    }
    return out;
}

void emit(const ScenarioResult& result, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    std::vector<WindowReport> all;
    for (const auto& run : result.runs) all.insert(all.end(), run.reports.begin(), run.reports.end());
    write_file(dir / "windows.csv", windows_csv(all));
    write_file(dir / "summary.json", summary_json(result));
    write_file(dir / "percentage_best.csv", percentage_best_csv(result));
    write_file(dir / "boxplot.csv", boxplot_csv(result));
    write_file(dir / "latency.csv", latency_csv(result));
}

}  // namespace hsa::bench
