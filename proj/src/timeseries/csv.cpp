#include "hsa/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hsa::timeseries {

std::string format_double(double value) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw TimeSeriesError("cannot format double");
    return std::string(buf, end);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw TimeSeriesError("not a number: '" + std::string(text) + "'");
    }
    return value;
}

namespace {

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len, const std::string& whole) {
    if (pos + len > s.size()) throw TimeSeriesError("truncated timestamp '" + whole + "'");
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, value);
    if (ec != std::errc{} || ptr != s.data() + pos + len) throw TimeSeriesError("bad timestamp '" + whole + "'");
    return value;
}

void expect_char(std::string_view s, std::size_t pos, char c, const std::string& whole) {
    if (pos >= s.size() || s[pos] != c) throw TimeSeriesError("bad timestamp '" + whole + "'");
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::int64_t parse_iso8601(const std::string& text) {
    std::string_view s = text;
    const int year = parse_fixed(s, 0, 4, text);
    expect_char(s, 4, '-', text);
    const int month = parse_fixed(s, 5, 2, text);
    expect_char(s, 7, '-', text);
    const int day = parse_fixed(s, 8, 2, text);
    if (s.size() < 19 || (s[10] != 'T' && s[10] != ' ')) throw TimeSeriesError("bad timestamp '" + text + "'");
    const int hour = parse_fixed(s, 11, 2, text);
    expect_char(s, 13, ':', text);
    const int minute = parse_fixed(s, 14, 2, text);
    expect_char(s, 16, ':', text);
    const int second = parse_fixed(s, 17, 2, text);
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    }
    int offset_minutes = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            const int sign = s[pos] == '+' ? 1 : -1;
            const int oh = parse_fixed(s, pos + 1, 2, text);
            expect_char(s, pos + 3, ':', text);
            const int om = parse_fixed(s, pos + 4, 2, text);
            offset_minutes = sign * (oh * 60 + om);
            pos += 6;
        }
    }
    if (pos != s.size()) throw TimeSeriesError("bad timestamp '" + text + "'");

    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) throw TimeSeriesError("bad timestamp '" + text + "'");
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second -
           static_cast<std::int64_t>(offset_minutes) * 60;
}

Series read_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw TimeSeriesError("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw TimeSeriesError(path + ": empty file");
    ++line_no;
    const auto header = split_line(line);

    auto column_of = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw TimeSeriesError(path + ": missing column '" + name + "'");
    };

    const std::size_t ts_col = column_of(schema.timestamp_column);
    std::vector<std::string> names = schema.variable_columns;
    if (names.empty()) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (i != ts_col) names.push_back(header[i]);
    }
    if (names.empty()) throw TimeSeriesError(path + ": no variable columns");
    std::vector<std::size_t> var_cols;
    for (const auto& n : names) var_cols.push_back(column_of(n));

    std::size_t target_index = names.size() - 1;
    if (!schema.target_column.empty()) {
        auto it = std::find(names.begin(), names.end(), schema.target_column);
        if (it == names.end()) throw TimeSeriesError(path + ": target column '" + schema.target_column + "' not among variables");
        target_index = static_cast<std::size_t>(it - names.begin());
    }

    std::vector<Record> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_line(line);
        const auto where = path + ":" + std::to_string(line_no) + ": ";
        if (cells.size() != header.size()) {
            throw TimeSeriesError(where + "expected " + std::to_string(header.size()) + " cells, got " +
                                  std::to_string(cells.size()));
        }
        Record r;
        try {
            if (schema.timestamp_format == TimestampFormat::kIso8601) {
                r.timestamp = parse_iso8601(cells[ts_col]);
            } else {
                std::int64_t tick = 0;
                const auto& c = cells[ts_col];
                auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), tick);
                if (ec != std::errc{} || ptr != c.data() + c.size()) throw TimeSeriesError("bad tick '" + c + "'");
                r.timestamp = tick;
            }
            r.features.reserve(var_cols.size());
            for (auto col : var_cols) {
                const double v = parse_double(cells[col]);
                if (!std::isfinite(v)) throw TimeSeriesError("non-finite value in column '" + header[col] + "'");
                r.features.push_back(v);
            }
        } catch (const TimeSeriesError& e) {
            throw TimeSeriesError(where + e.what());
        }
        if (!records.empty() && r.timestamp <= records.back().timestamp) {
            throw TimeSeriesError(where + "timestamp not strictly increasing");
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw TimeSeriesError(path + ": no data rows");

    SeriesMetadata meta;
    meta.source = path;
    meta.variable_names = names;
    return Series(std::move(records), target_index, std::move(meta));
}

void write_csv(const std::string& path, const Series& series) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw TimeSeriesError("cannot write " + path);
    out << "timestamp";
    const auto& names = series.metadata().variable_names;
    for (std::size_t v = 0; v < series.variable_count(); ++v) {
        out << ',' << (v < names.size() ? names[v] : "x" + std::to_string(v));
    }
    out << '\n';
    for (const auto& r : series.records()) {
        out << r.timestamp;
        for (double x : r.features) out << ',' << format_double(x);
        out << '\n';
    }
    if (!out) throw TimeSeriesError("write failed: " + path);
}

}  // namespace hsa::timeseries
