#include <cmath>

#include "hsa/pipeline.hpp"

namespace hsa::pipeline {

void InjectionConfig::validate() const {
    if (rule == CloseRule::kByDuration) {
        if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw PipelineError("injection duration must be > 0");
        if (buffer_capacity < min_records) throw PipelineError("buffer capacity must be >= min_records");
    } else {
        if (count == 0) throw PipelineError("injection count must be > 0");
        if (buffer_capacity < count) throw PipelineError("buffer capacity must be >= count");
    }
    if (buffer_capacity == 0) throw PipelineError("buffer capacity must be > 0");
}

Injector::Injector(InjectionConfig config) : config_(config) { config_.validate(); }

std::size_t Injector::buffered() const noexcept {
    return closed_records_ + (has_open_ ? open_.records.size() : 0);
}

std::optional<Tick> Injector::deadline() const {
    if (!has_open_ || config_.rule != CloseRule::kByDuration) return std::nullopt;
    return open_.open_tick + fabric::seconds_to_ticks(config_.duration_s);
}

void Injector::close(Tick at) {
    open_.close_tick = at;
    closed_records_ += open_.records.size();
    closed_.push_back(std::move(open_));
    open_ = {};
    has_open_ = false;
    ++next_index_;
}

void Injector::advance(Tick now) {
    if (!has_open_ || config_.rule != CloseRule::kByDuration) return;
    if (now >= *deadline() && open_.records.size() >= config_.min_records) close(now);
}

OfferStatus Injector::offer(const timeseries::Record& record, Tick arrival) {
    if (last_timestamp_ && record.timestamp <= *last_timestamp_)
        throw PipelineError("out-of-order record: timestamp " + std::to_string(record.timestamp) + " after " +
                            std::to_string(*last_timestamp_));
    if (arrival < last_arrival_) throw PipelineError("arrival ticks must not decrease");
    advance(arrival);
    if (buffered() >= config_.buffer_capacity) return OfferStatus::kBackpressure;

    if (!has_open_) {
        open_ = timeseries::TimeWindow{next_index_, {}, arrival, arrival};
        has_open_ = true;
    }
    open_.records.push_back(record);
    last_timestamp_ = record.timestamp;
    last_arrival_ = arrival;

    if (config_.rule == CloseRule::kByCount) {
        if (open_.records.size() >= config_.count) close(arrival);
    } else {
        advance(arrival);
    }
    return OfferStatus::kAccepted;
}

std::vector<timeseries::TimeWindow> Injector::poll() {
    std::vector<timeseries::TimeWindow> out(std::make_move_iterator(closed_.begin()), std::make_move_iterator(closed_.end()));
    closed_.clear();
    closed_records_ = 0;
    return out;
}

Tick arrival_tick(std::size_t k, double records_per_second) {
    if (!(records_per_second > 0.0)) throw PipelineError("records_per_second must be > 0");
    return static_cast<Tick>(std::llround(static_cast<double>(k) * fabric::kTicksPerSecond / records_per_second));
}

std::vector<timeseries::TimeWindow> inject(const std::vector<timeseries::Record>& records,
                                           const InjectionConfig& config, double records_per_second) {
    Injector inj(config);
    std::vector<timeseries::TimeWindow> out;
    auto drain = [&] {
        for (auto& w : inj.poll()) out.push_back(std::move(w));
    };
    for (std::size_t k = 0; k < records.size(); ++k) {
        const Tick at = arrival_tick(k, records_per_second);
        if (auto d = inj.deadline(); d && *d <= at) inj.advance(*d);
        drain();
        if (inj.offer(records[k], at) == OfferStatus::kBackpressure) {
            drain();
            if (inj.offer(records[k], at) == OfferStatus::kBackpressure)
                throw PipelineError("injector buffer full with no closable window");
        }
        drain();
    }
    if (auto d = inj.deadline()) inj.advance(std::max(*d, records.empty() ? 0 : arrival_tick(records.size() - 1, records_per_second)));
    drain();
    return out;
}

}  // namespace hsa::pipeline
