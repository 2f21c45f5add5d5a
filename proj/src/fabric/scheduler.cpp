#include <cmath>

#include "hsa/fabric.hpp"

namespace hsa::fabric {

Tick seconds_to_ticks(double seconds) { return static_cast<Tick>(std::llround(seconds * kTicksPerSecond)); }

double ticks_to_seconds(Tick ticks) { return static_cast<double>(ticks) / kTicksPerSecond; }

std::uint64_t Scheduler::schedule_at(Tick tick, Action action) {
    if (tick < now_) throw FabricError("cannot schedule in the past");
    const auto seq = next_seq_++;
    queue_.push(Event{tick, seq, std::move(action)});
    return seq;
}

bool Scheduler::step() {
    if (queue_.empty()) return false;
    // top() is const, so copy before popping.
    Event ev = queue_.top();
    queue_.pop();
    now_ = ev.tick;
    ev.action();
    return true;
}

void Scheduler::run() {
    while (step()) {
    }
}

void Scheduler::run_until(Tick limit) {
    while (!queue_.empty() && queue_.top().tick <= limit) step();
    if (limit > now_) now_ = limit;
}

}  // namespace hsa::fabric
