#include <algorithm>
#include <cmath>

#include "hsa/fabric.hpp"

namespace hsa::fabric {

void NodeSpec::validate() const {
    if (id.empty()) throw FabricError("node id is empty");
    if (!(compute_factor > 0.0) || !std::isfinite(compute_factor))
        throw FabricError("node " + id + ": compute_factor must be > 0");
    if (memory_capacity == 0) throw FabricError("node " + id + ": memory capacity must be > 0");
}

void LinkSpec::validate() const {
    if (from.empty() || to.empty()) throw FabricError("link endpoint is empty");
    if (!(latency_ms >= 0.0) || !std::isfinite(latency_ms)) throw FabricError("link " + from + "->" + to + ": latency must be >= 0");
    if (!(bandwidth_bytes_per_s > 0.0)) throw FabricError("link " + from + "->" + to + ": bandwidth must be > 0");
}

void Topology::add_node(NodeSpec node) {
    node.validate();
    if (nodes_.contains(node.id)) throw FabricError("duplicate node " + node.id);
    auto id = node.id;
    nodes_.emplace(std::move(id), std::move(node));
}

void Topology::add_link(LinkSpec link) {
    link.validate();
    if (!has_node(link.from)) throw UnknownNodeError("unknown node " + link.from);
    if (!has_node(link.to)) throw UnknownNodeError("unknown node " + link.to);
    if (link.from == link.to) throw FabricError("self link on " + link.from + "; same-node traffic is free");
    auto key = std::make_pair(link.from, link.to);
    links_[key] = std::move(link);
}

void Topology::add_duplex_link(const std::string& a, const std::string& b, double latency_ms, double bandwidth) {
    add_link({a, b, latency_ms, bandwidth});
    add_link({b, a, latency_ms, bandwidth});
}

const NodeSpec& Topology::node(const std::string& id) const {
    const auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNodeError("unknown node " + id);
    return it->second;
}

const LinkSpec& Topology::link(const std::string& from, const std::string& to) const {
    (void)node(from);
    (void)node(to);
    const auto it = links_.find({from, to});
    if (it == links_.end()) throw FabricError("no link " + from + "->" + to);
    return it->second;
}

Tick Topology::transfer_ticks(const std::string& from, const std::string& to, std::size_t bytes) const {
    if (from == to) {
        (void)node(from);
        return 0;
    }
    const auto& l = link(from, to);
    const double seconds = l.latency_ms / 1000.0 + static_cast<double>(bytes) / l.bandwidth_bytes_per_s;
    return seconds_to_ticks(seconds);
}

void Topology::set_node_up(const std::string& id, bool up) {
    (void)node(id);
    down_[id] = !up;
}

bool Topology::node_up(const std::string& id) const {
    (void)node(id);
    const auto it = down_.find(id);
    return it == down_.end() || !it->second;
}

void Topology::set_partitioned(const std::string& a, const std::string& b, bool cut) {
    (void)node(a);
    (void)node(b);
    cut_[{a, b}] = cut;
    cut_[{b, a}] = cut;
}

bool Topology::partitioned(const std::string& from, const std::string& to) const {
    const auto it = cut_.find({from, to});
    return it != cut_.end() && it->second;
}

void Network::send(const std::string& from, const std::string& to, std::size_t bytes, Arrival on_arrival) {
    (void)topology_.node(from);
    (void)topology_.node(to);
    Pending p{bytes, scheduler_.now(), std::move(on_arrival)};
    auto& held = held_[{from, to}];
    if (topology_.partitioned(from, to) || !held.empty()) {
        held.push_back(std::move(p));
        return;
    }
    dispatch(from, to, std::move(p));
}

void Network::dispatch(const std::string& from, const std::string& to, Pending p) {
    const auto key = std::make_pair(from, to);
    Tick arrival = scheduler_.now() + topology_.transfer_ticks(from, to, p.bytes);
    auto& last = last_arrival_[key];
    arrival = std::max(arrival, last);
    last = arrival;
    scheduler_.schedule_at(arrival, [cb = std::move(p.on_arrival), sent = p.sent_at] { cb(sent); });
}

void Network::partition(const std::string& a, const std::string& b) { topology_.set_partitioned(a, b, true); }

void Network::heal(const std::string& a, const std::string& b) {
    topology_.set_partitioned(a, b, false);
    for (const auto& key : {std::make_pair(a, b), std::make_pair(b, a)}) {
        auto it = held_.find(key);
        if (it == held_.end()) continue;
        auto queue = std::move(it->second);
        held_.erase(it);
        for (auto& p : queue) dispatch(key.first, key.second, std::move(p));
    }
}

std::size_t Network::queued(const std::string& from, const std::string& to) const {
    const auto it = held_.find({from, to});
    return it == held_.end() ? 0 : it->second.size();
}

}  // namespace hsa::fabric
