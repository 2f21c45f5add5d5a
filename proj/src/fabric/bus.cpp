#include <vector>

#include "hsa/fabric.hpp"

namespace hsa::fabric {

namespace {

std::vector<std::string_view> levels(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto end = s.find('/', start);
        out.push_back(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
        if (end == std::string_view::npos) return out;
        start = end + 1;
    }
}

}  // namespace

bool topic_matches(std::string_view filter, std::string_view topic) {
    if (filter.empty() || topic.empty()) return false;
    const auto f = levels(filter);
    const auto t = levels(topic);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == "#") return i + 1 == f.size();  // "a/#" also matches "a"
        if (i >= t.size()) return false;
        if (f[i] != "+" && f[i] != t[i]) return false;
    }
    return f.size() == t.size();
}

std::size_t Bus::subscribe(const std::string& node, std::string filter, Handler handler) {
    (void)network_.topology().node(node);
    if (filter.empty()) throw FabricError("empty topic filter");
    subs_.push_back({node, std::move(filter), std::move(handler)});
    return subs_.size() - 1;
}

std::uint64_t Bus::publish(const std::string& node, std::string topic, std::vector<std::uint8_t> payload) {
    (void)network_.topology().node(node);
    if (topic.empty()) throw FabricError("empty topic");
    auto msg = std::make_shared<Message>();
    msg->id = next_id_++;
    msg->topic = std::move(topic);
    msg->payload = std::move(payload);
    msg->publisher = node;
    msg->published_at = network_.scheduler().now();

    auto& fan = fanout_[msg->id];
    for (std::size_t s = 0; s < subs_.size(); ++s) {
        if (!topic_matches(subs_[s].filter, msg->topic)) continue;
        fan.push_back(s);
        network_.send(node, subs_[s].node, msg->size(), [this, msg, s](Tick) {
            const Tick now = network_.scheduler().now();
            trace_.push_back({msg->id, s, now});
            subs_[s].handler(Delivery{msg.get(), subs_[s].node, now});
        });
    }
    return msg->id;
}

}  // namespace hsa::fabric
