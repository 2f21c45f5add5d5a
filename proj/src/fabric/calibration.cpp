#include <fstream>

#include "hsa/fabric.hpp"
#include "json.hpp"

namespace hsa::fabric {

namespace {

constexpr std::array<std::string_view, kModuleCount> kModuleNames{
    "data_injection", "batch_inference", "speed_inference", "hybrid_inference",     "model_sync",
    "data_sync",      "speed_training",  "data_archiving",  "prediction_archiving",
};

constexpr std::uint64_t kMiB = 1024ull * 1024ull;
constexpr std::uint64_t kGiB = 1024ull * kMiB;

constexpr std::array<std::string_view, 5> kCostKeys{"speed_inference", "batch_inference", "hybrid_combine", "weight_fit",
                                                    "speed_training"};

std::string role_name(NodeRole r) { return r == NodeRole::kEdge ? "edge" : "cloud"; }

NodeRole role_from(const std::string& s, const std::string& where) {
    if (s == "edge") return NodeRole::kEdge;
    if (s == "cloud") return NodeRole::kCloud;
    throw FabricError(where + ": role must be 'edge' or 'cloud'");
}

template <class T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw FabricError(where + "." + key + ": missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FabricError(where + "." + key + ": wrong type");
    }
}

}  // namespace

std::string_view module_name(Module m) { return kModuleNames.at(static_cast<std::size_t>(m)); }

Module module_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kModuleNames.size(); ++i)
        if (kModuleNames[i] == name) return static_cast<Module>(i);
    throw FabricError("unknown module '" + std::string(name) + "'");
}

std::span<const Module> all_modules() {
    static constexpr std::array<Module, kModuleCount> kAll{
        Module::kDataInjection, Module::kBatchInference, Module::kSpeedInference,
        Module::kHybridInference, Module::kModelSync, Module::kDataSync,
        Module::kSpeedTraining, Module::kDataArchiving, Module::kPredictionArchiving,
    };
    return kAll;
}

Topology Calibration::topology() const {
    Topology t;
    for (const auto& n : nodes) t.add_node(n);
    for (const auto& l : links) t.add_link(l);
    return t;
}

const OperationCost& Calibration::cost(const std::string& op) const {
    const auto it = costs.find(op);
    if (it == costs.end()) throw FabricError("no cost for operation '" + op + "'");
    return it->second;
}

std::uint64_t Calibration::footprint(Module m) const {
    const auto it = footprints.find(std::string(module_name(m)));
    return it == footprints.end() ? 0 : it->second;
}

void Calibration::validate() const {
    const auto t = topology();
    for (const auto* id : {&store_node, &edge_node, &cloud_node, &compute_node})
        if (!t.has_node(*id)) throw FabricError("calibration references unknown node '" + *id + "'");
    if (t.node(edge_node).role != NodeRole::kEdge) throw FabricError("edge_node must have role edge");
    for (auto key : kCostKeys) {
        const auto& c = cost(std::string(key));
        if (c.fixed_s < 0 || c.per_record_s < 0 || c.per_iteration_s < 0)
            throw FabricError("costs." + std::string(key) + ": negative cost");
    }
    for (const auto& [name, bytes] : footprints) (void)module_from_name(name);
    if (!(token_ttl_s > 0)) throw FabricError("token_ttl_s must be > 0");
}

Calibration default_calibration() {
    Calibration c;
    c.nodes = {
        {"edge", NodeRole::kEdge, 1.17, 4 * kGiB},
        {"cloud", NodeRole::kCloud, 1.0, 10 * kGiB},
        {"ec2", NodeRole::kCloud, 1.0, 32 * kGiB},
    };
    // Uplinks from the edge include broker and function dispatch time.
    c.links = {
        {"edge", "cloud", 6700.0, 1e6}, {"cloud", "edge", 100.0, 1e6}, {"edge", "ec2", 13800.0, 1e6},
        {"ec2", "edge", 150.0, 1e6},    {"cloud", "ec2", 100.0, 5e7},  {"ec2", "cloud", 100.0, 5e7},
    };
    c.costs = {
        {"speed_inference", {8.82, 0.0, 0.0}},
        {"batch_inference", {8.49, 0.0, 0.0}},
        {"hybrid_combine", {20.6, 0.0, 0.0}},
        {"weight_fit", {3.0, 0.0, 0.0005}},
        {"speed_training", {14.73, 0.0, 0.0}},
    };
    c.footprints = {
        {"data_injection", 64 * kMiB},   {"batch_inference", 640 * kMiB}, {"speed_inference", 640 * kMiB},
        {"hybrid_inference", 256 * kMiB}, {"model_sync", 64 * kMiB},       {"data_sync", 64 * kMiB},
        {"speed_training", 3 * kGiB},     {"data_archiving", 64 * kMiB},   {"prediction_archiving", 64 * kMiB},
    };
    return c;
}

Calibration load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FabricError("cannot open calibration file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw FabricError(path + ": " + e.what());
    }
    Calibration c;
    if (!j.contains("nodes") || !j["nodes"].is_array()) throw FabricError("nodes: missing array");
    for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
        const auto& n = j["nodes"][i];
        const auto where = "nodes[" + std::to_string(i) + "]";
        c.nodes.push_back({required<std::string>(n, "id", where),
                           role_from(required<std::string>(n, "role", where), where + ".role"),
                           required<double>(n, "compute_factor", where), required<std::uint64_t>(n, "memory_bytes", where)});
    }
    if (!j.contains("links") || !j["links"].is_array()) throw FabricError("links: missing array");
    for (std::size_t i = 0; i < j["links"].size(); ++i) {
        const auto& l = j["links"][i];
        const auto where = "links[" + std::to_string(i) + "]";
        c.links.push_back({required<std::string>(l, "from", where), required<std::string>(l, "to", where),
                           required<double>(l, "latency_ms", where), required<double>(l, "bandwidth_bytes_per_s", where)});
    }
    if (!j.contains("costs") || !j["costs"].is_object()) throw FabricError("costs: missing object");
    for (const auto& [op, v] : j["costs"].items()) {
        const auto where = "costs." + op;
        c.costs[op] = {v.value("fixed_s", 0.0), v.value("per_record_s", 0.0), v.value("per_iteration_s", 0.0)};
    }
    if (j.contains("footprints")) {
        for (const auto& [m, v] : j["footprints"].items()) {
            if (!v.is_number_unsigned()) throw FabricError("footprints." + m + ": expected bytes");
            c.footprints[m] = v.get<std::uint64_t>();
        }
    }
    if (j.contains("services")) {
        const auto& s = j["services"];
        c.store_node = s.value("store", c.store_node);
        c.edge_node = s.value("edge", c.edge_node);
        c.cloud_node = s.value("cloud", c.cloud_node);
        c.compute_node = s.value("compute", c.compute_node);
    }
    c.token_ttl_s = j.value("token_ttl_s", c.token_ttl_s);
    c.validate();
    return c;
}

std::string calibration_to_json(const Calibration& c) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : c.nodes)
        j["nodes"].push_back({{"id", n.id}, {"role", role_name(n.role)}, {"compute_factor", n.compute_factor},
                              {"memory_bytes", n.memory_capacity}});
    j["links"] = nlohmann::ordered_json::array();
    for (const auto& l : c.links)
        j["links"].push_back({{"from", l.from}, {"to", l.to}, {"latency_ms", l.latency_ms},
                              {"bandwidth_bytes_per_s", l.bandwidth_bytes_per_s}});
    for (const auto& [op, v] : c.costs)
        j["costs"][op] = {{"fixed_s", v.fixed_s}, {"per_record_s", v.per_record_s}, {"per_iteration_s", v.per_iteration_s}};
    for (const auto& [m, b] : c.footprints) j["footprints"][m] = b;
    j["services"] = {{"store", c.store_node}, {"edge", c.edge_node}, {"cloud", c.cloud_node}, {"compute", c.compute_node}};
    j["token_ttl_s"] = c.token_ttl_s;
    return j.dump(2) + "\n";
}

Tick computation_ticks(double base_seconds, const NodeSpec& node) {
    return seconds_to_ticks(base_seconds * node.compute_factor);
}

}  // namespace hsa::fabric
