#include "hsa/fabric.hpp"

namespace hsa::fabric {

std::string_view preset_name(Preset p) {
    switch (p) {
        case Preset::kEdgeCentric: return "edge";
        case Preset::kCloudCentric: return "cloud";
        case Preset::kEdgeCloud: return "edge-cloud";
    }
    return "?";
}

Preset preset_from_name(std::string_view name) {
    if (name == "edge" || name == "edge_centric") return Preset::kEdgeCentric;
    if (name == "cloud" || name == "cloud_centric") return Preset::kCloudCentric;
    if (name == "edge-cloud" || name == "edge_cloud") return Preset::kEdgeCloud;
    throw FabricError("unknown deployment '" + std::string(name) + "' (expected edge, cloud or edge-cloud)");
}

DeploymentPlan place(Preset preset, const Topology& topology, const Calibration& cal) {
    const auto& edge = cal.edge_node;
    const auto& cloud = cal.cloud_node;
    const auto& compute = cal.compute_node;
    for (const auto* id : {&edge, &cloud, &compute, &cal.store_node}) (void)topology.node(*id);
    if (topology.node(edge).role != NodeRole::kEdge) throw FabricError("topology has no edge node");
    if (topology.node(cloud).role != NodeRole::kCloud) throw FabricError("topology has no cloud node");

    DeploymentPlan plan;
    plan.preset = preset;
    plan.store_node = cal.store_node;
    plan.broker_node = cloud;
    auto& p = plan.placement;
    p[Module::kDataInjection] = edge;
    switch (preset) {
        case Preset::kEdgeCentric:
            for (auto m : all_modules()) p[m] = edge;
            break;
        case Preset::kCloudCentric:
            for (auto m : {Module::kBatchInference, Module::kSpeedInference, Module::kHybridInference,
                           Module::kModelSync, Module::kSpeedTraining})
                p[m] = compute;
            for (auto m : {Module::kDataSync, Module::kDataArchiving, Module::kPredictionArchiving}) p[m] = cloud;
            break;
        case Preset::kEdgeCloud:
            for (auto m : {Module::kBatchInference, Module::kSpeedInference, Module::kHybridInference,
                           Module::kModelSync, Module::kDataSync})
                p[m] = edge;
            p[Module::kSpeedTraining] = compute;
            for (auto m : {Module::kDataArchiving, Module::kPredictionArchiving}) p[m] = cloud;
            break;
    }

    // Speed training goes last: it is the module that does not fit on a small edge.
    static constexpr std::array<Module, kModuleCount> kAdmission{
        Module::kDataInjection,   Module::kDataSync,       Module::kModelSync,
        Module::kDataArchiving,   Module::kPredictionArchiving, Module::kBatchInference,
        Module::kSpeedInference,  Module::kHybridInference, Module::kSpeedTraining,
    };
    std::map<std::string, std::uint64_t> used;
    for (auto m : kAdmission) {
        const auto& node = topology.node(p.at(m));
        const auto need = cal.footprint(m);
        auto& u = used[node.id];
        if (need > node.memory_capacity - u) {
            throw PlacementError("out of memory placing " + std::string(module_name(m)) + " on " + node.id + ": needs " +
                                     std::to_string(need) + " bytes, " + std::to_string(node.memory_capacity - u) +
                                     " remaining",
                                 std::string(module_name(m)));
        }
        u += need;
    }
    return plan;
}

}  // namespace hsa::fabric
