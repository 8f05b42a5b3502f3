#include "fbev/class_map.hpp"

#include "fbev/errors.hpp"

#include <algorithm>

namespace fbev {

const std::vector<ClassTableEntry>& class_table() {
    // Source labels follow the KITTI-360 bounding-box annotations. Standard
    // nuScenes classes first, then the KITTI-360 categories kept as extensions.
    static const std::vector<ClassTableEntry> table = {
        {"car", "car", false},
        {"truck", "truck", false},
        {"trailer", "trailer", false},
        {"caravan", "trailer", false},
        {"bus", "bus", false},
        {"bicycle", "bicycle", false},
        {"motorcycle", "motorcycle", false},
        {"person", "pedestrian", false},
        {"rider", "pedestrian", false},
        {"pole", "pole", true},
        {"smallPole", "pole", true},
        {"small pole", "pole", true},
        {"lamp", "pole", true},
        {"trafficSign", "traffic_sign", true},
        {"traffic sign", "traffic_sign", true},
        {"box", "object", true},
        {"trashbin", "object", true},
        {"trash bin", "object", true},
        {"vendingMachine", "object", true},
        {"vending machine", "object", true},
        {"unknownObject", "object", true},
        {"unknown object", "object", true},
        {"stop", "object", true},
        {"trafficLight", "traffic_light", true},
        {"traffic light", "traffic_light", true},
        {"building", "building", true},
        {"garage", "building", true},
        {"gate", "building", true},
        {"unknownConstruction", "building", true},
        {"unknown construction", "building", true},
        {"train", "train", true},
        {"unknownVehicle", "vehicle_other", true},
        {"unknown vehicle", "vehicle_other", true},
    };
    return table;
}

bool is_eval_class(std::string_view name) {
    return std::find(kEvalClasses.begin(), kEvalClasses.end(), name) != kEvalClasses.end();
}

ClassMapping map_classes(std::string_view source_label) {
    for (const auto& e : class_table())
        if (e.source == source_label) return {std::string(e.category), e.extension};
    throw UnmappedLabelError(std::string(source_label));
}

std::vector<ClassMapping> target_categories() {
    std::vector<ClassMapping> out;
    for (const auto& e : class_table()) {
        const bool seen = std::any_of(out.begin(), out.end(),
                                      [&](const ClassMapping& m) { return m.category == e.category; });
        if (!seen) out.push_back({std::string(e.category), e.extension});
    }
    return out;
}

}  // namespace fbev
