#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace fbev {

struct ClassMapping {
    std::string category;    // target category name
    bool extension = false;  // not one of the standard nuScenes detection classes
};

/// The ten evaluation classes, in report order.
inline constexpr std::array<std::string_view, 10> kEvalClasses = {
    "car", "truck", "trailer", "bus", "bicycle",
    "motorcycle", "pedestrian", "pole", "object", "traffic_sign"};

bool is_eval_class(std::string_view name);

/// Maps a KITTI-360 label (camelCase or spaced form) to its target category.
/// Throws UnmappedLabelError for labels not in the table.
ClassMapping map_classes(std::string_view source_label);

struct ClassTableEntry {
    std::string_view source;
    std::string_view category;
    bool extension;
};

/// The full shipped mapping table.
const std::vector<ClassTableEntry>& class_table();

/// Distinct target categories in table order, with their extension flag.
std::vector<ClassMapping> target_categories();

}  // namespace fbev
