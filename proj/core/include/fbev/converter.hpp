#pragma once

// KITTI-360 -> nuScenes conversion steps: scene partitioning, keyframe
// (sample) identification, and annotation conversion.

#include "fbev/dataset.hpp"

#include <map>
#include <string>
#include <vector>

namespace fbev {

struct ConverterConfig {
    double window_m = 200.0;   // scene window along the trajectory
    double d_max = 80.0;       // static-object attachment radius
    int min_pts = 1;           // LiDAR points required inside a static box
    double sync_tol = 0.010;   // seconds
    std::vector<std::string> sensors;  // required per keyframe
};

/// Contiguous inclusive range of pose indices.
struct SceneSpan {
    std::size_t first = 0;
    std::size_t last = 0;
    double start_m = 0.0;  // cumulative arc length at `first`
    double end_m = 0.0;    // cumulative arc length at `last`

    std::size_t size() const { return last - first + 1; }
    double length() const { return end_m - start_m; }
};

/// Cumulative 3D arc length along the pose translations.
std::vector<double> arc_lengths(const std::vector<TimedPose>& poses);

/// Splits poses into windows of window_m by cumulative arc length (frame i
/// goes to window floor(s_i / window_m)). A final window whose extent from
/// its window start is shorter than window_m / 2 merges into the previous
/// scene. Zero-length trajectories give one scene. Spans never cross
/// sequences. Throws DomainError when window_m <= 0.
std::vector<SceneSpan> partition_scenes(const std::vector<TimedPose>& poses, double window_m);

/// Indices into seq.poses of frames with a georegistered pose and every
/// sensor captured within sync_tol seconds of the pose timestamp.
std::vector<std::size_t> identify_keyframes(const SourceSequence& seq,
                                            const std::vector<std::string>& sensors, double sync_tol);

struct AssignedBox {
    std::size_t object_index = 0;  // into the input object list
    Box3D ego;
    Box3D global;
    int lidar_points = 0;
};

/// Static objects attached to one sample: center distance to the ego
/// position <= d_max and at least min_pts of the sample's LiDAR points
/// (ego frame) inside the box. Dynamic objects are skipped.
std::vector<AssignedBox> assign_static_objects(const std::vector<SourceObject>& objects,
                                               const TimedPose& sample,
                                               const std::vector<Vec3>& lidar_ego, double d_max,
                                               int min_pts);

/// Number of points (ego frame) inside a global box at a given ego pose.
int count_points_in_box(const Box3D& global_box, const Pose& ego_to_world,
                        const std::vector<Vec3>& lidar_ego);

struct ConvertedAnnotation {
    std::string instance_key;  // unique per (sequence, scene, object)
    std::string category;
    Box3D global;
    int num_lidar_pts = 0;
};

struct ConvertedSample {
    TimedPose pose;
    std::map<std::string, double> sensor_timestamps;  // capture time per configured sensor
    std::vector<ConvertedAnnotation> annotations;
};

struct ConvertedScene {
    std::string name;
    std::vector<ConvertedSample> samples;
};

struct ConvertedSequence {
    std::string id;
    std::string split;
    std::vector<std::string> sensors;
    std::vector<ConvertedScene> scenes;  // only scenes that contain samples

    std::size_t sample_count() const;
    std::size_t annotation_count() const;
};

/// Runs all three steps on one sequence. Unknown labels throw UnmappedLabelError.
ConvertedSequence convert_sequence(const SourceSequence& seq, const ConverterConfig& config);

/// Loads and converts every sequence under a source root, one worker per
/// sequence; results keep the sorted sequence order.
std::vector<ConvertedSequence> convert_source_tree(const std::filesystem::path& root,
                                                   const ConverterConfig& config, unsigned threads = 0);

}  // namespace fbev
