#pragma once

// Source-side (KITTI-360 style) sequence data.
//
// On-disk layout of one sequence directory:
//   poses.txt                   "<frame> r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2"
//                               ego(IMU)-to-world, one line per georegistered frame
//   timestamps.txt              "<frame> <seconds>" for every frame in poses.txt
//   sensors/<name>/timestamps.txt  "<frame> <seconds>" per captured sensor frame
//   bboxes.xml                  3D boxes (optional; see parse_annotation_xml)
//   lidar/<frame:010>.bin       optional float32 x, y, z, intensity records, ego frame

#include "fbev/geometry.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fbev {

enum class BoxFrame { ego, global };

/// Center-size-quaternion box. size = (w, l, h): l along the box x axis,
/// w along y, h along z.
struct Box3D {
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Ones();
    Quaternion orientation;
    std::string label;
    std::optional<Vec2> velocity;
    double visibility = 1.0;
    BoxFrame frame = BoxFrame::global;

    /// Throws ValidationError unless every size component is positive.
    void validate() const;
    /// Eight corners, ordered by the sign pattern of (x, y, z) in the box frame.
    std::array<Vec3, 8> corners() const;
    bool contains(const Vec3& p) const;
};

/// Box re-expressed through a rigid transform (center and orientation move,
/// size is untouched). `target` tags the resulting frame.
Box3D transform_box(const Box3D& box, const Pose& transform, BoxFrame target);

struct TimedPose {
    long long frame = 0;
    double timestamp = 0.0;  // seconds
    Pose ego_to_world;
};

struct SourceObject {
    Box3D box;                // global frame
    std::string instance_id;  // stable across frames for dynamic objects
    long long frame = -1;     // -1 for static objects
    bool dynamic = false;
};

/// Frame -> LiDAR point file (or in-memory points for synthetic data).
class LidarIndex {
public:
    void add_file(long long frame, std::filesystem::path path);
    void add_points(long long frame, std::vector<Vec3> points);
    bool has(long long frame) const;
    /// Points in the ego frame; empty when the frame has no LiDAR data.
    std::vector<Vec3> points(long long frame) const;

private:
    std::map<long long, std::filesystem::path> files_;
    std::map<long long, std::vector<Vec3>> memory_;
};

struct SourceSequence {
    std::string id;
    std::string split;  // "train", "val" or empty
    std::vector<TimedPose> poses;  // strictly increasing timestamps
    std::map<std::string, std::map<long long, double>> sensor_timestamps;
    std::vector<SourceObject> objects;
    LidarIndex lidar;

    /// Throws ValidationError when pose timestamps are not strictly increasing.
    void validate() const;
};

/// Parses KITTI-360 style bounding boxes:
///   <opencv_storage><objectN>
///     <label>car</label> <instanceId>7</instanceId>
///     <timestamp>-1</timestamp> <dynamic>0</dynamic>
///     <transform><rows>4</rows><cols>4</cols><data>16 values</data></transform>
///     <visibility>0.8</visibility>   (optional, default 1)
///   </objectN></opencv_storage>
/// The transform's rotation columns are scaled by the box extents (unit cube
/// vertices), so column norms give (l, w, h).
std::vector<SourceObject> parse_annotation_xml(const std::string& text, const std::string& source_name);

std::vector<TimedPose> parse_poses(const std::string& poses_text, const std::string& timestamps_text,
                                   const std::string& poses_name, const std::string& timestamps_name);

std::map<long long, double> parse_frame_timestamps(const std::string& text, const std::string& source_name);

/// Reads "<frame:010>.bin" float32 xyzi records.
std::vector<Vec3> read_lidar_bin(const std::filesystem::path& path);
void write_lidar_bin(const std::filesystem::path& path, const std::vector<Vec3>& points);

/// Loads one sequence directory. Errors name the offending file.
SourceSequence load_sequence(const std::filesystem::path& dir);

/// Sequence directories under a source root, sorted by name. A root without
/// subdirectories yields an empty list. Optional "splits.txt" lines
/// "<sequence> train|val" assign splits.
struct SourceTree {
    std::vector<std::filesystem::path> sequences;
    std::map<std::string, std::string> splits;
};
SourceTree scan_source_tree(const std::filesystem::path& root);

}  // namespace fbev
