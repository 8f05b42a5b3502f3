#pragma once

// Camera rig calibration: MEI intrinsics plus a camera-to-ego Pose per camera.
//
// Text format, one block per camera ('#' starts a comment):
//
//   camera <name>
//     xi <value>                  # optional, default 0
//     k1 <value>                  # optional, default 0
//     k2 <value>                  # optional, default 0
//     fx <value>
//     fy <value>
//     cx <value>
//     cy <value>
//     width <pixels>
//     height <pixels>
//     crop <u0> <v0>              # optional, default 0 0
//     kitti360_yaml <path>        # optional: take xi/k1/k2/fx/fy/cx/cy/size
//                                 # from a KITTI-360 MEI yaml (relative to
//                                 # the calibration file)
//     cam_to_ego_quat <qw> <qx> <qy> <qz> <tx> <ty> <tz>
//     cam_to_ego_matrix <r00 r01 r02 t0 r10 r11 r12 t1 r20 r21 r22 t2>
//   end
//
// Exactly one of the cam_to_ego_* keys is required. Unknown keys are errors.

#include "fbev/camera.hpp"
#include "fbev/geometry.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fbev {

struct RigCamera {
    MeiCamera camera;
    Pose cam_to_ego;
};

class CalibrationSet {
public:
    CalibrationSet() = default;
    explicit CalibrationSet(std::vector<RigCamera> cameras);

    const std::vector<RigCamera>& cameras() const { return cameras_; }
    bool contains(const std::string& name) const;
    /// Throws ValidationError when the camera is unknown.
    const RigCamera& at(const std::string& name) const;
    std::size_t size() const { return cameras_.size(); }
    bool empty() const { return cameras_.empty(); }

private:
    std::vector<RigCamera> cameras_;
};

/// Parses the text format above. `base_dir` resolves kitti360_yaml paths.
CalibrationSet parse_calibration(const std::string& text,
                                 const std::filesystem::path& base_dir = {},
                                 const std::string& source_name = "<calibration>");
/// Throws IoError naming the file when it cannot be read.
CalibrationSet load_calibration(const std::filesystem::path& path);
/// Serializes with 17 significant digits; parse_calibration round-trips it exactly.
std::string format_calibration(const CalibrationSet& set);

/// Intrinsics from a KITTI-360 MEI yaml (image_02.yaml / image_03.yaml).
/// Tangential terms p1/p2 are read and discarded.
MeiCamera parse_kitti360_mei_yaml(const std::string& text, const std::string& source_name);

/// KITTI-360 calib_cam_to_pose.txt: "image_0N: r00 r01 r02 t0 ... t2" lines.
std::map<std::string, Pose> parse_kitti360_cam_to_pose(const std::string& text,
                                                       const std::string& source_name);

/// Reads a whole file; throws IoError naming it on failure.
std::string read_text_file(const std::filesystem::path& path);
/// Writes a whole file, creating parent directories; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fbev
