#pragma once

#include "fbev/calibration.hpp"
#include "fbev/camera.hpp"
#include "fbev/recordset.hpp"

#include <filesystem>
#include <string>

namespace testing_support {

std::filesystem::path fixture_dir();
std::filesystem::path mini_kitti360_dir();

std::string read_file(const std::filesystem::path& path);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "fbev");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// The KITTI-360 left fisheye (image_02) intrinsics.
fbev::MeiCamera kitti360_fisheye();
/// The KITTI-360 perspective camera (image_00), rectified intrinsics.
fbev::MeiCamera kitti360_pinhole();
/// Calibration of the mini fixture rig.
fbev::CalibrationSet mini_rig();

/// The mini fixture converted with its own config.json.
fbev::RecordSet convert_mini_fixture(unsigned threads = 1);

/// Checked-in converter output for the mini fixture.
std::filesystem::path golden_dir();

}  // namespace testing_support
