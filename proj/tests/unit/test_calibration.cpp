#include "fbev/calibration.hpp"
#include "fbev/errors.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

using namespace fbev;

namespace {

const char* kMinimal = R"(camera front
  fx 500
  fy 500
  cx 320
  cy 240
  width 640
  height 480
  cam_to_ego_quat 0.5 -0.5 0.5 -0.5 1.5 0 1.4
end
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
    s.replace(s.find(from), from.size(), to);
    return s;
}

}  // namespace

TEST(Calibration, ParsesFixtureRig) {
    const CalibrationSet set = testing_support::mini_rig();
    ASSERT_EQ(set.size(), 4u);
    EXPECT_TRUE(set.at("image_00").camera.is_pinhole());
    const MeiCamera& left = set.at("image_02").camera;
    EXPECT_DOUBLE_EQ(left.xi, 2.2134047507854890);
    EXPECT_EQ(left.width, 1400);
    const MeiCamera& right = set.at("image_03").camera;
    EXPECT_EQ(right.name, "image_03");
    EXPECT_DOUBLE_EQ(right.xi, 2.5535139132482758);
    EXPECT_DOUBLE_EQ(right.fx, 1485.4388981875156);
    EXPECT_DOUBLE_EQ(right.cy, 698.14541887723055);
    // image_00 looks along ego +x
    const Pose& p = set.at("image_00").cam_to_ego;
    EXPECT_LT((p.rotation().rotate(Vec3::UnitZ()) - Vec3::UnitX()).norm(), 1e-12);
    EXPECT_THROW(set.at("image_09"), ValidationError);
}

TEST(Calibration, FormatRoundTripsExactly) {
    const CalibrationSet set = testing_support::mini_rig();
    const std::string text = format_calibration(set);
    const CalibrationSet again = parse_calibration(text);
    ASSERT_EQ(again.size(), set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto& a = set.cameras()[i];
        const auto& b = again.cameras()[i];
        EXPECT_EQ(a.camera.name, b.camera.name);
        EXPECT_EQ(a.camera.xi, b.camera.xi);
        EXPECT_EQ(a.camera.k2, b.camera.k2);
        EXPECT_EQ(a.camera.fx, b.camera.fx);
        EXPECT_EQ(a.camera.cy, b.camera.cy);
        EXPECT_EQ(a.camera.width, b.camera.width);
        EXPECT_EQ(a.cam_to_ego.translation(), b.cam_to_ego.translation());
        EXPECT_TRUE(a.cam_to_ego.to_matrix().isApprox(b.cam_to_ego.to_matrix(), 1e-15));
    }
    EXPECT_EQ(format_calibration(again), text);
}

TEST(Calibration, MinimalBlockDefaults) {
    const CalibrationSet set = parse_calibration(kMinimal);
    const MeiCamera& c = set.at("front").camera;
    EXPECT_EQ(c.xi, 0.0);
    EXPECT_EQ(c.crop_offset, Vec2::Zero());
    EXPECT_LT((set.at("front").cam_to_ego.apply(Vec3::UnitZ()) - Vec3(2.5, 0, 1.4)).norm(), 1e-12);
}

TEST(Calibration, ErrorsCarryLineNumbers) {
    try {
        parse_calibration(replace(kMinimal, "  cy 240", "  cy 240\n  bogus 1"), {}, "rig.calib");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("rig.calib:6"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
    }
}

TEST(Calibration, RejectsMalformedInput) {
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  fx 500\n", "")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  fx 500", "  fx 500\n  fx 501")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  fx 500", "  fx abc")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  fx 500", "  fx 500 1")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "0.5 -0.5 0.5 -0.5", "1 1 0 0")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "end\n", "")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  cam_to_ego_quat 0.5 -0.5 0.5 -0.5 1.5 0 1.4\n", "")),
                 ValidationError);
    EXPECT_THROW(parse_calibration(std::string(kMinimal) + kMinimal), ValidationError);
    EXPECT_THROW(parse_calibration("fx 1\n"), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  fx 500", "  fx -5")), ValidationError);
    EXPECT_THROW(parse_calibration(replace(kMinimal, "  width 640", "  width 0")), ValidationError);
}

TEST(Calibration, MissingFileIsIoError) {
    EXPECT_THROW(load_calibration(testing_support::fixture_dir() / "does_not_exist.calib"), IoError);
}

TEST(Calibration, Kitti360CamToPose) {
    const auto poses = parse_kitti360_cam_to_pose(
        "image_00: 0 0 1 1.5 -1 0 0 0.3 0 -1 0 1.4\nimage_01: 1 0 0 0 0 1 0 0 0 0 1 0\n", "calib");
    ASSERT_EQ(poses.size(), 2u);
    EXPECT_LT((poses.at("image_00").apply(Vec3::Zero()) - Vec3(1.5, 0.3, 1.4)).norm(), 1e-15);
    EXPECT_THROW(parse_kitti360_cam_to_pose("image_00 0 0 1\n", "calib"), ValidationError);
}

TEST(Calibration, Kitti360YamlRejectsOtherModels) {
    EXPECT_THROW(parse_kitti360_mei_yaml("model_type: PINHOLE\nxi: 1\n", "y"), ValidationError);
    EXPECT_THROW(parse_kitti360_mei_yaml("model_type: MEI\nxi: 1\n", "y"), ValidationError);
}
