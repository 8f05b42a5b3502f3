#include "fbev/converter.hpp"
#include "fbev/errors.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace fbev;

namespace {

std::vector<TimedPose> straight(double length_m, double step_m) {
    std::vector<TimedPose> out;
    const int n = static_cast<int>(length_m / step_m + 0.5);
    for (int i = 0; i <= n; ++i)
        out.push_back({i, 0.1 * i, Pose(Quaternion(), Vec3(i * step_m, 0.0, 0.0))});
    return out;
}

void expect_partition(const std::vector<SceneSpan>& spans, std::size_t n) {
    ASSERT_FALSE(spans.empty());
    EXPECT_EQ(spans.front().first, 0u);
    EXPECT_EQ(spans.back().last, n - 1);
    for (std::size_t i = 1; i < spans.size(); ++i) EXPECT_EQ(spans[i].first, spans[i - 1].last + 1);
    for (const auto& s : spans) EXPECT_LE(s.first, s.last);
}

Box3D box_at(double x, double y) {
    Box3D b;
    b.center = Vec3(x, y, 1.0);
    b.size = Vec3(2.0, 4.0, 2.0);
    b.label = "car";
    return b;
}

std::vector<Vec3> points_around(const Vec3& c, int n) {
    std::vector<Vec3> out;
    for (int i = 0; i < n; ++i) out.push_back(c + Vec3(0.1 * (i % 5) - 0.2, 0.05 * i - 0.2, 0.1));
    return out;
}

SourceSequence synthetic_sequence(int frames) {
    SourceSequence seq;
    seq.id = "seq";
    for (int i = 0; i < frames; ++i) {
        seq.poses.push_back({i, 10.0 + 0.1 * i, Pose(Quaternion(), Vec3(2.0 * i, 0.0, 0.0))});
        for (const char* s : {"cam_a", "cam_b", "lidar"}) seq.sensor_timestamps[s][i] = 10.0 + 0.1 * i;
    }
    return seq;
}

}  // namespace

TEST(Partition, FourHundredFiftyMetres) {
    const auto poses = straight(450.0, 10.0);
    const auto spans = partition_scenes(poses, 200.0);
    ASSERT_EQ(spans.size(), 2u);
    expect_partition(spans, poses.size());
    EXPECT_EQ(spans[0].last, 19u);  // 0..190 m
    EXPECT_EQ(spans[1].first, 20u);
    EXPECT_DOUBLE_EQ(spans[1].start_m, 200.0);
    EXPECT_DOUBLE_EQ(spans[1].end_m, 450.0);
}

TEST(Partition, ShortTrajectoryIsOneScene) {
    const auto spans = partition_scenes(straight(150.0, 10.0), 200.0);
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_EQ(spans[0].size(), 16u);
}

TEST(Partition, LongTailStandsAlone) {
    const auto spans = partition_scenes(straight(520.0, 10.0), 200.0);
    ASSERT_EQ(spans.size(), 3u);
    EXPECT_DOUBLE_EQ(spans[2].start_m, 400.0);
}

TEST(Partition, ZeroLengthIsOneScene) {
    std::vector<TimedPose> poses;
    for (int i = 0; i < 5; ++i) poses.push_back({i, 1.0 * i, Pose()});
    const auto spans = partition_scenes(poses, 200.0);
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_EQ(spans[0].size(), 5u);
    EXPECT_THROW(partition_scenes(poses, 0.0), DomainError);
}

TEST(Partition, RandomWalksArePartitions) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> step(0.0, 15.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TimedPose> poses;
        Vec3 p = Vec3::Zero();
        const int n = 2 + trial * 7;
        for (int i = 0; i < n; ++i) {
            poses.push_back({i, 1.0 * i, Pose(Quaternion(), p)});
            p += Vec3(step(rng), step(rng) - 7.5, 0.1 * (step(rng) - 7.5));
        }
        const auto spans = partition_scenes(poses, 200.0);
        expect_partition(spans, poses.size());
        const auto s = arc_lengths(poses);
        for (std::size_t i = 0; i + 1 < spans.size(); ++i) EXPECT_LE(spans[i].length(), 200.0);
        if (spans.size() > 1) EXPECT_LT(spans.back().length(), 300.0);
        EXPECT_DOUBLE_EQ(s.back(), spans.back().end_m);
    }
}

TEST(ArcLength, ThreeDimensional) {
    std::vector<TimedPose> poses{{0, 0.0, Pose()}, {1, 1.0, Pose(Quaternion(), Vec3(3, 4, 12))}};
    EXPECT_EQ(arc_lengths(poses), (std::vector<double>{0.0, 13.0}));
}

TEST(Keyframes, TenFramesTwoMissingACamera) {
    SourceSequence seq = synthetic_sequence(10);
    seq.sensor_timestamps["cam_b"].erase(3);
    seq.sensor_timestamps["cam_a"].erase(7);
    const auto kf = identify_keyframes(seq, {"cam_a", "cam_b", "lidar"}, 0.010);
    EXPECT_EQ(kf.size(), 8u);
    EXPECT_EQ(std::count(kf.begin(), kf.end(), 3u), 0);
    EXPECT_EQ(std::count(kf.begin(), kf.end(), 7u), 0);
}

TEST(Keyframes, SyncTolerance) {
    SourceSequence seq = synthetic_sequence(4);
    seq.sensor_timestamps["cam_a"][1] += 0.009;
    seq.sensor_timestamps["cam_a"][2] += 0.011;
    const auto kf = identify_keyframes(seq, {"cam_a"}, 0.010);
    EXPECT_EQ(kf, (std::vector<std::size_t>{0, 1, 3}));
    // a frame with sensor data but no pose never becomes a sample
    seq.sensor_timestamps["cam_a"][9] = 99.0;
    EXPECT_EQ(identify_keyframes(seq, {"cam_a"}, 0.010).size(), 3u);
    EXPECT_TRUE(identify_keyframes(seq, {"cam_x"}, 0.010).empty());
}

TEST(StaticObjects, DistanceAndVisibility) {
    const TimedPose sample{0, 0.0, Pose()};
    std::vector<SourceObject> objs;
    std::vector<Vec3> lidar;
    for (double d : {5.0, 50.0, 100.0}) {
        objs.push_back({box_at(d, 0.0), "id", -1, false});
        const auto pts = points_around(Vec3(d, 0.0, 1.0), 10);
        lidar.insert(lidar.end(), pts.begin(), pts.end());
    }
    const auto attached = assign_static_objects(objs, sample, lidar, 80.0, 1);
    ASSERT_EQ(attached.size(), 2u);
    EXPECT_EQ(attached[0].object_index, 0u);
    EXPECT_EQ(attached[1].object_index, 1u);
    EXPECT_EQ(attached[0].lidar_points, 10);
    EXPECT_EQ(assign_static_objects(objs, sample, lidar, 80.0, 11).size(), 0u);
}

TEST(StaticObjects, FarAndEmptyBoxesRejected) {
    const TimedPose sample{0, 0.0, Pose()};
    std::vector<SourceObject> objs{{box_at(300.0, 0.0), "far", -1, false},
                                   {box_at(10.0, 0.0), "empty", -1, false},
                                   {box_at(20.0, 0.0), "moving", 0, true}};
    auto lidar = points_around(Vec3(300.0, 0.0, 1.0), 5);
    const auto more = points_around(Vec3(20.0, 0.0, 1.0), 5);
    lidar.insert(lidar.end(), more.begin(), more.end());
    EXPECT_TRUE(assign_static_objects(objs, sample, lidar, 80.0, 1).empty());
}

TEST(StaticObjects, EgoFrameIsRigidTransform) {
    const Pose ego(Quaternion::from_yaw(0.8), Vec3(1000.0, -50.0, 3.0));
    const TimedPose sample{0, 0.0, ego};
    Box3D global = box_at(0.0, 0.0);
    global.center = ego.apply(Vec3(12.0, 3.0, 1.0));
    global.orientation = Quaternion::from_yaw(1.1);
    const auto lidar = points_around(Vec3(12.0, 3.0, 1.0), 4);
    const auto attached = assign_static_objects({{global, "a", -1, false}}, sample, lidar, 80.0, 1);
    ASSERT_EQ(attached.size(), 1u);
    const Box3D& e = attached[0].ego;
    EXPECT_EQ(e.frame, BoxFrame::ego);
    EXPECT_LT((e.center - Vec3(12.0, 3.0, 1.0)).norm(), 1e-9);
    EXPECT_NEAR(e.orientation.yaw(), 0.3, 1e-12);
    const auto gc = global.corners();
    const auto ec = e.corners();
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j)
            EXPECT_NEAR((gc[i] - gc[j]).norm(), (ec[i] - ec[j]).norm(), 1e-9);
}

TEST(Convert, FixtureCounts) {
    const SourceSequence seq = load_sequence(testing_support::mini_kitti360_dir() / "source" /
                                             "2013_05_28_drive_0000_sync");
    ConverterConfig cfg;
    cfg.sensors = {"image_00", "image_01", "image_02", "image_03", "velodyne"};
    const ConvertedSequence out = convert_sequence(seq, cfg);
    ASSERT_EQ(out.scenes.size(), 2u);
    EXPECT_EQ(out.scenes[0].name, "2013_05_28_drive_0000_sync-0000");
    EXPECT_EQ(out.scenes[0].samples.size(), 2u);
    EXPECT_EQ(out.scenes[1].samples.size(), 3u);
    EXPECT_EQ(out.sample_count(), 5u);
    EXPECT_EQ(out.annotation_count(), 7u);
    // the same static car seen in two samples keeps one instance key
    const auto& s0 = out.scenes[0].samples;
    ASSERT_FALSE(s0[0].annotations.empty());
    EXPECT_EQ(s0[0].annotations[0].instance_key, s0[1].annotations[0].instance_key);
    EXPECT_EQ(s0[0].annotations[0].category, "car");
}

TEST(Convert, UnmappedLabelIsExplicit) {
    SourceSequence seq = synthetic_sequence(3);
    Box3D b = box_at(1.0, 0.0);
    b.label = "unicorn";
    seq.objects.push_back({b, "1", -1, false});
    ConverterConfig cfg;
    cfg.sensors = {"cam_a"};
    EXPECT_THROW(convert_sequence(seq, cfg), UnmappedLabelError);
}

TEST(Convert, TreeMatchesSequence) {
    ConverterConfig cfg;
    cfg.sensors = {"image_00", "image_01", "image_02", "image_03", "velodyne"};
    const auto a = convert_source_tree(testing_support::mini_kitti360_dir() / "source", cfg, 1);
    const auto b = convert_source_tree(testing_support::mini_kitti360_dir() / "source", cfg, 4);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].split, "train");
    EXPECT_EQ(a[0].annotation_count(), b[0].annotation_count());
}
