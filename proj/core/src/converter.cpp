#include "fbev/converter.hpp"

#include "fbev/class_map.hpp"
#include "fbev/errors.hpp"
#include "fbev/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace fbev {

std::vector<double> arc_lengths(const std::vector<TimedPose>& poses) {
    std::vector<double> s(poses.size(), 0.0);
    for (std::size_t i = 1; i < poses.size(); ++i)
        s[i] = s[i - 1] + (poses[i].ego_to_world.translation() -
                           poses[i - 1].ego_to_world.translation()).norm();
    return s;
}

std::vector<SceneSpan> partition_scenes(const std::vector<TimedPose>& poses, double window_m) {
    if (!(window_m > 0.0)) throw DomainError("partition_scenes: window_m must be > 0");
    std::vector<SceneSpan> spans;
    if (poses.empty()) return spans;
    const std::vector<double> s = arc_lengths(poses);

    std::vector<long long> window_of(poses.size());
    for (std::size_t i = 0; i < poses.size(); ++i)
        window_of[i] = static_cast<long long>(std::floor(s[i] / window_m));

    std::size_t begin = 0;
    for (std::size_t i = 1; i <= poses.size(); ++i) {
        if (i == poses.size() || window_of[i] != window_of[begin]) {
            spans.push_back({begin, i - 1, s[begin], s[i - 1]});
            begin = i;
        }
    }
    if (spans.size() >= 2) {
        const double tail_extent = s.back() - static_cast<double>(window_of.back()) * window_m;
        if (tail_extent < 0.5 * window_m) {
            const SceneSpan tail = spans.back();
            spans.pop_back();
            spans.back().last = tail.last;
            spans.back().end_m = tail.end_m;
        }
    }
    return spans;
}

std::vector<std::size_t> identify_keyframes(const SourceSequence& seq,
                                            const std::vector<std::string>& sensors, double sync_tol) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < seq.poses.size(); ++i) {
        const TimedPose& p = seq.poses[i];
        bool synced = true;
        for (const auto& name : sensors) {
            const auto s = seq.sensor_timestamps.find(name);
            if (s == seq.sensor_timestamps.end()) {
                synced = false;
                break;
            }
            const auto f = s->second.find(p.frame);
            if (f == s->second.end() || std::abs(f->second - p.timestamp) > sync_tol) {
                synced = false;
                break;
            }
        }
        if (synced) out.push_back(i);
    }
    return out;
}

int count_points_in_box(const Box3D& global_box, const Pose& ego_to_world,
                        const std::vector<Vec3>& lidar_ego) {
    int n = 0;
    for (const auto& p : lidar_ego)
        if (global_box.contains(ego_to_world.apply(p))) ++n;
    return n;
}

std::vector<AssignedBox> assign_static_objects(const std::vector<SourceObject>& objects,
                                               const TimedPose& sample,
                                               const std::vector<Vec3>& lidar_ego, double d_max,
                                               int min_pts) {
    std::vector<AssignedBox> out;
    const Pose world_to_ego = sample.ego_to_world.inverse();
    const Vec3& ego_pos = sample.ego_to_world.translation();
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const SourceObject& obj = objects[i];
        if (obj.dynamic) continue;
        if ((obj.box.center - ego_pos).norm() > d_max) continue;
        const int pts = count_points_in_box(obj.box, sample.ego_to_world, lidar_ego);
        if (pts < min_pts) continue;
        AssignedBox a;
        a.object_index = i;
        a.global = obj.box;
        a.ego = transform_box(obj.box, world_to_ego, BoxFrame::ego);
        a.lidar_points = pts;
        out.push_back(std::move(a));
    }
    return out;
}

std::size_t ConvertedSequence::sample_count() const {
    std::size_t n = 0;
    for (const auto& s : scenes) n += s.samples.size();
    return n;
}

std::size_t ConvertedSequence::annotation_count() const {
    std::size_t n = 0;
    for (const auto& s : scenes)
        for (const auto& smp : s.samples) n += smp.annotations.size();
    return n;
}

ConvertedSequence convert_sequence(const SourceSequence& seq, const ConverterConfig& config) {
    seq.validate();
    ConvertedSequence out;
    out.id = seq.id;
    out.split = seq.split;
    out.sensors = config.sensors;

    // Resolve every label up front so an unknown one fails the whole sequence.
    std::vector<ClassMapping> mapped;
    mapped.reserve(seq.objects.size());
    for (const auto& obj : seq.objects) mapped.push_back(map_classes(obj.box.label));

    std::multimap<long long, std::size_t> dynamic_by_frame;
    for (std::size_t i = 0; i < seq.objects.size(); ++i)
        if (seq.objects[i].dynamic) dynamic_by_frame.emplace(seq.objects[i].frame, i);

    const std::vector<SceneSpan> spans = partition_scenes(seq.poses, config.window_m);
    const std::vector<std::size_t> keyframes = identify_keyframes(seq, config.sensors, config.sync_tol);

    std::size_t k = 0;
    for (std::size_t scene_idx = 0; scene_idx < spans.size(); ++scene_idx) {
        const SceneSpan& span = spans[scene_idx];
        ConvertedScene scene;
        char name[32];
        std::snprintf(name, sizeof(name), "-%04zu", scene_idx);
        scene.name = seq.id + name;
        auto instance_key = [&](std::size_t obj) {
            return seq.id + "|" + std::to_string(scene_idx) + "|" + seq.objects[obj].box.label + "|" +
                   seq.objects[obj].instance_id;
        };
        for (; k < keyframes.size() && keyframes[k] <= span.last; ++k) {
            const TimedPose& pose = seq.poses[keyframes[k]];
            ConvertedSample sample;
            sample.pose = pose;
            for (const auto& name : config.sensors)
                sample.sensor_timestamps[name] = seq.sensor_timestamps.at(name).at(pose.frame);
            const std::vector<Vec3> lidar = seq.lidar.points(pose.frame);

            for (const auto& a : assign_static_objects(seq.objects, pose, lidar, config.d_max, config.min_pts))
                sample.annotations.push_back({instance_key(a.object_index), mapped[a.object_index].category,
                                              a.global, a.lidar_points});

            const auto [lo, hi] = dynamic_by_frame.equal_range(pose.frame);
            for (auto it = lo; it != hi; ++it) {
                const SourceObject& obj = seq.objects[it->second];
                sample.annotations.push_back({instance_key(it->second), mapped[it->second].category, obj.box,
                                              count_points_in_box(obj.box, pose.ego_to_world, lidar)});
            }
            scene.samples.push_back(std::move(sample));
        }
        if (!scene.samples.empty()) out.scenes.push_back(std::move(scene));
    }
    return out;
}

std::vector<ConvertedSequence> convert_source_tree(const std::filesystem::path& root,
                                                   const ConverterConfig& config, unsigned threads) {
    const SourceTree tree = scan_source_tree(root);
    std::vector<ConvertedSequence> out(tree.sequences.size());
    parallel_for_chunks(tree.sequences.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            SourceSequence seq = load_sequence(tree.sequences[i]);
            const auto split = tree.splits.find(seq.id);
            if (split != tree.splits.end()) seq.split = split->second;
            out[i] = convert_sequence(seq, config);
        }
    });
    return out;
}

}  // namespace fbev
