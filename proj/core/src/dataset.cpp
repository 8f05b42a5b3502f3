#include "fbev/dataset.hpp"

#include "fbev/calibration.hpp"
#include "fbev/errors.hpp"
#include "fbev/format.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace fbev {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

[[noreturn]] void fail_at(const std::string& source, int line, const std::string& msg) {
    throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
}

double number_at(const std::string& tok, const std::string& source, int line) {
    double v = 0.0;
    if (!parse_double(tok, v) || !std::isfinite(v))
        fail_at(source, line, "expected a number, got '" + tok + "'");
    return v;
}

long long frame_at(const std::string& tok, const std::string& source, int line) {
    long long v = 0;
    if (!parse_int(tok, v) || v < 0) fail_at(source, line, "expected a frame index, got '" + tok + "'");
    return v;
}

}  // namespace

void Box3D::validate() const {
    if (!(size.x() > 0.0 && size.y() > 0.0 && size.z() > 0.0))
        throw ValidationError("box '" + label + "': size components must be positive");
}

std::array<Vec3, 8> Box3D::corners() const {
    const double hl = 0.5 * size.y(), hw = 0.5 * size.x(), hh = 0.5 * size.z();
    std::array<Vec3, 8> out;
    int k = 0;
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0})
            for (double sz : {-1.0, 1.0})
                out[static_cast<std::size_t>(k++)] =
                    center + orientation.rotate(Vec3(sx * hl, sy * hw, sz * hh));
    return out;
}

bool Box3D::contains(const Vec3& p) const {
    const Vec3 local = orientation.conjugate().rotate(p - center);
    return std::abs(local.x()) <= 0.5 * size.y() && std::abs(local.y()) <= 0.5 * size.x() &&
           std::abs(local.z()) <= 0.5 * size.z();
}

Box3D transform_box(const Box3D& box, const Pose& transform, BoxFrame target) {
    Box3D out = box;
    out.center = transform.apply(box.center);
    out.orientation = (transform.rotation() * box.orientation).canonicalize();
    if (box.velocity) {
        const Vec3 v = transform.rotation().rotate(Vec3(box.velocity->x(), box.velocity->y(), 0.0));
        out.velocity = Vec2(v.x(), v.y());
    }
    out.frame = target;
    return out;
}

void LidarIndex::add_file(long long frame, std::filesystem::path path) {
    files_[frame] = std::move(path);
}

void LidarIndex::add_points(long long frame, std::vector<Vec3> points) {
    memory_[frame] = std::move(points);
}

bool LidarIndex::has(long long frame) const {
    return files_.count(frame) != 0 || memory_.count(frame) != 0;
}

std::vector<Vec3> LidarIndex::points(long long frame) const {
    if (const auto it = memory_.find(frame); it != memory_.end()) return it->second;
    if (const auto it = files_.find(frame); it != files_.end()) return read_lidar_bin(it->second);
    return {};
}

void SourceSequence::validate() const {
    for (std::size_t i = 1; i < poses.size(); ++i)
        if (!(poses[i].timestamp > poses[i - 1].timestamp))
            throw ValidationError("sequence '" + id + "': pose timestamps not strictly increasing at frame " +
                                  std::to_string(poses[i].frame));
}

std::vector<SourceObject> parse_annotation_xml(const std::string& text, const std::string& source_name) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream is(text);
        pt::read_xml(is, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw ValidationError(source_name + ": malformed XML: " + e.message());
    }
    const auto root = tree.get_child_optional("opencv_storage");
    if (!root) throw ValidationError(source_name + ": missing <opencv_storage> root");

    std::vector<SourceObject> out;
    for (const auto& [name, node] : *root) {
        if (name.rfind("object", 0) != 0) continue;
        const std::string where = source_name + ": <" + name + ">";
        try {
            SourceObject obj;
            obj.box.label = node.get<std::string>("label");
            obj.instance_id = node.get<std::string>("instanceId");
            obj.frame = node.get<long long>("timestamp", -1);
            obj.dynamic = node.get<int>("dynamic", 0) != 0;
            obj.box.visibility = node.get<double>("visibility", 1.0);
            if (obj.dynamic && obj.frame < 0)
                throw ValidationError(where + ": dynamic object without a frame timestamp");

            const auto data = split_ws(node.get<std::string>("transform.data"));
            if (data.size() != 16) throw ValidationError(where + ": transform needs 16 values");
            Mat4 m;
            for (int i = 0; i < 16; ++i) {
                double v = 0.0;
                if (!parse_double(data[static_cast<std::size_t>(i)], v))
                    throw ValidationError(where + ": bad transform value");
                m(i / 4, i % 4) = v;
            }
            const Mat3 scaled = m.topLeftCorner<3, 3>();
            const Vec3 extents(scaled.col(0).norm(), scaled.col(1).norm(), scaled.col(2).norm());
            if (!(extents.minCoeff() > 0.0)) throw ValidationError(where + ": degenerate box extent");
            Mat3 rot;
            for (int c = 0; c < 3; ++c) rot.col(c) = scaled.col(c) / extents[c];
            if ((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
                rot.determinant() < 0.0)
                throw ValidationError(where + ": transform is not a scaled rotation");
            obj.box.center = m.topRightCorner<3, 1>();
            obj.box.size = Vec3(extents[1], extents[0], extents[2]);
            obj.box.orientation = Quaternion::from_matrix(rot);
            obj.box.frame = BoxFrame::global;
            obj.box.validate();
            out.push_back(std::move(obj));
        } catch (const pt::ptree_error& e) {
            throw ValidationError(where + ": " + e.what());
        }
    }
    return out;
}

std::map<long long, double> parse_frame_timestamps(const std::string& text, const std::string& source_name) {
    std::map<long long, double> out;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto tok = split_ws(raw);
        if (tok.empty()) continue;
        if (tok.size() != 2) fail_at(source_name, line, "expected '<frame> <seconds>'");
        const long long f = frame_at(tok[0], source_name, line);
        if (!out.emplace(f, number_at(tok[1], source_name, line)).second)
            fail_at(source_name, line, "duplicate frame " + tok[0]);
    }
    return out;
}

std::vector<TimedPose> parse_poses(const std::string& poses_text, const std::string& timestamps_text,
                                   const std::string& poses_name, const std::string& timestamps_name) {
    const auto stamps = parse_frame_timestamps(timestamps_text, timestamps_name);
    std::vector<TimedPose> out;
    std::istringstream is(poses_text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto tok = split_ws(raw);
        if (tok.empty()) continue;
        if (tok.size() != 13) fail_at(poses_name, line, "expected a frame index and 12 matrix values");
        TimedPose p;
        p.frame = frame_at(tok[0], poses_name, line);
        if (!out.empty() && p.frame <= out.back().frame)
            fail_at(poses_name, line, "frame indices must increase");
        std::array<double, 12> m{};
        for (std::size_t i = 0; i < 12; ++i) m[i] = number_at(tok[i + 1], poses_name, line);
        Mat3 rot;
        rot << m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10];
        if ((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6)
            fail_at(poses_name, line, "rotation block is not orthonormal");
        p.ego_to_world = Pose::from_matrix_3x4(m);
        const auto it = stamps.find(p.frame);
        if (it == stamps.end())
            throw ValidationError(timestamps_name + ": no timestamp for frame " + tok[0]);
        p.timestamp = it->second;
        if (!out.empty() && !(p.timestamp > out.back().timestamp))
            fail_at(poses_name, line, "pose timestamps must be strictly increasing");
        out.push_back(p);
    }
    return out;
}

std::vector<Vec3> read_lidar_bin(const std::filesystem::path& path) {
    const std::string bytes = read_text_file(path);
    if (bytes.size() % 16 != 0) throw ValidationError(path.string() + ": size is not a multiple of 16 bytes");
    std::vector<Vec3> out;
    out.reserve(bytes.size() / 16);
    for (std::size_t off = 0; off < bytes.size(); off += 16) {
        float xyz[3];
        for (int k = 0; k < 3; ++k) {
            std::uint32_t u = 0;
            for (int b = 0; b < 4; ++b)
                u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[off + 4 * k + b])) << (8 * b);
            xyz[k] = std::bit_cast<float>(u);
        }
        out.emplace_back(xyz[0], xyz[1], xyz[2]);
    }
    return out;
}

void write_lidar_bin(const std::filesystem::path& path, const std::vector<Vec3>& points) {
    std::string bytes;
    bytes.reserve(points.size() * 16);
    for (const auto& p : points) {
        for (float f : {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), 0.0f}) {
            const auto u = std::bit_cast<std::uint32_t>(f);
            for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((u >> (8 * b)) & 0xffu));
        }
    }
    write_text_file(path, bytes);
}

SourceSequence load_sequence(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    SourceSequence seq;
    seq.id = dir.filename().string();
    const fs::path poses = dir / "poses.txt";
    const fs::path stamps = dir / "timestamps.txt";
    seq.poses = parse_poses(read_text_file(poses), read_text_file(stamps), poses.string(), stamps.string());

    const fs::path sensors = dir / "sensors";
    if (fs::is_directory(sensors)) {
        std::vector<fs::path> names;
        for (const auto& e : fs::directory_iterator(sensors))
            if (e.is_directory()) names.push_back(e.path());
        std::sort(names.begin(), names.end());
        for (const auto& s : names) {
            const fs::path ts = s / "timestamps.txt";
            seq.sensor_timestamps[s.filename().string()] = parse_frame_timestamps(read_text_file(ts), ts.string());
        }
    }

    const fs::path boxes = dir / "bboxes.xml";
    if (fs::exists(boxes)) seq.objects = parse_annotation_xml(read_text_file(boxes), boxes.string());

    const fs::path lidar = dir / "lidar";
    if (fs::is_directory(lidar)) {
        for (const auto& e : fs::directory_iterator(lidar)) {
            if (e.path().extension() != ".bin") continue;
            long long f = 0;
            if (!parse_int(e.path().stem().string(), f) || f < 0)
                throw ValidationError(e.path().string() + ": LiDAR file name is not a frame index");
            seq.lidar.add_file(f, e.path());
        }
    }
    seq.validate();
    return seq;
}

SourceTree scan_source_tree(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root)) throw IoError(root.string(), "source root is not a directory");
    SourceTree tree;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory()) tree.sequences.push_back(e.path());
    std::sort(tree.sequences.begin(), tree.sequences.end());

    const fs::path splits = root / "splits.txt";
    if (fs::exists(splits)) {
        std::istringstream is(read_text_file(splits));
        std::string raw;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            const auto tok = split_ws(raw);
            if (tok.empty()) continue;
            if (tok.size() != 2 || (tok[1] != "train" && tok[1] != "val"))
                fail_at(splits.string(), line, "expected '<sequence> train|val'");
            tree.splits[tok[0]] = tok[1];
        }
    }
    return tree;
}

}  // namespace fbev
