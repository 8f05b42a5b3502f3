#include "fbev/calibration.hpp"

#include "fbev/errors.hpp"
#include "fbev/format.hpp"

#include <cmath>
#include <fstream>
#include <set>
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

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

struct LineContext {
    const std::string& source;
    int line;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ValidationError(source + ":" + std::to_string(line) + ": " + msg);
    }

    double number(const std::string& tok) const {
        double v = 0.0;
        if (!parse_double(tok, v)) fail("expected a number, got '" + tok + "'");
        return v;
    }

    int integer(const std::string& tok) const {
        long long v = 0;
        if (!parse_int(tok, v) || v <= 0 || v > 1'000'000)
            fail("expected a positive integer, got '" + tok + "'");
        return static_cast<int>(v);
    }
};

struct CameraBlock {
    RigCamera rig;
    std::set<std::string> seen;
    bool has_pose = false;
};

void apply_key(CameraBlock& block, const std::vector<std::string>& tok, const LineContext& ctx,
               const std::filesystem::path& base_dir) {
    const std::string& key = tok[0];
    const std::size_t argc = tok.size() - 1;
    auto expect = [&](std::size_t n) {
        if (argc != n)
            ctx.fail("key '" + key + "' takes " + std::to_string(n) + " value(s), got " +
                     std::to_string(argc));
    };
    if (!block.seen.insert(key).second) ctx.fail("duplicate key '" + key + "'");

    MeiCamera& cam = block.rig.camera;
    if (key == "xi") {
        expect(1);
        cam.xi = ctx.number(tok[1]);
    } else if (key == "k1") {
        expect(1);
        cam.k1 = ctx.number(tok[1]);
    } else if (key == "k2") {
        expect(1);
        cam.k2 = ctx.number(tok[1]);
    } else if (key == "fx") {
        expect(1);
        cam.fx = ctx.number(tok[1]);
    } else if (key == "fy") {
        expect(1);
        cam.fy = ctx.number(tok[1]);
    } else if (key == "cx") {
        expect(1);
        cam.cx = ctx.number(tok[1]);
    } else if (key == "cy") {
        expect(1);
        cam.cy = ctx.number(tok[1]);
    } else if (key == "width") {
        expect(1);
        cam.width = ctx.integer(tok[1]);
    } else if (key == "height") {
        expect(1);
        cam.height = ctx.integer(tok[1]);
    } else if (key == "crop") {
        expect(2);
        cam.crop_offset = Vec2(ctx.number(tok[1]), ctx.number(tok[2]));
    } else if (key == "kitti360_yaml") {
        expect(1);
        const std::filesystem::path path = base_dir / tok[1];
        MeiCamera loaded = parse_kitti360_mei_yaml(read_text_file(path), path.string());
        loaded.name = cam.name;
        loaded.crop_offset = cam.crop_offset;
        cam = loaded;
    } else if (key == "cam_to_ego_quat" || key == "cam_to_ego_matrix") {
        if (block.has_pose) ctx.fail("camera pose given twice");
        block.has_pose = true;
        if (key == "cam_to_ego_quat") {
            expect(7);
            double v[7];
            for (int i = 0; i < 7; ++i) v[i] = ctx.number(tok[static_cast<std::size_t>(i) + 1]);
            const double qn = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]);
            if (std::abs(qn - 1.0) > 1e-6) ctx.fail("cam_to_ego_quat is not unit length");
            block.rig.cam_to_ego = Pose(Quaternion(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6]));
        } else {
            expect(12);
            std::array<double, 12> m{};
            for (std::size_t i = 0; i < 12; ++i) m[i] = ctx.number(tok[i + 1]);
            block.rig.cam_to_ego = Pose::from_matrix_3x4(m);
        }
    } else {
        ctx.fail("unknown key '" + key + "'");
    }
}

}  // namespace

CalibrationSet::CalibrationSet(std::vector<RigCamera> cameras) : cameras_(std::move(cameras)) {
    std::set<std::string> names;
    for (const auto& c : cameras_) {
        c.camera.validate();
        if (c.camera.name.empty()) throw ValidationError("calibration: camera without a name");
        if (!names.insert(c.camera.name).second)
            throw ValidationError("calibration: duplicate camera '" + c.camera.name + "'");
    }
}

bool CalibrationSet::contains(const std::string& name) const {
    for (const auto& c : cameras_)
        if (c.camera.name == name) return true;
    return false;
}

const RigCamera& CalibrationSet::at(const std::string& name) const {
    for (const auto& c : cameras_)
        if (c.camera.name == name) return c;
    throw ValidationError("calibration: unknown camera '" + name + "'");
}

CalibrationSet parse_calibration(const std::string& text, const std::filesystem::path& base_dir,
                                 const std::string& source_name) {
    std::vector<RigCamera> cameras;
    std::optional<CameraBlock> block;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto tok = split_ws(strip_comment(raw));
        if (tok.empty()) continue;
        const LineContext ctx{source_name, line_no};
        if (tok[0] == "camera") {
            if (block) ctx.fail("nested 'camera' block (missing 'end')");
            if (tok.size() != 2) ctx.fail("'camera' takes exactly one name");
            block.emplace();
            block->rig.camera.name = tok[1];
        } else if (tok[0] == "end") {
            if (!block) ctx.fail("'end' without 'camera'");
            if (!block->has_pose) ctx.fail("camera '" + block->rig.camera.name + "' has no pose");
            if (!block->seen.count("kitti360_yaml")) {
                for (const char* req : {"fx", "fy", "cx", "cy", "width", "height"})
                    if (!block->seen.count(req))
                        ctx.fail("camera '" + block->rig.camera.name + "' is missing '" + req + "'");
            }
            try {
                block->rig.camera.validate();
            } catch (const ValidationError& e) {
                ctx.fail(e.what());
            }
            cameras.push_back(block->rig);
            block.reset();
        } else {
            if (!block) ctx.fail("key '" + tok[0] + "' outside a camera block");
            apply_key(*block, tok, ctx, base_dir);
        }
    }
    if (block) throw ValidationError(source_name + ": unterminated camera block");
    return CalibrationSet(std::move(cameras));
}

CalibrationSet load_calibration(const std::filesystem::path& path) {
    return parse_calibration(read_text_file(path), path.parent_path(), path.string());
}

std::string format_calibration(const CalibrationSet& set) {
    std::ostringstream os;
    os << "# fbev calibration\n";
    for (const auto& rc : set.cameras()) {
        const MeiCamera& c = rc.camera;
        os << "camera " << c.name << '\n'
           << "  xi " << format_double(c.xi) << '\n'
           << "  k1 " << format_double(c.k1) << '\n'
           << "  k2 " << format_double(c.k2) << '\n'
           << "  fx " << format_double(c.fx) << '\n'
           << "  fy " << format_double(c.fy) << '\n'
           << "  cx " << format_double(c.cx) << '\n'
           << "  cy " << format_double(c.cy) << '\n'
           << "  width " << c.width << '\n'
           << "  height " << c.height << '\n'
           << "  crop " << format_double(c.crop_offset.x()) << ' '
           << format_double(c.crop_offset.y()) << '\n';
        const auto q = rc.cam_to_ego.rotation().wxyz();
        const Vec3& t = rc.cam_to_ego.translation();
        os << "  cam_to_ego_quat";
        for (double v : q) os << ' ' << format_double(v);
        for (int i = 0; i < 3; ++i) os << ' ' << format_double(t[i]);
        os << "\nend\n";
    }
    return os.str();
}

MeiCamera parse_kitti360_mei_yaml(const std::string& text, const std::string& source_name) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string raw;
    while (std::getline(is, raw)) {
        const auto colon = raw.find(':');
        if (colon == std::string::npos || raw.rfind('%', 0) == 0) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(raw.substr(0, colon));
        const std::string value = trim(raw.substr(colon + 1));
        if (!value.empty()) kv[key] = value;
    }
    auto number = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ValidationError(source_name + ": missing '" + key + "'");
        double v = 0.0;
        if (!parse_double(it->second, v))
            throw ValidationError(source_name + ": bad number for '" + key + "'");
        return v;
    };
    if (kv.count("model_type") && kv["model_type"] != "MEI")
        throw ValidationError(source_name + ": model_type is not MEI");
    MeiCamera cam;
    cam.name = kv.count("camera_name") ? kv["camera_name"] : std::string();
    cam.xi = number("xi");
    cam.k1 = number("k1");
    cam.k2 = number("k2");
    cam.fx = number("gamma1");
    cam.fy = number("gamma2");
    cam.cx = number("u0");
    cam.cy = number("v0");
    cam.width = static_cast<int>(number("image_width"));
    cam.height = static_cast<int>(number("image_height"));
    return cam;
}

std::map<std::string, Pose> parse_kitti360_cam_to_pose(const std::string& text,
                                                       const std::string& source_name) {
    std::map<std::string, Pose> out;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        auto tok = split_ws(raw);
        if (tok.empty()) continue;
        const LineContext ctx{source_name, line_no};
        std::string name = tok[0];
        if (name.empty() || name.back() != ':') ctx.fail("expected '<camera>:' prefix");
        name.pop_back();
        if (tok.size() != 13) ctx.fail("expected 12 matrix values");
        std::array<double, 12> m{};
        for (std::size_t i = 0; i < 12; ++i) m[i] = ctx.number(tok[i + 1]);
        out[name] = Pose::from_matrix_3x4(m);
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw IoError(path.string(), "read failed");
    return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace fbev
